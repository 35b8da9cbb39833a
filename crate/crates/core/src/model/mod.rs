//! Mixed-integer model of the crew scheduling problem.
//!
//! [`assemble`] turns a collapsed working graph plus crew budgets into a
//! solver-neutral [`MilpInstance`]: a variable registry (tour selection `y`,
//! edge usage `x`, subtour-elimination flows `f`) and linear rows tagged by
//! [`RowGroup`]. The instance can be checked against a full assignment with
//! [`MilpInstance::evaluate`] and exported as free-format MPS or CPLEX-style
//! LP text (see [`export`]).

mod export;

pub use export::{write_lp, write_mps};

use crate::solve::Schedule;
use crate::transform::{PrecedenceDag, WorkingGraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("nothing to schedule: the working graph has no damaged nodes")]
    NothingToSchedule,
    #[error("working graph is not collapsed: node {0} is neither root nor damaged")]
    NotCollapsed(usize),
    #[error("assignment is missing variable {0}")]
    MissingVariable(String),
    #[error("crew count must be at least 1")]
    NoCrews,
}

/// Per-crew time budgets plus the length of the restoration window. The
/// budget that binds for crew `c` is `min(budget_min[c], window_min)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrewSpec {
    pub budget_min: Vec<f64>,
    pub window_min: f64,
}

impl CrewSpec {
    pub fn new(budget_min: Vec<f64>, window_min: f64) -> Self {
        Self { budget_min, window_min }
    }

    /// Uniform budgets, window no shorter than the budget.
    pub fn uniform(crews: usize, budget_min: f64) -> Self {
        Self { budget_min: vec![budget_min; crews], window_min: budget_min }
    }

    pub fn crew_count(&self) -> usize {
        self.budget_min.len()
    }

    pub fn effective_budget(&self, crew: usize) -> f64 {
        self.budget_min[crew].min(self.window_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// Maximize the aggregate reward of scheduled jobs.
    Reward,
    /// Maximize reward minus the penalties of jobs left unscheduled.
    Profit,
}

/// How the degree constraint treats the home node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HomeDegree {
    /// Every crew must leave home (degree exactly 2 at the root). Tight
    /// budgets can make the whole model infeasible.
    Strict,
    /// Root degree at most 2: a crew may stay home.
    Relaxed,
    /// Keep the strict degree but append a zero-reward parking node adjacent
    /// to the root, so an idle crew tours root -> parking -> root for free.
    DummyNode,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelOptions {
    pub objective: ObjectiveKind,
    pub home_degree: HomeDegree,
    /// Emit the triangle valid inequalities (three rows per crew per
    /// unordered triple of non-root nodes). Off by default: they strengthen
    /// the relaxation but grow the row count cubically.
    pub valid_inequalities: bool,
    /// Drop precedence rows whose tail is the root; they are implied because
    /// every crew visits the root.
    pub skip_root_precedence: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            objective: ObjectiveKind::Reward,
            home_degree: HomeDegree::Strict,
            valid_inequalities: false,
            skip_root_precedence: true,
        }
    }
}

impl ModelOptions {
    pub fn with_home_degree(mut self, h: HomeDegree) -> Self {
        self.home_degree = h;
        self
    }

    pub fn with_objective(mut self, o: ObjectiveKind) -> Self {
        self.objective = o;
        self
    }

    pub fn with_valid_inequalities(mut self, on: bool) -> Self {
        self.valid_inequalities = on;
        self
    }

    pub fn with_skip_root_precedence(mut self, on: bool) -> Self {
        self.skip_root_precedence = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

/// Domain-constraint group a variable belongs to, used when a bound or
/// integrality violation is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarGroup {
    /// Tour-selection binaries `y_i_c`.
    Visit,
    /// Root-incident edge usage `x_0_j_c` in {0,1,2}.
    RootEdge,
    /// Non-root edge usage `x_i_j_c` in {0,1}.
    Edge,
    /// Nonnegative continuous flows `f_i_j`.
    Flow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub group: VarGroup,
}

/// Row group labels; one per constraint family of the formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowGroup {
    /// Every crew visits the root: `y_0_c = 1`.
    RootVisit,
    /// Each job is repaired by at most one crew.
    SingleCrew,
    /// Edge degree matches visits: `sum_j x_(ij)c - 2 y_ic = 0` (root row
    /// becomes `<=` under the relaxed home-degree option).
    Degree,
    /// Tour cost (repairs plus travel) within the crew budget.
    Budget,
    /// Electrical continuity: visits of a node cannot exceed visits of its
    /// precedence parent.
    Precedence,
    /// Flow out of the root equals total jobs repaired.
    FlowSource,
    /// Each repaired job absorbs one unit of flow.
    FlowBalance,
    /// Flow allowed only on traveled edges, capped at `n * sum_c x`.
    FlowEdgeCap,
    /// Flow capped by the total number of repaired jobs.
    FlowTotalCap,
    /// Triangle valid inequalities.
    Triangle,
}

impl RowGroup {
    pub fn label(self) -> &'static str {
        match self {
            RowGroup::RootVisit => "root_visit",
            RowGroup::SingleCrew => "single_crew",
            RowGroup::Degree => "degree",
            RowGroup::Budget => "budget",
            RowGroup::Precedence => "precedence",
            RowGroup::FlowSource => "flow_source",
            RowGroup::FlowBalance => "flow_balance",
            RowGroup::FlowEdgeCap => "flow_edge_cap",
            RowGroup::FlowTotalCap => "flow_total_cap",
            RowGroup::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub group: RowGroup,
    pub sense: Sense,
    pub rhs: f64,
    /// Sparse coefficients as (variable index, coefficient).
    pub terms: Vec<(usize, f64)>,
}

/// One reported constraint violation from [`MilpInstance::evaluate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub name: String,
    pub group: Option<RowGroup>,
    pub var_group: Option<VarGroup>,
    pub amount: f64,
}

/// Solver-neutral MILP: variable registry, tagged rows, linear objective
/// (maximization) plus a constant term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpInstance {
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective_constant: f64,
    /// Node count the instance was assembled over (including the parking
    /// node when present).
    pub node_count: usize,
    pub crew_count: usize,
    /// Index of the appended parking node, under the dummy-node option.
    pub parking_node: Option<usize>,
    #[serde(skip)]
    name_index: BTreeMap<String, usize>,
}

pub const EVAL_TOLERANCE: f64 = 1e-9;

impl MilpInstance {
    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.name_index.get(name).map(|&i| &self.variables[i])
    }

    pub fn rows_in(&self, group: RowGroup) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.group == group)
    }

    pub fn count_rows(&self, group: RowGroup) -> usize {
        self.rows_in(group).count()
    }

    pub fn count_vars(&self, group: VarGroup) -> usize {
        self.variables.iter().filter(|v| v.group == group).count()
    }

    /// Checks a complete assignment against every row, every bound, and
    /// every integrality requirement, at absolute tolerance 1e-9. All
    /// constraint coefficients are integers or exact travel values, so the
    /// tolerance is loose.
    pub fn evaluate(
        &self,
        assignment: &BTreeMap<String, f64>,
    ) -> Result<Vec<Violation>, ModelError> {
        let mut values = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            match assignment.get(&v.name) {
                Some(&x) => values.push(x),
                None => return Err(ModelError::MissingVariable(v.name.clone())),
            }
        }

        let mut violations = Vec::new();
        for (v, &x) in self.variables.iter().zip(&values) {
            let mut amount: f64 = 0.0;
            if x < v.lower - EVAL_TOLERANCE {
                amount = amount.max(v.lower - x);
            }
            if x > v.upper + EVAL_TOLERANCE {
                amount = amount.max(x - v.upper);
            }
            if matches!(v.kind, VarKind::Binary | VarKind::Integer) {
                let frac = (x - x.round()).abs();
                if frac > EVAL_TOLERANCE {
                    amount = amount.max(frac);
                }
            }
            if amount > 0.0 {
                violations.push(Violation {
                    name: v.name.clone(),
                    group: None,
                    var_group: Some(v.group),
                    amount,
                });
            }
        }

        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(i, c)| c * values[i]).sum();
            let excess = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if excess > EVAL_TOLERANCE {
                violations.push(Violation {
                    name: row.name.clone(),
                    group: Some(row.group),
                    var_group: None,
                    amount: excess,
                });
            }
        }
        Ok(violations)
    }

    /// Objective value of an assignment (including the constant term).
    pub fn objective_value(&self, assignment: &BTreeMap<String, f64>) -> Result<f64, ModelError> {
        let mut total = self.objective_constant;
        for v in &self.variables {
            let &x = assignment
                .get(&v.name)
                .ok_or_else(|| ModelError::MissingVariable(v.name.clone()))?;
            total += v.objective * x;
        }
        Ok(total)
    }
}

pub fn y_name(i: usize, crew: usize) -> String {
    format!("y_{i}_{crew}")
}

pub fn x_name(i: usize, j: usize, crew: usize) -> String {
    debug_assert!(i < j);
    format!("x_{i}_{j}_{crew}")
}

pub fn f_name(i: usize, j: usize) -> String {
    format!("f_{i}_{j}")
}

struct Indexer {
    n: usize,
    m: usize,
    x_base: usize,
    f_base: usize,
}

impl Indexer {
    fn new(n: usize, m: usize) -> Self {
        let y_count = n * m;
        let x_count = n * (n - 1) / 2 * m;
        Self { n, m, x_base: y_count, f_base: y_count + x_count }
    }

    fn y(&self, i: usize, c: usize) -> usize {
        i * self.m + c
    }

    /// Rank of the unordered pair (i, j), i < j, in lexicographic order.
    fn edge_rank(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn x(&self, i: usize, j: usize, c: usize) -> usize {
        self.x_base + self.edge_rank(i, j) * self.m + c
    }

    fn f(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        // ordered pairs, row-major with the diagonal removed
        self.f_base + i * (self.n - 1) + if j > i { j - 1 } else { j }
    }
}

/// Assembles the MILP for one restoration window.
///
/// The working graph must be collapsed (every non-root node damaged). Under
/// [`HomeDegree::DummyNode`] a parking node is appended before assembly:
/// zero reward, zero repair time, zero travel to and from the root, and
/// travel to any job equal to the physical root-to-job travel, so the node
/// is never useful except as a place for an idle crew to park.
pub fn assemble(
    gw: &WorkingGraph,
    gwd: &PrecedenceDag,
    crews: &CrewSpec,
    opts: &ModelOptions,
) -> Result<MilpInstance, ModelError> {
    let m = crews.crew_count();
    if m == 0 {
        return Err(ModelError::NoCrews);
    }
    if gw.job_count() == 0 {
        return Err(ModelError::NothingToSchedule);
    }
    for i in gw.jobs() {
        if !gw.is_damaged(i) {
            return Err(ModelError::NotCollapsed(i));
        }
    }

    let parking = matches!(opts.home_degree, HomeDegree::DummyNode);
    let base_n = gw.node_count();
    let n = base_n + usize::from(parking);
    let parking_node = parking.then_some(base_n);

    // Node attributes over the extended node set.
    let repair = |i: usize| if i < base_n { gw.repair(i) } else { 0.0 };
    let reward = |i: usize| if i < base_n { gw.reward(i) } else { 0.0 };
    let penalty = |i: usize| if i < base_n { gw.penalty(i) } else { 0.0 };
    let travel = |i: usize, j: usize| -> f64 {
        if i == j {
            return 0.0;
        }
        match (i < base_n, j < base_n) {
            (true, true) => gw.travel(i, j),
            // parking node: free to/from the root, physical distance to jobs
            (false, true) => {
                if j == 0 {
                    0.0
                } else {
                    gw.root_travel(j)
                }
            }
            (true, false) => {
                if i == 0 {
                    0.0
                } else {
                    gw.root_travel(i)
                }
            }
            (false, false) => 0.0,
        }
    };
    // Jobs that carry reward and the at-most-one-crew rule; the parking node
    // is visitable (y, degree, flow) but excluded here so several idle crews
    // can park at once.
    let is_job = |i: usize| i >= 1 && i < base_n;

    let idx = Indexer::new(n, m);
    let mut variables = Vec::with_capacity(idx.f_base + n * (n - 1));

    let mut objective_constant = 0.0;
    if opts.objective == ObjectiveKind::Profit {
        let total_penalty: f64 = gw.jobs().map(&penalty).sum();
        objective_constant = -(m as f64) * total_penalty;
    }

    for i in 0..n {
        for c in 0..m {
            let obj = if is_job(i) {
                match opts.objective {
                    ObjectiveKind::Reward => reward(i),
                    ObjectiveKind::Profit => reward(i) + penalty(i),
                }
            } else {
                0.0
            };
            variables.push(Variable {
                name: y_name(i, c + 1),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
                objective: obj,
                group: VarGroup::Visit,
            });
        }
    }
    for i in 0..n - 1 {
        for j in i + 1..n {
            for c in 0..m {
                let root_edge = i == 0;
                variables.push(Variable {
                    name: x_name(i, j, c + 1),
                    kind: VarKind::Integer,
                    lower: 0.0,
                    upper: if root_edge { 2.0 } else { 1.0 },
                    objective: 0.0,
                    group: if root_edge { VarGroup::RootEdge } else { VarGroup::Edge },
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                variables.push(Variable {
                    name: f_name(i, j),
                    kind: VarKind::Continuous,
                    lower: 0.0,
                    upper: f64::INFINITY,
                    objective: 0.0,
                    group: VarGroup::Flow,
                });
            }
        }
    }

    let mut rows = Vec::new();

    for c in 0..m {
        rows.push(Row {
            name: format!("root_visit_{}", c + 1),
            group: RowGroup::RootVisit,
            sense: Sense::Eq,
            rhs: 1.0,
            terms: vec![(idx.y(0, c), 1.0)],
        });
    }

    for i in 1..n {
        if !is_job(i) {
            continue;
        }
        rows.push(Row {
            name: format!("single_crew_{i}"),
            group: RowGroup::SingleCrew,
            sense: Sense::Le,
            rhs: 1.0,
            terms: (0..m).map(|c| (idx.y(i, c), 1.0)).collect(),
        });
    }

    for i in 0..n {
        for c in 0..m {
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(n);
            for j in 0..n {
                if j != i {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    terms.push((idx.x(a, b, c), 1.0));
                }
            }
            terms.push((idx.y(i, c), -2.0));
            let sense = if i == 0 && matches!(opts.home_degree, HomeDegree::Relaxed) {
                Sense::Le
            } else {
                Sense::Eq
            };
            rows.push(Row {
                name: format!("degree_{i}_{}", c + 1),
                group: RowGroup::Degree,
                sense,
                rhs: 0.0,
                terms,
            });
        }
    }

    for c in 0..m {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for i in 1..n {
            if repair(i) != 0.0 {
                terms.push((idx.y(i, c), repair(i)));
            }
        }
        for i in 0..n - 1 {
            for j in i + 1..n {
                let t = travel(i, j);
                if t != 0.0 {
                    terms.push((idx.x(i, j, c), t));
                }
            }
        }
        rows.push(Row {
            name: format!("budget_{}", c + 1),
            group: RowGroup::Budget,
            sense: Sense::Le,
            rhs: crews.effective_budget(c),
            terms,
        });
    }

    for &(i, j) in &gwd.arcs {
        if i == 0 && opts.skip_root_precedence {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = (0..m).map(|c| (idx.y(i, c), 1.0)).collect();
        terms.extend((0..m).map(|c| (idx.y(j, c), -1.0)));
        rows.push(Row {
            name: format!("precedence_{i}_{j}"),
            group: RowGroup::Precedence,
            sense: Sense::Ge,
            rhs: 0.0,
            terms,
        });
    }

    // Flow-based subtour elimination. The parking node participates like a
    // job so that flow conservation stays exact when crews park.
    let visited_terms = |sign: f64| -> Vec<(usize, f64)> {
        let mut t = Vec::new();
        for i in 1..n {
            for c in 0..m {
                t.push((idx.y(i, c), sign));
            }
        }
        t
    };
    {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 1..n {
            terms.push((idx.f(0, j), 1.0));
            terms.push((idx.f(j, 0), -1.0));
        }
        terms.extend(visited_terms(-1.0));
        rows.push(Row {
            name: "flow_source".into(),
            group: RowGroup::FlowSource,
            sense: Sense::Eq,
            rhs: 0.0,
            terms,
        });
    }
    for i in 1..n {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if j != i {
                terms.push((idx.f(i, j), 1.0));
                terms.push((idx.f(j, i), -1.0));
            }
        }
        for c in 0..m {
            terms.push((idx.y(i, c), 1.0));
        }
        rows.push(Row {
            name: format!("flow_balance_{i}"),
            group: RowGroup::FlowBalance,
            sense: Sense::Eq,
            rhs: 0.0,
            terms,
        });
    }
    for i in 0..n - 1 {
        for j in i + 1..n {
            for (a, b) in [(i, j), (j, i)] {
                let mut terms = vec![(idx.f(a, b), 1.0)];
                for c in 0..m {
                    terms.push((idx.x(i, j, c), -(n as f64)));
                }
                rows.push(Row {
                    name: format!("flow_edge_cap_{a}_{b}"),
                    group: RowGroup::FlowEdgeCap,
                    sense: Sense::Le,
                    rhs: 0.0,
                    terms,
                });
            }
        }
    }
    for i in 0..n - 1 {
        for j in i + 1..n {
            for (a, b) in [(i, j), (j, i)] {
                let mut terms = vec![(idx.f(a, b), 1.0)];
                terms.extend(visited_terms(-1.0));
                rows.push(Row {
                    name: format!("flow_total_cap_{a}_{b}"),
                    group: RowGroup::FlowTotalCap,
                    sense: Sense::Le,
                    rhs: 0.0,
                    terms,
                });
            }
        }
    }

    if opts.valid_inequalities {
        for i in 1..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for c in 0..m {
                        let xs = [
                            (idx.x(i, j, c), 1.0),
                            (idx.x(j, k, c), 1.0),
                            (idx.x(i, k, c), 1.0),
                        ];
                        for (tag, (p, q)) in [(i, j), (j, k), (i, k)].into_iter().enumerate() {
                            let mut terms = xs.to_vec();
                            terms.push((idx.y(p, c), -1.0));
                            terms.push((idx.y(q, c), -1.0));
                            rows.push(Row {
                                name: format!("triangle_{i}_{j}_{k}_{}_{}", c + 1, tag),
                                group: RowGroup::Triangle,
                                sense: Sense::Le,
                                rhs: 0.0,
                                terms,
                            });
                        }
                    }
                }
            }
        }
    }

    let name_index = variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    Ok(MilpInstance {
        variables,
        rows,
        objective_constant,
        node_count: n,
        crew_count: m,
        parking_node,
        name_index,
    })
}

/// Expands per-crew tours into a complete variable assignment for the
/// instance, routing one unit of flow from the root to every visited node
/// along its tour. Idle crews park at the parking node when the instance has
/// one.
pub fn encode_schedules(instance: &MilpInstance, schedules: &[Schedule]) -> BTreeMap<String, f64> {
    let m = instance.crew_count;
    assert_eq!(schedules.len(), m);
    let mut assignment: BTreeMap<String, f64> = BTreeMap::new();
    for v in &instance.variables {
        assignment.insert(v.name.clone(), 0.0);
    }

    let mut bump = |name: String, delta: f64| {
        *assignment.get_mut(&name).expect("variable exists") += delta;
    };

    for (c, schedule) in schedules.iter().enumerate() {
        let crew = c + 1;
        bump(y_name(0, crew), 1.0);
        let tour: Vec<usize> = if schedule.jobs.is_empty() {
            match instance.parking_node {
                Some(p) => vec![p],
                None => continue,
            }
        } else {
            schedule.jobs.clone()
        };

        for &job in &tour {
            bump(y_name(job, crew), 1.0);
        }
        // x: root -> first, consecutive legs, last -> root. A single-node
        // tour uses its root edge twice.
        if tour.len() == 1 {
            bump(x_name(0, tour[0], crew), 2.0);
        } else {
            bump(x_name(0, tour[0], crew), 1.0);
            for w in tour.windows(2) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                bump(x_name(a, b, crew), 1.0);
            }
            bump(x_name(0, *tour.last().unwrap(), crew), 1.0);
        }
        // Flow: the root pushes |tour| units down the tour; each node keeps
        // one.
        let mut prev = 0usize;
        let mut remaining = tour.len() as f64;
        for &job in &tour {
            bump(f_name(prev, job), remaining);
            remaining -= 1.0;
            prev = job;
        }
    }
    assignment
}
