//! Depth-first branch-and-bound over (crew, next-job) tour extensions.
//!
//! Crews are filled in index order. At any node the active crew either picks
//! a next job (candidates ordered by descending gain, ties by ascending id)
//! or closes its tour and hands over to the next crew. Electrical continuity
//! is an aggregate window-end condition, so it is enforced when all crews
//! have closed; during the search a job is only branch-eligible while each
//! of its unscheduled precedence ancestors could still fit into some open
//! crew's remaining capacity.
//!
//! The bound at a node is the gain collected so far plus the gains of all
//! unscheduled jobs that individually fit some open crew's capacity,
//! ignoring travel beyond the free legs and ignoring precedence. Dropping
//! constraints can only raise the attainable value, so the bound is
//! admissible and the search exact.

use super::{objective_terms, Schedule, SearchLimits, Solution, SolveStatus};
use crate::model::{CrewSpec, HomeDegree, ModelOptions};
use crate::transform::{PrecedenceDag, WorkingGraph};
use std::time::Instant;

const LIMIT_CHECK_INTERVAL: u64 = 512;
const MAX_JOBS: usize = 127;

/// Exact solver with its tuning knobs.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    /// Among consecutive crews with equal budgets, force the first job of
    /// the earlier crew to have the smaller node id (idle crews sort last).
    /// Prunes crew permutations without affecting the optimal value.
    pub symmetry_breaking: bool,
}

impl Default for ExactSolver {
    fn default() -> Self {
        Self { symmetry_breaking: true }
    }
}

/// Solves the scheduling problem exactly with default tuning.
pub fn solve_exact(
    gw: &WorkingGraph,
    gwd: &PrecedenceDag,
    crews: &CrewSpec,
    opts: &ModelOptions,
    limits: &SearchLimits,
) -> Solution {
    ExactSolver::default().solve(gw, gwd, crews, opts, limits)
}

impl ExactSolver {
    pub fn solve(
        &self,
        gw: &WorkingGraph,
        gwd: &PrecedenceDag,
        crews: &CrewSpec,
        opts: &ModelOptions,
        limits: &SearchLimits,
    ) -> Solution {
        let started = Instant::now();
        let mut search = Search::new(self, gw, gwd, crews, opts, limits, started);

        // A relaxed or parking-mode search always has the all-idle schedule.
        if !search.strict {
            let m = crews.crew_count();
            search.best =
                Some(Incumbent { value: search.constant, tours: vec![Vec::new(); m] });
        }

        search.dfs();

        let elapsed = started.elapsed();
        let nodes = search.nodes;
        let m = crews.crew_count();
        let frontier = search.frontier_upper_bound();
        let best = search.best.take();
        match best {
            Some(inc) => {
                let exhausted = !search.aborted;
                let optimal = exhausted || search.proven;
                let upper = if optimal { inc.value } else { frontier };
                let schedules: Vec<Schedule> =
                    inc.tours.into_iter().map(Schedule::new).collect();
                let aggregate_reward: f64 =
                    schedules.iter().flat_map(|s| s.jobs.iter()).map(|&j| gw.reward(j)).sum();
                Solution {
                    schedules,
                    objective: inc.value,
                    aggregate_reward,
                    lower_bound: inc.value,
                    upper_bound: upper,
                    status: if optimal { SolveStatus::Optimal } else { SolveStatus::Feasible },
                    nodes_explored: nodes,
                    elapsed,
                }
            }
            None => {
                let (status, upper) = if search.aborted {
                    (SolveStatus::Limit, frontier)
                } else {
                    (SolveStatus::Infeasible, f64::NEG_INFINITY)
                };
                Solution {
                    schedules: vec![Schedule::default(); m],
                    objective: 0.0,
                    aggregate_reward: 0.0,
                    lower_bound: f64::NEG_INFINITY,
                    upper_bound: upper,
                    status,
                    nodes_explored: nodes,
                    elapsed,
                }
            }
        }
    }
}

struct Incumbent {
    value: f64,
    tours: Vec<Vec<usize>>,
}

struct State {
    tours: Vec<Vec<usize>>,
    spent: Vec<f64>,
    scheduled: u128,
    gain: f64,
    crew: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Move {
    Extend(usize),
    Close,
}

struct Search<'a> {
    gw: &'a WorkingGraph,
    gains: Vec<f64>,
    constant: f64,
    parent: Vec<Option<usize>>,
    budgets: Vec<f64>,
    suffix_max: Vec<f64>,
    strict: bool,
    symmetry_breaking: bool,
    order: Vec<usize>,
    deadline: Option<Instant>,
    node_limit: Option<u64>,
    gap_target: Option<f64>,
    nodes: u64,
    best: Option<Incumbent>,
    /// Upper bounds of children not yet fully explored, one vector per open
    /// tree level; consumed entries are set to -inf. The max over this
    /// structure is a valid upper bound on everything still unexplored.
    pending: Vec<Vec<f64>>,
    state: State,
    aborted: bool,
    /// Set when a zero gap target proves the incumbent optimal early.
    proven: bool,
}

impl<'a> Search<'a> {
    fn new(
        solver: &ExactSolver,
        gw: &'a WorkingGraph,
        gwd: &PrecedenceDag,
        crews: &CrewSpec,
        opts: &ModelOptions,
        limits: &SearchLimits,
        started: Instant,
    ) -> Self {
        assert!(gw.job_count() <= MAX_JOBS, "exact solver is limited to {MAX_JOBS} jobs");
        assert_eq!(gwd.node_count, gw.node_count(), "working graphs disagree on node count");

        let m = crews.crew_count();
        assert!(m >= 1, "need at least one crew");
        let budgets: Vec<f64> = (0..m).map(|c| crews.effective_budget(c)).collect();
        let mut suffix_max = vec![f64::NEG_INFINITY; m + 1];
        for c in (0..m).rev() {
            suffix_max[c] = suffix_max[c + 1].max(budgets[c]);
        }

        let (gains, constant) = objective_terms(gw, opts, m);
        let parent = gwd.parent_map().expect("precedence dag must be a forest");
        let strict = matches!(opts.home_degree, HomeDegree::Strict);

        // Branch order: descending gain, ties by ascending node id.
        let mut order: Vec<usize> = gw.jobs().collect();
        order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then_with(|| a.cmp(&b)));

        Search {
            gw,
            gains,
            constant,
            parent,
            budgets,
            suffix_max,
            strict,
            symmetry_breaking: solver.symmetry_breaking,
            order,
            deadline: limits.time_limit.map(|d| started + d),
            node_limit: limits.node_limit,
            gap_target: limits.absolute_gap,
            nodes: 0,
            best: None,
            pending: Vec::new(),
            state: State {
                tours: vec![Vec::new(); m],
                spent: vec![0.0; m],
                scheduled: 0,
                gain: 0.0,
                crew: 0,
            },
            aborted: false,
            proven: false,
        }
    }

    fn best_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.value)
    }

    fn frontier_upper_bound(&self) -> f64 {
        let mut ub = self.best_value();
        for level in &self.pending {
            for &b in level {
                ub = ub.max(b);
            }
        }
        ub
    }

    fn hit_limit(&mut self) -> bool {
        if let Some(limit) = self.node_limit {
            if self.nodes >= limit {
                return true;
            }
        }
        if self.nodes.is_multiple_of(LIMIT_CHECK_INTERVAL) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return true;
                }
            }
            if let (Some(gap), Some(_)) = (self.gap_target, self.best.as_ref()) {
                if self.frontier_upper_bound() - self.best_value() <= gap {
                    if gap <= 0.0 {
                        self.proven = true;
                    }
                    return true;
                }
            }
        }
        false
    }

    /// `true` while nothing forced an abort.
    fn dfs(&mut self) -> bool {
        self.nodes += 1;
        let m = self.budgets.len();
        if self.state.crew == m {
            if self.hit_limit() {
                self.aborted = !self.proven;
                return false;
            }
            self.complete();
            return true;
        }

        let moves = self.moves();
        let mut bounds = Vec::with_capacity(moves.len());
        for &mv in &moves {
            self.apply(mv);
            bounds.push(self.bound());
            self.undo(mv);
        }
        // The children's bounds go into `pending` before the limit check so
        // that an abort anywhere leaves this whole subtree covered by the
        // frontier bound.
        self.pending.push(bounds.clone());
        let level = self.pending.len() - 1;
        if self.hit_limit() {
            self.aborted = !self.proven;
            return false;
        }

        for (i, &mv) in moves.iter().enumerate() {
            // Explore only children that can beat the incumbent; ties keep
            // the first solution found, which fixes determinism.
            if bounds[i] > self.best_value() || self.best.is_none() {
                self.apply(mv);
                let ok = self.dfs();
                self.undo(mv);
                if !ok {
                    // Aborted: leave this child and the remaining siblings in
                    // `pending` so the frontier bound still covers them.
                    return false;
                }
            }
            self.pending[level][i] = f64::NEG_INFINITY;
        }
        self.pending.pop();
        true
    }

    /// Window-end electrical continuity over the aggregate repair set: every
    /// scheduled job's precedence parent is the root or scheduled. Parents
    /// of parents are covered by their own iteration.
    fn continuity_holds(&self) -> bool {
        let sched = self.state.scheduled;
        let mut cur = sched;
        while cur != 0 {
            let j = cur.trailing_zeros() as usize;
            cur &= cur - 1;
            if let Some(p) = self.parent[j] {
                if p != 0 && sched & (1u128 << p) == 0 {
                    return false;
                }
            }
        }
        true
    }

    fn complete(&mut self) {
        if !self.continuity_holds() {
            return; // infeasible leaf
        }
        let value = self.state.gain + self.constant;
        if self.best.as_ref().is_none_or(|b| value > b.value) {
            self.best = Some(Incumbent { value, tours: self.state.tours.clone() });
        }
    }

    fn moves(&self) -> Vec<Move> {
        let k = self.state.crew;
        let mut moves = Vec::new();

        // Symmetry breaking among equal-budget neighbours.
        let mut first_job_floor: Option<usize> = None;
        let mut jobs_allowed = true;
        if self.symmetry_breaking
            && self.state.tours[k].is_empty()
            && k > 0
            && self.budgets[k] == self.budgets[k - 1]
        {
            match self.state.tours[k - 1].first() {
                Some(&jf) => first_job_floor = Some(jf),
                None => jobs_allowed = false, // empties sort last
            }
        }

        if jobs_allowed {
            let remaining = self.budgets[k] - self.state.spent[k];
            let future_max = self.suffix_max[k + 1];
            let cap = remaining.max(future_max);
            let pos = self.state.tours[k].last().copied();
            for &j in &self.order {
                if self.state.scheduled & (1u128 << j) != 0 {
                    continue;
                }
                if self.state.tours[k].is_empty() {
                    if let Some(floor) = first_job_floor {
                        if j <= floor {
                            continue;
                        }
                    }
                }
                let travel = pos.map_or(0.0, |p| self.gw.travel(p, j));
                if self.state.spent[k] + travel + self.gw.repair(j) > self.budgets[k] {
                    continue;
                }
                if !self.ancestors_schedulable(j, cap) {
                    continue;
                }
                moves.push(Move::Extend(j));
            }
        }

        if !self.strict || !self.state.tours[k].is_empty() {
            moves.push(Move::Close);
        }
        moves
    }

    /// Every unscheduled precedence ancestor of `j` must still fit into some
    /// open crew's capacity, otherwise no completion of this branch can
    /// satisfy continuity. Capacities are taken before `j` is placed, which
    /// overestimates and therefore never prunes a feasible completion.
    fn ancestors_schedulable(&self, j: usize, cap: f64) -> bool {
        let mut cur = j;
        while let Some(p) = self.parent[cur] {
            if p == 0 {
                return true;
            }
            if self.state.scheduled & (1u128 << p) == 0 && self.gw.repair(p) > cap {
                return false;
            }
            cur = p;
        }
        true
    }

    fn bound(&self) -> f64 {
        let k = self.state.crew;
        let m = self.budgets.len();
        if k == m {
            return self.state.gain + self.constant;
        }
        let cap = (self.budgets[k] - self.state.spent[k]).max(self.suffix_max[k + 1]);
        let mut b = self.state.gain;
        for j in self.gw.jobs() {
            if self.state.scheduled & (1u128 << j) == 0 && self.gw.repair(j) <= cap {
                b += self.gains[j];
            }
        }
        b + self.constant
    }

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Extend(j) => {
                let k = self.state.crew;
                let travel =
                    self.state.tours[k].last().map_or(0.0, |&p| self.gw.travel(p, j));
                self.state.spent[k] += travel + self.gw.repair(j);
                self.state.tours[k].push(j);
                self.state.scheduled |= 1u128 << j;
                self.state.gain += self.gains[j];
            }
            Move::Close => {
                self.state.crew += 1;
            }
        }
    }

    fn undo(&mut self, mv: Move) {
        match mv {
            Move::Extend(j) => {
                let k = self.state.crew;
                self.state.tours[k].pop();
                let travel =
                    self.state.tours[k].last().map_or(0.0, |&p| self.gw.travel(p, j));
                self.state.spent[k] -= travel + self.gw.repair(j);
                self.state.scheduled &= !(1u128 << j);
                self.state.gain -= self.gains[j];
            }
            Move::Close => {
                self.state.crew -= 1;
            }
        }
    }
}
