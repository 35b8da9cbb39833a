//! Rolling-horizon restoration across windows.
//!
//! Each window rebuilds the working graphs from the currently energized
//! region and the pending job set, plans with the exact solver, and then
//! executes the plan crew by crew using actual repair durations when the
//! scenario provides them. A job whose actual time overruns the budget
//! carries into the next window with the residual as its new estimate; a
//! completed job whose precedence chain is not finished by window end stays
//! pending as "repaired, awaiting energization" with zero residual time and
//! its reward intact. At the end of every window, exactly the completed
//! jobs whose pending precedence chain is fully completed are energized, and
//! only energized jobs earn their reward.

use crate::model::{CrewSpec, ModelOptions};
use crate::net::{validate_radial, BusId, DistributionNetwork, NetError, TransportGraph};
use crate::solve::{solve_exact, Schedule, SearchLimits, Solution, SolveStatus};
use crate::transform::{build_working_graphs, TransformError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("scenario network is not radial: {0}")]
    NotRadial(String),
    #[error("arrival references line ({from},{to}) which is not in the network")]
    UnknownLine { from: BusId, to: BusId },
    #[error("arrival window {0} is before the first window")]
    BadArrivalWindow(usize),
    #[error("window {0} is out of range")]
    BadWindow(usize),
    #[error("arrival line ({from},{to}) lies inside the energized region")]
    ArrivalInsideEnergized { from: BusId, to: BusId },
    #[error("arrival on line ({from},{to}) has a negative estimate or nonpositive actual time")]
    BadArrivalTimes { from: BusId, to: BusId },
    #[error("planning window {window} is infeasible under the strict home-degree rule")]
    Infeasible { window: usize },
    #[error("duplicate pending job on line ({from},{to})")]
    DuplicatePending { from: BusId, to: BusId },
}

/// Budget layout of one restoration window. Crew rosters may differ from
/// window to window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSpec {
    pub duration_min: f64,
    pub crew_budgets_min: Vec<f64>,
}

/// One damage report: the line becomes a pending job at the start of window
/// `window` (1-based; 0 and 1 both mean "known before work starts").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arrival {
    pub window: usize,
    pub from: BusId,
    pub to: BusId,
    pub estimate_min: f64,
    pub reward: f64,
    #[serde(default)]
    pub penalty: f64,
    /// True duration, revealed only during execution. Defaults to the
    /// estimate.
    #[serde(default)]
    pub actual_min: Option<f64>,
}

/// Scenario file contents. `transport` defaults to the power network itself
/// and `speed_ft_min` may be omitted to ignore travel times entirely.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub network: DistributionNetwork,
    #[serde(default)]
    pub transport: Option<TransportGraph>,
    #[serde(default)]
    pub speed_ft_min: Option<f64>,
    pub windows: Vec<WindowSpec>,
    #[serde(default)]
    pub arrivals: Vec<Arrival>,
    /// Energized buses at the start; defaults to just the source.
    #[serde(default)]
    pub initial_energized: Option<Vec<BusId>>,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn transport_graph(&self) -> TransportGraph {
        self.transport.clone().unwrap_or_else(|| TransportGraph::from_distribution(&self.network))
    }

    pub fn speed(&self) -> f64 {
        self.speed_ft_min.unwrap_or(f64::INFINITY)
    }

    /// Structural validation before any window runs: the network must be
    /// radial, every arrival must name a real line, and every job site must
    /// be reachable from every other one over the transport graph.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let report = validate_radial(&self.network);
        if !report.is_valid() {
            return Err(ScenarioError::NotRadial(report.to_string()));
        }
        for a in &self.arrivals {
            let exists = self
                .network
                .lines
                .iter()
                .any(|l| (l.u, l.v) == (a.from, a.to) || (l.u, l.v) == (a.to, a.from));
            if !exists {
                return Err(ScenarioError::UnknownLine { from: a.from, to: a.to });
            }
            if a.estimate_min < 0.0 || a.actual_min.is_some_and(|t| t <= 0.0) {
                return Err(ScenarioError::BadArrivalTimes { from: a.from, to: a.to });
            }
        }
        // Every bus is a potential job site, so the road map must cover and
        // connect all of them.
        let transport = self.transport_graph();
        let covered = transport.nodes();
        for bus in self.network.buses() {
            if !covered.contains(&bus) {
                return Err(ScenarioError::Transform(TransformError::Unreachable {
                    a: self.network.source,
                    b: bus,
                }));
            }
        }
        crate::transform::apsp(&transport)?;
        Ok(())
    }
}

/// A job waiting to be scheduled (or, when `repaired` is set, waiting only
/// for energization).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PendingJob {
    pub from: BusId,
    pub to: BusId,
    /// Estimated mean residual repair time used for planning.
    pub estimate_min: f64,
    pub reward: f64,
    pub penalty: f64,
    pub actual_min: Option<f64>,
    /// Repair already finished in an earlier window; the job re-enters the
    /// damaged set at zero cost so its reward stays claimable once
    /// continuity is established.
    pub repaired: bool,
}

impl PendingJob {
    fn from_arrival(a: &Arrival) -> Self {
        Self {
            from: a.from,
            to: a.to,
            estimate_min: a.estimate_min,
            reward: a.reward,
            penalty: a.penalty,
            actual_min: a.actual_min,
            repaired: false,
        }
    }

    fn actual(&self) -> f64 {
        self.actual_min.unwrap_or(self.estimate_min)
    }

    fn matches(&self, u: BusId, v: BusId) -> bool {
        (self.from, self.to) == (u, v) || (self.from, self.to) == (v, u)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestorationState {
    pub energized: BTreeSet<BusId>,
    pub pending: Vec<PendingJob>,
    /// 1-based index of the next window to run.
    pub window: usize,
}

impl RestorationState {
    pub fn initial(scenario: &Scenario) -> Self {
        let energized = match &scenario.initial_energized {
            Some(buses) => buses.iter().copied().collect(),
            None => BTreeSet::from([scenario.network.source]),
        };
        let pending = scenario
            .arrivals
            .iter()
            .filter(|a| a.window <= 1)
            .map(PendingJob::from_arrival)
            .collect();
        Self { energized, pending, window: 1 }
    }
}

/// What one crew actually did during a window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutedLeg {
    pub from: BusId,
    pub to: BusId,
    pub travel_min: f64,
    pub worked_min: f64,
    pub completed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: usize,
    pub planned: Solution,
    pub executed: Vec<Vec<ExecutedLeg>>,
    /// Lines whose repair finished during this window (or earlier, for
    /// re-scheduled repaired-awaiting jobs).
    pub completed: Vec<(BusId, BusId)>,
    /// Completed lines whose full pending precedence chain completed; these
    /// earn their reward now.
    pub energized: Vec<(BusId, BusId)>,
    pub reward_earned: f64,
    /// Jobs that carry into the next window.
    pub carried: Vec<PendingJob>,
}

fn empty_result(window: usize, crews: usize) -> WindowResult {
    WindowResult {
        window,
        planned: Solution {
            schedules: vec![Schedule::default(); crews],
            objective: 0.0,
            aggregate_reward: 0.0,
            lower_bound: 0.0,
            upper_bound: 0.0,
            status: SolveStatus::Optimal,
            nodes_explored: 0,
            elapsed: std::time::Duration::ZERO,
        },
        executed: vec![Vec::new(); crews],
        completed: Vec::new(),
        energized: Vec::new(),
        reward_earned: 0.0,
        carried: Vec::new(),
    }
}

/// Plans and executes one restoration window.
pub fn run_window(
    state: &RestorationState,
    scenario: &Scenario,
    opts: &ModelOptions,
    limits: &SearchLimits,
) -> Result<WindowResult, ScenarioError> {
    let k = state.window;
    let spec = scenario.windows.get(k - 1).ok_or(ScenarioError::BadWindow(k))?;
    let crews = CrewSpec::new(spec.crew_budgets_min.clone(), spec.duration_min);
    if state.pending.is_empty() {
        return Ok(empty_result(k, crews.crew_count()));
    }

    // Overlay the pending jobs onto the base network as its damaged set.
    let mut lines = scenario.network.lines.clone();
    for l in &mut lines {
        l.damaged = false;
        l.repair_min = 0.0;
        l.reward = 0.0;
        l.penalty = 0.0;
    }
    for job in &state.pending {
        let line = lines
            .iter_mut()
            .find(|l| job.matches(l.u, l.v))
            .ok_or(ScenarioError::UnknownLine { from: job.from, to: job.to })?;
        if line.damaged {
            return Err(ScenarioError::DuplicatePending { from: job.from, to: job.to });
        }
        line.damaged = true;
        line.repair_min = job.estimate_min;
        line.reward = job.reward;
        line.penalty = job.penalty;
    }
    let overlay = DistributionNetwork::new(scenario.network.source, lines)?;
    let (gw, gwd, map) =
        build_working_graphs(&overlay, &scenario.transport_graph(), &state.energized, scenario.speed())?;

    let planned = solve_exact(&gw, &gwd, &crews, opts, limits);
    if planned.status == SolveStatus::Infeasible {
        return Err(ScenarioError::Infeasible { window: k });
    }

    // Execute sequentially per crew. A crew moves to its next planned job
    // only while the estimate still fits the remaining budget, then works
    // until the job completes or the budget runs out.
    let pending_for = |node: usize| -> &PendingJob {
        let (u, v) = map.line_for(node).expect("planned node is a job");
        state.pending.iter().find(|p| p.matches(u, v)).expect("job came from pending")
    };

    let mut executed: Vec<Vec<ExecutedLeg>> = Vec::with_capacity(crews.crew_count());
    let mut completed_nodes: BTreeSet<usize> = BTreeSet::new();
    let mut partial: Vec<(usize, f64)> = Vec::new(); // node, minutes worked
    for (c, schedule) in planned.schedules.iter().enumerate() {
        let mut legs = Vec::new();
        let mut remaining = crews.effective_budget(c);
        let mut pos: Option<usize> = None;
        for &node in &schedule.jobs {
            let job = pending_for(node);
            let travel = pos.map_or(0.0, |p| gw.travel(p, node));
            if travel + job.estimate_min > remaining + 1e-9 {
                break; // next job cannot finish in this window; leave it
            }
            remaining -= travel;
            let actual = job.actual();
            let (u, v) = map.line_for(node).unwrap();
            if actual <= remaining {
                remaining -= actual;
                completed_nodes.insert(node);
                legs.push(ExecutedLeg {
                    from: u,
                    to: v,
                    travel_min: travel,
                    worked_min: actual,
                    completed: true,
                });
                pos = Some(node);
            } else {
                // overrun: burn the rest of the budget and carry the residual
                let worked = remaining;
                remaining = 0.0;
                partial.push((node, worked));
                legs.push(ExecutedLeg {
                    from: u,
                    to: v,
                    travel_min: travel,
                    worked_min: worked,
                    completed: false,
                });
                break;
            }
        }
        executed.push(legs);
    }

    // Window-end energization: a completed job is energized iff its chain of
    // pending ancestors is completed too (the root arc closes a chain).
    let parent = gwd.parent_map().expect("collapsed dag is a forest");
    let mut energized_nodes: BTreeSet<usize> = BTreeSet::new();
    loop {
        let mut grew = false;
        for &node in &completed_nodes {
            if energized_nodes.contains(&node) {
                continue;
            }
            let ok = match parent[node] {
                Some(0) | None => true,
                Some(p) => energized_nodes.contains(&p),
            };
            if ok {
                energized_nodes.insert(node);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let mut reward_earned = 0.0;
    let mut carried = Vec::new();
    for job in &state.pending {
        let node = map.node_for(job.from, job.to).expect("pending job is a working node");
        if energized_nodes.contains(&node) {
            reward_earned += job.reward;
            continue;
        }
        let mut next = job.clone();
        if completed_nodes.contains(&node) {
            next.repaired = true;
            next.estimate_min = 0.0;
            next.actual_min = None;
        } else if let Some(&(_, worked)) = partial.iter().find(|&&(n, _)| n == node) {
            let residual = next.actual() - worked;
            next.estimate_min = residual;
            next.actual_min = Some(residual);
        }
        carried.push(next);
    }

    let line_of = |nodes: &BTreeSet<usize>| -> Vec<(BusId, BusId)> {
        nodes.iter().map(|&n| map.line_for(n).unwrap()).collect()
    };
    Ok(WindowResult {
        window: k,
        planned,
        executed,
        completed: line_of(&completed_nodes),
        energized: line_of(&energized_nodes),
        reward_earned,
        carried,
    })
}

/// Folds a window's outcome into the state and admits the next batch of
/// damage reports.
pub fn advance(
    state: &RestorationState,
    result: &WindowResult,
    arrivals: &[Arrival],
) -> Result<RestorationState, ScenarioError> {
    if result.window != state.window {
        return Err(ScenarioError::BadWindow(result.window));
    }
    let mut energized = state.energized.clone();
    // Energized lines pull their far-side bus into the region; iterate to a
    // fixpoint since the order of `result.energized` is arbitrary.
    let mut frontier: Vec<(BusId, BusId)> = result.energized.clone();
    loop {
        let before = frontier.len();
        frontier.retain(|&(u, v)| {
            if energized.contains(&u) {
                energized.insert(v);
                false
            } else if energized.contains(&v) {
                energized.insert(u);
                false
            } else {
                true
            }
        });
        if frontier.is_empty() || frontier.len() == before {
            break;
        }
    }

    let mut pending = result.carried.clone();
    for a in arrivals {
        if a.window == 0 {
            return Err(ScenarioError::BadArrivalWindow(0));
        }
        let job = PendingJob::from_arrival(a);
        let inside =
            energized.contains(&a.from) && energized.contains(&a.to);
        if inside {
            return Err(ScenarioError::ArrivalInsideEnergized { from: a.from, to: a.to });
        }
        pending.push(job);
    }
    Ok(RestorationState { energized, pending, window: state.window + 1 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timeline {
    pub windows: Vec<WindowResult>,
    /// Total reward earned by the end of each window.
    pub cumulative_reward: Vec<f64>,
    pub final_state: RestorationState,
}

/// Runs every window of the scenario. Deterministic for a fixed scenario:
/// planning, execution, and energization have no hidden randomness.
pub fn simulate(
    scenario: &Scenario,
    opts: &ModelOptions,
    limits: &SearchLimits,
) -> Result<Timeline, ScenarioError> {
    scenario.validate()?;
    for a in &scenario.arrivals {
        if a.window > scenario.windows.len() && !scenario.windows.is_empty() {
            return Err(ScenarioError::BadArrivalWindow(a.window));
        }
    }

    let mut state = RestorationState::initial(scenario);
    let mut windows = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for k in 1..=scenario.windows.len() {
        let result = run_window(&state, scenario, opts, limits)?;
        total += result.reward_earned;
        cumulative.push(total);
        let next: Vec<Arrival> =
            scenario.arrivals.iter().filter(|a| a.window == k + 1).cloned().collect();
        state = advance(&state, &result, &next)?;
        windows.push(result);
    }
    Ok(Timeline { windows, cumulative_reward: cumulative, final_state: state })
}
