//! Exact scheduling: domain-level feasibility checking, a depth-first
//! branch-and-bound over (crew, next-job) extensions, and an exhaustive
//! brute-force oracle for cross-checking on small instances.

mod brute;
mod exact;

pub use brute::solve_bruteforce;
pub use exact::{solve_exact, ExactSolver};

use crate::model::{CrewSpec, ModelOptions, ObjectiveKind};
use crate::transform::{PrecedenceDag, WorkingGraph};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance has {jobs} jobs; the brute-force oracle is limited to {max}")]
    TooLarge { jobs: usize, max: usize },
    #[error("unknown job node {0}")]
    UnknownJob(usize),
}

/// Ordered repair tour of one crew (working-graph job ids, root excluded).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub jobs: Vec<usize>,
}

impl Schedule {
    pub fn new(jobs: Vec<usize>) -> Self {
        Self { jobs }
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// Time spent by a tour: repairs plus travel between consecutive jobs. The
/// legs from the root to the first job and from the last job home are free.
pub fn tour_cost(gw: &WorkingGraph, jobs: &[usize]) -> f64 {
    let mut cost = 0.0;
    let mut prev: Option<usize> = None;
    for &j in jobs {
        if let Some(p) = prev {
            cost += gw.travel(p, j);
        }
        cost += gw.repair(j);
        prev = Some(j);
    }
    cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Search exhausted; the objective is the true optimum.
    Optimal,
    /// Stopped early (time, node, or gap limit) with an incumbent.
    Feasible,
    /// No schedule satisfies the constraints (strict home-degree only).
    Infeasible,
    /// Stopped early without finding any feasible schedule.
    Limit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Limit => "limit",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub schedules: Vec<Schedule>,
    /// Value of the configured objective (reward or profit).
    pub objective: f64,
    /// Aggregate reward of the scheduled jobs, regardless of objective.
    pub aggregate_reward: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Solution {
    /// Absolute optimality gap, `UB - LB`.
    pub fn gap(&self) -> f64 {
        if self.upper_bound == self.lower_bound {
            0.0
        } else {
            self.upper_bound - self.lower_bound
        }
    }

    pub fn scheduled_jobs(&self) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.schedules.iter().flat_map(|s| s.jobs.iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

/// Stopping criteria for the exact search. Empty limits run to exhaustion.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SearchLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Stop once `UB - LB` drops to this value. Zero reproduces a full
    /// optimality proof but lets the search stop as soon as the frontier
    /// bound meets the incumbent.
    pub absolute_gap: Option<f64>,
}

impl SearchLimits {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn timed(seconds: f64) -> Self {
        Self { time_limit: Some(Duration::from_secs_f64(seconds)), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScheduleViolation {
    BudgetExceeded { crew: usize, spent: f64, budget: f64 },
    DuplicateJob { job: usize },
    /// `job` is scheduled but its precedence parent `missing` is neither the
    /// root nor scheduled by any crew.
    ContinuityBroken { job: usize, missing: usize },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub violations: Vec<ScheduleViolation>,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_budget_violation(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, ScheduleViolation::BudgetExceeded { .. }))
    }

    pub fn has_duplicate(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, ScheduleViolation::DuplicateJob { .. }))
    }

    pub fn has_continuity_violation(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, ScheduleViolation::ContinuityBroken { .. }))
    }
}

/// Checks a set of crew tours against the domain rules: per-crew budgets,
/// at most one crew per job, and aggregate electrical continuity (for every
/// precedence arc `i -> j` with `j` scheduled, `i` must be the root or
/// scheduled by some crew).
pub fn check_schedule(
    gw: &WorkingGraph,
    gwd: &PrecedenceDag,
    crews: &CrewSpec,
    schedules: &[Schedule],
) -> Result<ScheduleReport, SolveError> {
    let n = gw.node_count();
    let mut report = ScheduleReport::default();
    let mut count = vec![0usize; n];

    for (c, schedule) in schedules.iter().enumerate() {
        for &j in &schedule.jobs {
            if j == 0 || j >= n {
                return Err(SolveError::UnknownJob(j));
            }
            count[j] += 1;
        }
        let spent = tour_cost(gw, &schedule.jobs);
        let budget = crews.effective_budget(c);
        if spent > budget + 1e-9 {
            report.violations.push(ScheduleViolation::BudgetExceeded { crew: c, spent, budget });
        }
    }

    for (j, &c) in count.iter().enumerate() {
        if c > 1 {
            report.violations.push(ScheduleViolation::DuplicateJob { job: j });
        }
    }

    for &(i, j) in &gwd.arcs {
        if count[j] > 0 && i != 0 && count[i] == 0 {
            report.violations.push(ScheduleViolation::ContinuityBroken { job: j, missing: i });
        }
    }
    Ok(report)
}

/// Aggregate reward collected by a schedule set (assuming it is valid).
pub fn schedule_reward(gw: &WorkingGraph, schedules: &[Schedule]) -> f64 {
    schedules.iter().flat_map(|s| s.jobs.iter()).map(|&j| gw.reward(j)).sum()
}

/// Objective contribution of visiting job `i` and the assignment-independent
/// constant, per the configured objective. Under the profit objective a
/// scheduled job both earns its reward and avoids one unit of its penalty;
/// every crew that leaves a job unscheduled pays that job's penalty.
pub(crate) fn objective_terms(
    gw: &WorkingGraph,
    opts: &ModelOptions,
    crew_count: usize,
) -> (Vec<f64>, f64) {
    let n = gw.node_count();
    let mut gains = vec![0.0; n];
    let mut constant = 0.0;
    match opts.objective {
        ObjectiveKind::Reward => {
            for i in gw.jobs() {
                gains[i] = gw.reward(i);
            }
        }
        ObjectiveKind::Profit => {
            for i in gw.jobs() {
                gains[i] = gw.reward(i) + gw.penalty(i);
                constant -= crew_count as f64 * gw.penalty(i);
            }
        }
    }
    (gains, constant)
}
