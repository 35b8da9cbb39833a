//! Exhaustive oracle for small instances.
//!
//! Enumerates, crew by crew, every ordered job sequence whose running cost
//! stays within the crew budget (costs are nonnegative, so extending an
//! over-budget prefix can never recover), and filters complete assignments
//! through [`check_schedule`]. Kept deliberately free of the bounding,
//! ordering, and symmetry machinery of the exact solver so the two can
//! cross-check each other.

use super::{
    check_schedule, objective_terms, Schedule, Solution, SolveError, SolveStatus,
};
use crate::model::{CrewSpec, HomeDegree, ModelOptions};
use crate::transform::{PrecedenceDag, WorkingGraph};
use std::time::Instant;

const MAX_ORACLE_JOBS: usize = 10;

pub fn solve_bruteforce(
    gw: &WorkingGraph,
    gwd: &PrecedenceDag,
    crews: &CrewSpec,
    opts: &ModelOptions,
) -> Result<Solution, SolveError> {
    let jobs = gw.job_count();
    if jobs > MAX_ORACLE_JOBS {
        return Err(SolveError::TooLarge { jobs, max: MAX_ORACLE_JOBS });
    }
    let started = Instant::now();
    let m = crews.crew_count();
    let (gains, constant) = objective_terms(gw, opts, m);
    let strict = matches!(opts.home_degree, HomeDegree::Strict);

    let mut enumerator = Enumerator {
        gw,
        gwd,
        crews,
        gains,
        strict,
        tours: vec![Vec::new(); m],
        used: vec![false; gw.node_count()],
        best: None,
        leaves: 0,
    };
    enumerator.assign_crew(0);

    let elapsed = started.elapsed();
    match enumerator.best {
        Some((value, tours)) => {
            let value = value + constant;
            let schedules: Vec<Schedule> = tours.into_iter().map(Schedule::new).collect();
            let aggregate_reward: f64 =
                schedules.iter().flat_map(|s| s.jobs.iter()).map(|&j| gw.reward(j)).sum();
            Ok(Solution {
                schedules,
                objective: value,
                aggregate_reward,
                lower_bound: value,
                upper_bound: value,
                status: SolveStatus::Optimal,
                nodes_explored: enumerator.leaves,
                elapsed,
            })
        }
        None => Ok(Solution {
            schedules: vec![Schedule::default(); m],
            objective: 0.0,
            aggregate_reward: 0.0,
            lower_bound: f64::NEG_INFINITY,
            upper_bound: f64::NEG_INFINITY,
            status: SolveStatus::Infeasible,
            nodes_explored: enumerator.leaves,
            elapsed,
        }),
    }
}

struct Enumerator<'a> {
    gw: &'a WorkingGraph,
    gwd: &'a PrecedenceDag,
    crews: &'a CrewSpec,
    gains: Vec<f64>,
    strict: bool,
    tours: Vec<Vec<usize>>,
    used: Vec<bool>,
    best: Option<(f64, Vec<Vec<usize>>)>,
    leaves: u64,
}

impl<'a> Enumerator<'a> {
    fn assign_crew(&mut self, crew: usize) {
        if crew == self.tours.len() {
            self.evaluate_leaf();
            return;
        }
        self.extend_tour(crew, 0.0);
    }

    fn extend_tour(&mut self, crew: usize, spent: f64) {
        // Option 1: close this crew's tour as it stands.
        if !self.strict || !self.tours[crew].is_empty() {
            self.assign_crew(crew + 1);
        }
        // Option 2: append any unused job that keeps the tour within budget.
        let budget = self.crews.effective_budget(crew);
        for j in self.gw.jobs() {
            if self.used[j] {
                continue;
            }
            let travel = self.tours[crew].last().map_or(0.0, |&p| self.gw.travel(p, j));
            let cost = spent + travel + self.gw.repair(j);
            if cost > budget {
                continue;
            }
            self.used[j] = true;
            self.tours[crew].push(j);
            self.extend_tour(crew, cost);
            self.tours[crew].pop();
            self.used[j] = false;
        }
    }

    fn evaluate_leaf(&mut self) {
        self.leaves += 1;
        let schedules: Vec<Schedule> =
            self.tours.iter().map(|t| Schedule::new(t.clone())).collect();
        let report = check_schedule(self.gw, self.gwd, self.crews, &schedules)
            .expect("enumerated jobs are in range");
        if !report.is_valid() {
            return;
        }
        let value: f64 =
            self.tours.iter().flat_map(|t| t.iter()).map(|&j| self.gains[j]).sum();
        if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
            self.best = Some((value, self.tours.clone()));
        }
    }
}
