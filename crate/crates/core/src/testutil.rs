//! Shared fixtures for unit tests.

use crate::model::CrewSpec;
use crate::net::{DistributionNetwork, Line, TransportGraph};
use crate::rng::SplitMix64;
use crate::transform::{build_working_graphs, PrecedenceDag, WorkingGraph};
use std::collections::BTreeSet;

/// The three-job chain with zero travel: repair times 30/30/20 on a
/// precedence chain root -> 1 -> 2 -> 3, unit rewards.
pub(crate) fn chain4() -> (WorkingGraph, PrecedenceDag) {
    let gw = WorkingGraph::new(
        vec![0.0, 30.0, 30.0, 20.0],
        vec![0.0, 1.0, 1.0, 1.0],
        vec![0.0; 4],
        vec![vec![0.0; 4]; 4],
    )
    .unwrap();
    let dag = PrecedenceDag::new(4, vec![(0, 1), (1, 2), (2, 3)]);
    (gw, dag)
}

/// One job of the given repair time, unit reward, zero travel.
pub(crate) fn single_job(repair_min: f64) -> (WorkingGraph, PrecedenceDag) {
    let gw = WorkingGraph::new(
        vec![0.0, repair_min],
        vec![0.0, 1.0],
        vec![0.0; 2],
        vec![vec![0.0; 2]; 2],
    )
    .unwrap();
    let dag = PrecedenceDag::new(2, vec![(0, 1)]);
    (gw, dag)
}

/// Random radial network with every line damaged somewhere, pushed through
/// the real pipeline so travel times obey the triangle inequality.
pub(crate) fn random_instance(
    rng: &mut SplitMix64,
    max_jobs: usize,
) -> (WorkingGraph, PrecedenceDag) {
    let jobs = 1 + rng.next_below(max_jobs as u64) as usize;
    let mut lines = Vec::with_capacity(jobs);
    for child in 1..=jobs as u32 {
        let parent = rng.next_below(child as u64) as u32;
        let length = 1 + rng.next_below(400);
        let repair = 5.0 + rng.next_below(55) as f64;
        let reward = 1.0 + rng.next_below(5) as f64;
        lines.push(Line::damaged(parent, child, length, repair, reward));
    }
    let net = DistributionNetwork::new_radial(0, lines).unwrap();
    let transport = TransportGraph::from_distribution(&net);
    let speed = 10.0 + rng.next_below(90) as f64;
    let (gw, dag, _) =
        build_working_graphs(&net, &transport, &BTreeSet::from([0]), speed).unwrap();
    (gw, dag)
}

/// Star network: every job hangs directly off the root, so the precedence
/// constraints are all trivially satisfied.
pub(crate) fn random_star(rng: &mut SplitMix64, max_spokes: usize) -> (WorkingGraph, PrecedenceDag) {
    let spokes = 2 + rng.next_below(max_spokes as u64 - 1) as usize;
    let mut lines = Vec::with_capacity(spokes);
    for child in 1..=spokes as u32 {
        let length = 1 + rng.next_below(400);
        let repair = 5.0 + rng.next_below(55) as f64;
        let reward = 1.0 + rng.next_below(5) as f64;
        lines.push(Line::damaged(0, child, length, repair, reward));
    }
    let net = DistributionNetwork::new_radial(0, lines).unwrap();
    let transport = TransportGraph::from_distribution(&net);
    let speed = 10.0 + rng.next_below(90) as f64;
    let (gw, dag, _) =
        build_working_graphs(&net, &transport, &BTreeSet::from([0]), speed).unwrap();
    (gw, dag)
}

/// Random crew roster: 1..=max_m crews, budgets 20..140 minutes, window at
/// least as long as the largest budget half the time.
pub(crate) fn random_crews(rng: &mut SplitMix64, max_m: usize) -> CrewSpec {
    let m = 1 + rng.next_below(max_m as u64) as usize;
    let budgets: Vec<f64> = (0..m).map(|_| 20.0 + rng.next_below(120) as f64).collect();
    let max_budget = budgets.iter().cloned().fold(0.0, f64::max);
    let window = if rng.next_below(2) == 0 { max_budget } else { max_budget * 0.75 };
    CrewSpec::new(budgets, window)
}
