//! Instance construction shared by the subcommands: load a feeder, apply a
//! damage plan (sampled or explicit), run the graph pipeline, and wrap
//! solver output for reporting.

use anyhow::{bail, Context, Result};
use restoration::feeders::{calibrate_scale, damage_network, load_feeder, DamagePlan, DamageSet};
use restoration::metrics::{self, MetricRow};
use restoration::model::{assemble, CrewSpec, MilpInstance, ModelOptions};
use restoration::net::{BusId, DistributionNetwork};
use restoration::rng::SplitMix64;
use restoration::solve::{solve_exact, tour_cost, SearchLimits, Solution, SolveStatus};
use restoration::transform::{build_working_graphs, JobMap, PrecedenceDag, WorkingGraph};
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::PathBuf;

/// Everything needed to rebuild one damaged-feeder instance.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub feeder: PathBuf,
    pub speed: f64,
    pub mean_repair: f64,
    pub shape: f64,
    pub floor: f64,
    pub reward: f64,
    pub repair_times: Option<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct WindowSpec {
    pub budgets: Vec<f64>,
    pub window_min: f64,
}

impl WindowSpec {
    /// Placeholder roster for subcommands that never solve.
    pub fn trivial() -> Self {
        Self { budgets: vec![1.0], window_min: 1.0 }
    }

    pub fn uniform(crews: usize, budget: f64) -> Self {
        Self { budgets: vec![budget; crews], window_min: budget }
    }

    pub fn new(crews: usize, budgets: Vec<f64>, window: Option<f64>) -> Result<Self> {
        let budgets = match budgets.len() {
            0 => bail!("at least one budget is required"),
            1 => vec![budgets[0]; crews],
            n if n == crews => budgets,
            n => bail!("{n} budgets given for {crews} crews"),
        };
        let max = budgets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { window_min: window.unwrap_or(max), budgets })
    }
}

/// Seed for one trial stream, derived so that a trial draws identical
/// repair times in every sweep cell.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    SplitMix64::derive(master, trial as u64).next_u64()
}

/// Placeholder row for a sweep cell whose instance could not be built.
pub fn error_row(id: &str, crews: usize, budget: f64) -> MetricRow {
    MetricRow {
        instance: id.to_string(),
        n: 0,
        m: crews,
        mean_repair_min: 0.0,
        mean_travel_min: 0.0,
        budget_min: budget,
        aggregate_reward: 0.0,
        nar: 0.0,
        nar_per_crew: 0.0,
        nuwt: 0.0,
        lower_bound: f64::NEG_INFINITY,
        upper_bound: f64::INFINITY,
        gap: f64::INFINITY,
        status: "error".into(),
        elapsed_s: 0.0,
    }
}

pub struct BuiltWindow {
    pub name: String,
    pub gw: WorkingGraph,
    pub dag: PrecedenceDag,
    pub map: JobMap,
    pub crews: CrewSpec,
    pub achieved_mean_repair: f64,
    pub mean_travel: f64,
}

pub fn build_window(spec: &InstanceSpec, window: &WindowSpec) -> Result<BuiltWindow> {
    let (net, transport) = load_feeder(&spec.feeder)?;
    let name = spec
        .feeder
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "feeder".into());

    let damaged: DistributionNetwork;
    let achieved_mean_repair;
    match &spec.repair_times {
        Some(times) => {
            if times.len() != net.lines.len() {
                bail!(
                    "{} repair times given for {} lines (order follows the feeder file)",
                    times.len(),
                    net.lines.len()
                );
            }
            let mut lines = net.lines.clone();
            for (line, &t) in lines.iter_mut().zip(times) {
                line.damaged = true;
                line.repair_min = t;
                line.reward = spec.reward;
            }
            damaged = DistributionNetwork::new(net.source, lines)?;
            achieved_mean_repair = times.iter().sum::<f64>() / times.len() as f64;
        }
        None => {
            let scale = calibrate_scale(spec.shape, spec.floor, spec.mean_repair)?;
            let plan = DamagePlan {
                damaged: DamageSet::All,
                shape: spec.shape,
                scale,
                floor_min: spec.floor,
                seed: spec.seed,
                reward: spec.reward,
                speed_ft_min: spec.speed,
            };
            let (net_damaged, report) = damage_network(&net, &plan)?;
            damaged = net_damaged;
            achieved_mean_repair = report.achieved_mean_min;
        }
    }

    let energized = BTreeSet::from([damaged.source]);
    let (gw, dag, map) = build_working_graphs(&damaged, &transport, &energized, spec.speed)?;

    let mut travel_sum = 0.0;
    let mut travel_count = 0usize;
    for i in gw.jobs() {
        for j in gw.jobs() {
            if i < j {
                travel_sum += gw.travel(i, j);
                travel_count += 1;
            }
        }
    }
    let mean_travel = if travel_count == 0 { 0.0 } else { travel_sum / travel_count as f64 };

    Ok(BuiltWindow {
        name,
        gw,
        dag,
        map,
        crews: CrewSpec::new(window.budgets.clone(), window.window_min),
        achieved_mean_repair,
        mean_travel,
    })
}

#[derive(Serialize)]
struct JobDump {
    node: usize,
    line: (BusId, BusId),
    repair_min: f64,
    reward: f64,
    penalty: f64,
}

#[derive(Serialize)]
pub struct TransformDump {
    node_count: usize,
    jobs: Vec<JobDump>,
    travel_min: Vec<Vec<f64>>,
    root_travel_min: Vec<f64>,
    precedence: Vec<(usize, usize)>,
}

/// Solver result in reporting form. Wall-clock time stays out of the
/// serialized output so identical runs produce identical files.
#[derive(Serialize)]
pub struct SolveSummary {
    pub status: String,
    pub objective: f64,
    pub aggregate_reward: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub spent_min: Vec<f64>,
    pub tours: Vec<Vec<(BusId, BusId)>>,
    #[serde(skip)]
    pub status_enum: SolveStatus,
    #[serde(skip)]
    pub elapsed_s: f64,
    #[serde(skip)]
    pub nuwt: f64,
}

impl SolveSummary {
    pub fn human_readable(&self) -> String {
        let mut out = format!(
            "status: {}\naggregate reward: {}\nobjective: {}\nbounds: [{}, {}] gap {}\n",
            self.status,
            self.aggregate_reward,
            self.objective,
            self.lower_bound,
            self.upper_bound,
            self.gap
        );
        for (c, tour) in self.tours.iter().enumerate() {
            let legs: Vec<String> =
                tour.iter().map(|(u, v)| format!("({u},{v})")).collect();
            let path = if legs.is_empty() { "idle".into() } else { legs.join(" -> ") };
            out.push_str(&format!(
                "crew {}: {} | spent {:.3} min\n",
                c + 1,
                path,
                self.spent_min[c]
            ));
        }
        out
    }
}

impl BuiltWindow {
    pub fn transform_dump(&self) -> TransformDump {
        let n = self.gw.node_count();
        TransformDump {
            node_count: n,
            jobs: self
                .gw
                .jobs()
                .map(|node| JobDump {
                    node,
                    line: self.map.line_for(node).unwrap(),
                    repair_min: self.gw.repair(node),
                    reward: self.gw.reward(node),
                    penalty: self.gw.penalty(node),
                })
                .collect(),
            travel_min: (0..n)
                .map(|i| (0..n).map(|j| self.gw.travel(i, j)).collect())
                .collect(),
            root_travel_min: (0..n).map(|i| self.gw.root_travel(i)).collect(),
            precedence: self.dag.arcs.clone(),
        }
    }

    pub fn assemble(&self, opts: &ModelOptions) -> Result<MilpInstance> {
        assemble(&self.gw, &self.dag, &self.crews, opts).context("assembling the model")
    }

    pub fn solve(&self, opts: &ModelOptions, limits: &SearchLimits) -> SolveSummary {
        let solution = solve_exact(&self.gw, &self.dag, &self.crews, opts, limits);
        self.summarize(&solution)
    }

    fn summarize(&self, solution: &Solution) -> SolveSummary {
        let spent: Vec<f64> =
            solution.schedules.iter().map(|s| tour_cost(&self.gw, &s.jobs)).collect();
        let budgets: Vec<f64> =
            (0..self.crews.crew_count()).map(|c| self.crews.effective_budget(c)).collect();
        SolveSummary {
            status: solution.status.to_string(),
            objective: solution.objective,
            aggregate_reward: solution.aggregate_reward,
            lower_bound: solution.lower_bound,
            upper_bound: solution.upper_bound,
            gap: solution.gap(),
            nodes_explored: solution.nodes_explored,
            spent_min: spent.clone(),
            tours: solution
                .schedules
                .iter()
                .map(|s| s.jobs.iter().map(|&j| self.map.line_for(j).unwrap()).collect())
                .collect(),
            status_enum: solution.status,
            elapsed_s: solution.elapsed.as_secs_f64(),
            nuwt: metrics::nuwt_from_spent(&spent, &budgets),
        }
    }

    pub fn metric_row(&self, instance: &str, summary: &SolveSummary, timing: bool) -> MetricRow {
        let n = self.gw.node_count();
        let m = self.crews.crew_count();
        MetricRow {
            instance: instance.to_string(),
            n,
            m,
            mean_repair_min: self.achieved_mean_repair,
            mean_travel_min: self.mean_travel,
            budget_min: self.crews.effective_budget(0),
            aggregate_reward: summary.aggregate_reward,
            nar: metrics::nar(summary.aggregate_reward, n),
            nar_per_crew: metrics::nar_per_crew(summary.aggregate_reward, n, m),
            nuwt: summary.nuwt,
            lower_bound: summary.lower_bound,
            upper_bound: summary.upper_bound,
            gap: summary.gap,
            status: summary.status.clone(),
            elapsed_s: if timing { summary.elapsed_s } else { 0.0 },
        }
    }
}
