//! Feeder ingestion and experiment-input generation.
//!
//! Feeder files are JSON transcriptions of the public IEEE test-feeder line
//! data (lengths in feet) with a per-feeder patch list for the deletions
//! that keep the network radial. Loading floors every zero length to 1 ft.
//! Repair times are drawn from a Weibull law clamped below at a floor; the
//! scale parameter can be calibrated by bisection so the post-clamp mean
//! hits a target.

use crate::net::{validate_radial, BusId, DistributionNetwork, Line, NetError, TransportGraph};
use crate::rng::SplitMix64;
use crate::transform::{apsp, TransformError};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("patch deletes line ({from},{to}) which is not in the feeder")]
    PatchTargetMissing { from: BusId, to: BusId },
    #[error("feeder is not radial after modifications: {0}")]
    NotRadial(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("damage plan names line ({from},{to}) which is not in the feeder")]
    UnknownDamagedLine { from: BusId, to: BusId },
    #[error("target mean {target} is below the floor {floor}")]
    TargetBelowFloor { target: f64, floor: f64 },
    #[error("parameter out of range: {0}")]
    BadParameter(String),
}

/// One line of the feeder data file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeederEdge {
    pub from: BusId,
    pub to: BusId,
    pub length_ft: u64,
    #[serde(default)]
    pub switch: bool,
}

/// Modification applied after transcription, before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Patch {
    /// Remove a line (e.g. an open tie switch) to keep the network radial.
    DeleteEdge { from: BusId, to: BusId },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeederSpec {
    pub name: String,
    pub source: BusId,
    pub edges: Vec<FeederEdge>,
    #[serde(default)]
    pub patches: Vec<Patch>,
}

impl FeederSpec {
    pub fn parse(text: &str) -> Result<Self, FeederError> {
        serde_json::from_str(text).map_err(|e| FeederError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    /// Applies patches and the 1 ft length floor, yielding the undamaged
    /// network and its road twin. Patch application is order-independent:
    /// deletions commute with each other and with the floor.
    pub fn build(&self) -> Result<(DistributionNetwork, TransportGraph), FeederError> {
        let mut edges = self.edges.clone();
        for patch in &self.patches {
            match *patch {
                Patch::DeleteEdge { from, to } => {
                    let before = edges.len();
                    edges.retain(|e| {
                        !((e.from == from && e.to == to) || (e.from == to && e.to == from))
                    });
                    if edges.len() == before {
                        return Err(FeederError::PatchTargetMissing { from, to });
                    }
                }
            }
        }
        let lines: Vec<Line> =
            edges.iter().map(|e| Line::undamaged(e.from, e.to, e.length_ft.max(1))).collect();
        let net = DistributionNetwork::new(self.source, lines)?;
        let report = validate_radial(&net);
        if !report.is_valid() {
            return Err(FeederError::NotRadial(report.to_string()));
        }
        let transport = TransportGraph::from_distribution(&net);
        Ok((net, transport))
    }
}

/// Loads a feeder JSON file and applies its modifications.
pub fn load_feeder(path: &Path) -> Result<(DistributionNetwork, TransportGraph), FeederError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FeederError::Io { path: path.display().to_string(), source: e })?;
    FeederSpec::parse(&text)?.build()
}

/// Which lines a damage plan hits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DamageSet {
    All,
    Lines(Vec<(BusId, BusId)>),
}

/// Repair-time law and targets for one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DamagePlan {
    pub damaged: DamageSet,
    /// Weibull shape; the experiments leave it at 2.0.
    pub shape: f64,
    /// Weibull scale (minutes). See [`calibrate_scale`].
    pub scale: f64,
    /// Lower clamp on every sampled time (minutes).
    pub floor_min: f64,
    pub seed: u64,
    /// Reward assigned to each damaged line.
    pub reward: f64,
    /// Travel speed used downstream, kept here so a plan fully describes an
    /// experiment cell.
    pub speed_ft_min: f64,
}

impl DamagePlan {
    pub fn validate(&self) -> Result<(), FeederError> {
        let bad = |x: f64| x.is_nan() || x <= 0.0;
        if bad(self.shape) || bad(self.scale) {
            return Err(FeederError::BadParameter("shape and scale must be positive".into()));
        }
        if self.floor_min < 0.0 || self.floor_min.is_nan() {
            return Err(FeederError::BadParameter("floor must be nonnegative".into()));
        }
        if bad(self.speed_ft_min) {
            return Err(FeederError::BadParameter("speed must be positive".into()));
        }
        Ok(())
    }
}

/// Inverse-CDF Weibull draw clamped at the floor.
fn weibull_floor_draw(rng: &mut SplitMix64, shape: f64, scale: f64, floor: f64) -> f64 {
    let u = rng.next_f64();
    let raw = scale * (-(1.0 - u).ln()).powf(1.0 / shape);
    raw.max(floor)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleReport {
    pub times_min: Vec<f64>,
    /// Mean of the clamped samples actually produced.
    pub achieved_mean_min: f64,
}

/// Draws one clamped repair time per edge; deterministic in the plan seed.
pub fn sample_repair_times(plan: &DamagePlan, count: usize) -> Result<SampleReport, FeederError> {
    plan.validate()?;
    let mut rng = SplitMix64::new(plan.seed);
    let times: Vec<f64> = (0..count)
        .map(|_| weibull_floor_draw(&mut rng, plan.shape, plan.scale, plan.floor_min))
        .collect();
    let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
    Ok(SampleReport { times_min: times, achieved_mean_min: mean })
}

/// Marks the planned lines damaged, with sampled repair times and the plan's
/// per-line reward. Sample order follows the network's line order.
pub fn damage_network(
    net: &DistributionNetwork,
    plan: &DamagePlan,
) -> Result<(DistributionNetwork, SampleReport), FeederError> {
    let targets: Vec<usize> = match &plan.damaged {
        DamageSet::All => (0..net.lines.len()).collect(),
        DamageSet::Lines(list) => {
            let mut idx = Vec::with_capacity(list.len());
            for &(from, to) in list {
                let pos = net
                    .lines
                    .iter()
                    .position(|l| (l.u, l.v) == (from, to) || (l.u, l.v) == (to, from))
                    .ok_or(FeederError::UnknownDamagedLine { from, to })?;
                idx.push(pos);
            }
            idx
        }
    };
    let report = sample_repair_times(plan, targets.len())?;
    let mut lines = net.lines.clone();
    for (k, &i) in targets.iter().enumerate() {
        lines[i].damaged = true;
        lines[i].repair_min = report.times_min[k];
        lines[i].reward = plan.reward;
    }
    let damaged = DistributionNetwork::new(net.source, lines)?;
    Ok((damaged, report))
}

/// Mean of `max(floor, X)` for `X ~ Weibull(shape, scale)`:
/// `floor + integral of exp(-(x/scale)^shape) from floor to infinity`,
/// evaluated with composite Simpson quadrature on the decaying tail.
pub fn post_floor_mean(shape: f64, scale: f64, floor: f64) -> f64 {
    // beyond scale * 45^(1/shape) the integrand is below exp(-45) ~ 3e-20
    let hi = scale * 45f64.powf(1.0 / shape);
    if hi <= floor {
        return floor;
    }
    let g = |x: f64| (-(x / scale).powf(shape)).exp();
    let steps = 20_000usize; // even
    let h = (hi - floor) / steps as f64;
    let mut acc = g(floor) + g(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(floor + i as f64 * h);
    }
    floor + acc * h / 3.0
}

/// Finds the Weibull scale whose post-clamp mean hits `target_mean_min`, by
/// bisection. The achievable means start at the floor (scale near zero) and
/// grow without bound, so any target at or above the floor is reachable.
pub fn calibrate_scale(
    shape: f64,
    floor_min: f64,
    target_mean_min: f64,
) -> Result<f64, FeederError> {
    if shape.is_nan() || shape <= 0.0 {
        return Err(FeederError::BadParameter("shape must be positive".into()));
    }
    if target_mean_min < floor_min {
        return Err(FeederError::TargetBelowFloor { target: target_mean_min, floor: floor_min });
    }
    let mut lo = 1e-9;
    let mut hi = (target_mean_min.max(1.0)) * 2.0;
    let mut guard = 0;
    while post_floor_mean(shape, hi, floor_min) < target_mean_min {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(FeederError::BadParameter("calibration failed to bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if post_floor_mean(shape, mid, floor_min) < target_mean_min {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Shortest-path travel times in minutes between every pair of buses
/// (the source bus included, so the full physical range is visible before
/// the working graph zeroes its root row).
pub fn travel_time_matrix(
    net: &DistributionNetwork,
    speed_ft_min: f64,
) -> Result<(Vec<BusId>, Vec<Vec<f64>>), TransformError> {
    if speed_ft_min.is_nan() || speed_ft_min <= 0.0 {
        return Err(TransformError::BadSpeed(speed_ft_min));
    }
    let transport = TransportGraph::from_distribution(net);
    let d = apsp(&transport)?;
    let buses: Vec<BusId> = d.buses().to_vec();
    let matrix = buses
        .iter()
        .map(|&a| buses.iter().map(|&b| d.feet(a, b) as f64 / speed_ft_min).collect())
        .collect();
    Ok((buses, matrix))
}

/// Smallest and largest off-diagonal entries of a travel matrix.
pub fn travel_range(matrix: &[Vec<f64>]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in matrix.iter().enumerate() {
        for (j, &t) in row.iter().enumerate() {
            if i != j {
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
    }
    (hi >= lo).then_some((lo, hi))
}

/// Audit dump of a sampled repair-time vector.
pub fn write_samples_csv(path: &Path, report: &SampleReport) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "index,repair_min")?;
    for (i, t) in report.times_min.iter().enumerate() {
        writeln!(f, "{i},{t:.6}")?;
    }
    Ok(())
}
