//! Physical distribution network and its transportation counterpart.
//!
//! A [`DistributionNetwork`] is a radial (tree) graph of buses connected by
//! lines. Damaged lines carry a repair-time estimate, a reward claimable on
//! energization, and an optional penalty for deferral. Edges are stored
//! undirected; the power-flow orientation is computed from the source on
//! demand so that re-rooting never requires a rebuild.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Bus identifier, matching the numbering of the feeder data files.
pub type BusId = u32;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("line ({u},{v}) has zero length; lengths must be at least 1 ft")]
    ZeroLength { u: BusId, v: BusId },
    #[error("undamaged line ({u},{v}) carries repair time or reward")]
    UndamagedWithWork { u: BusId, v: BusId },
    #[error("source bus {0} does not appear on any line")]
    UnknownSource(BusId),
    #[error("network is not radial: {0}")]
    NotRadial(ValidationReport),
    #[error("negative parameter on line ({u},{v})")]
    NegativeParameter { u: BusId, v: BusId },
}

/// One line segment of the feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub u: BusId,
    pub v: BusId,
    pub length_ft: u64,
    pub damaged: bool,
    /// Estimated mean residual repair time, minutes. Zero for undamaged lines.
    #[serde(default)]
    pub repair_min: f64,
    /// Reward earned when the line is repaired and energized.
    #[serde(default)]
    pub reward: f64,
    /// Penalty incurred if the line is left unscheduled (profit objective).
    #[serde(default)]
    pub penalty: f64,
}

impl Line {
    pub fn undamaged(u: BusId, v: BusId, length_ft: u64) -> Self {
        Self { u, v, length_ft, damaged: false, repair_min: 0.0, reward: 0.0, penalty: 0.0 }
    }

    pub fn damaged(u: BusId, v: BusId, length_ft: u64, repair_min: f64, reward: f64) -> Self {
        Self { u, v, length_ft, damaged: true, repair_min, reward, penalty: 0.0 }
    }

    /// Unordered endpoint pair, normalized to `(min, max)`.
    pub fn key(&self) -> (BusId, BusId) {
        if self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }
}

/// Radial distribution network with a single source bus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionNetwork {
    pub source: BusId,
    pub lines: Vec<Line>,
}

impl DistributionNetwork {
    /// Builds a network, enforcing the structural invariants that do not
    /// depend on radiality: positive lengths, no work on undamaged lines,
    /// and a source that appears on some line.
    pub fn new(source: BusId, lines: Vec<Line>) -> Result<Self, NetError> {
        for l in &lines {
            if l.length_ft == 0 {
                return Err(NetError::ZeroLength { u: l.u, v: l.v });
            }
            if !l.damaged && (l.repair_min != 0.0 || l.reward != 0.0) {
                return Err(NetError::UndamagedWithWork { u: l.u, v: l.v });
            }
            if l.repair_min < 0.0 || l.reward < 0.0 || l.penalty < 0.0 {
                return Err(NetError::NegativeParameter { u: l.u, v: l.v });
            }
        }
        let net = Self { source, lines };
        if !net.buses().contains(&net.source) {
            return Err(NetError::UnknownSource(net.source));
        }
        Ok(net)
    }

    /// Like [`Self::new`] but also requires the network to be radial.
    pub fn new_radial(source: BusId, lines: Vec<Line>) -> Result<Self, NetError> {
        let net = Self::new(source, lines)?;
        let report = validate_radial(&net);
        if !report.is_valid() {
            return Err(NetError::NotRadial(report));
        }
        Ok(net)
    }

    pub fn buses(&self) -> BTreeSet<BusId> {
        let mut s = BTreeSet::new();
        for l in &self.lines {
            s.insert(l.u);
            s.insert(l.v);
        }
        s
    }

    pub fn damaged_lines(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.damaged)
    }

    fn adjacency(&self) -> BTreeMap<BusId, Vec<BusId>> {
        let mut adj: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
        for l in &self.lines {
            adj.entry(l.u).or_default().push(l.v);
            adj.entry(l.v).or_default().push(l.u);
        }
        adj
    }
}

/// Road network used for travel between job sites. Distances are in feet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportGraph {
    pub edges: Vec<(BusId, BusId, u64)>,
}

impl TransportGraph {
    pub fn new(edges: Vec<(BusId, BusId, u64)>) -> Self {
        Self { edges }
    }

    /// Road network identical to the power network, the assumption used for
    /// the feeder experiments: every line doubles as a road of its length.
    pub fn from_distribution(net: &DistributionNetwork) -> Self {
        Self { edges: net.lines.iter().map(|l| (l.u, l.v, l.length_ft)).collect() }
    }

    pub fn nodes(&self) -> BTreeSet<BusId> {
        let mut s = BTreeSet::new();
        for &(u, v, _) in &self.edges {
            s.insert(u);
            s.insert(v);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialViolation {
    /// More edges than `|buses| - 1`, or a duplicated edge closing a loop.
    Cycle,
    /// Some bus is unreachable from the source.
    Disconnected,
    /// The declared source bus does not appear in the graph.
    UnknownSource,
}

/// Outcome of [`validate_radial`]; empty means the network is a tree rooted
/// at its single source.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<RadialViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, v: RadialViolation) -> bool {
        self.violations.contains(&v)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "radial");
        }
        let names: Vec<&str> = self
            .violations
            .iter()
            .map(|v| match v {
                RadialViolation::Cycle => "cycle",
                RadialViolation::Disconnected => "disconnected",
                RadialViolation::UnknownSource => "unknown source",
            })
            .collect();
        write!(f, "{}", names.join(", "))
    }
}

/// Checks that the network is a single tree containing the source.
///
/// A connected graph on `n` buses is a tree iff it has `n - 1` edges, so the
/// report flags a cycle whenever the edge count is high and a disconnection
/// whenever some bus cannot be reached from the source.
pub fn validate_radial(net: &DistributionNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let buses = net.buses();
    if !buses.contains(&net.source) {
        report.violations.push(RadialViolation::UnknownSource);
        return report;
    }

    // BFS from the source, then from any bus still unseen, to count
    // components. A multigraph is acyclic iff |E| = |V| - #components.
    let adj = net.adjacency();
    let mut seen = BTreeSet::new();
    let mut components = 0usize;
    let mut starts: Vec<BusId> = vec![net.source];
    starts.extend(buses.iter().copied());
    for start in starts {
        if seen.contains(&start) {
            continue;
        }
        components += 1;
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(b) = queue.pop_front() {
            for &nb in adj.get(&b).into_iter().flatten() {
                if seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        if components == 1 && seen.len() < buses.len() {
            report.violations.push(RadialViolation::Disconnected);
        }
    }
    if net.lines.len() > buses.len() - components {
        report.violations.push(RadialViolation::Cycle);
    }
    report
}

/// Orients every line away from the source along its unique tree path.
///
/// Returns `(parent, child)` bus pairs in the same order as `net.lines`.
pub fn orient_power_flow(net: &DistributionNetwork) -> Result<Vec<(BusId, BusId)>, NetError> {
    let report = validate_radial(net);
    if !report.is_valid() {
        return Err(NetError::NotRadial(report));
    }

    // Parent pointers from a BFS rooted at the source.
    let adj = net.adjacency();
    let mut parent: BTreeMap<BusId, BusId> = BTreeMap::new();
    let mut queue = VecDeque::from([net.source]);
    let mut seen = BTreeSet::from([net.source]);
    while let Some(b) = queue.pop_front() {
        for &nb in adj.get(&b).into_iter().flatten() {
            if seen.insert(nb) {
                parent.insert(nb, b);
                queue.push_back(nb);
            }
        }
    }

    Ok(net
        .lines
        .iter()
        .map(|l| {
            if parent.get(&l.v) == Some(&l.u) {
                (l.u, l.v)
            } else {
                (l.v, l.u)
            }
        })
        .collect())
}
