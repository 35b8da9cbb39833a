//! Graph pipeline from a damaged feeder to the two working graphs.
//!
//! The pipeline contracts the energized region into a root supernode, takes
//! the line graph of the remaining tree (jobs become nodes), deletes
//! undamaged nodes while rewiring precedence to the nearest damaged
//! ancestor, and finally attaches a complete symmetric travel-time matrix
//! over job sites. The result is a [`WorkingGraph`] (complete doubly
//! weighted job graph rooted at node 0) plus a [`PrecedenceDag`] encoding
//! electrical continuity, and a [`JobMap`] tying job nodes back to lines.

use crate::net::{orient_power_flow, BusId, DistributionNetwork, NetError, TransportGraph};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("no path between buses {a} and {b} in the transport graph")]
    Unreachable { a: BusId, b: BusId },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("energized region must be a connected subtree containing the source")]
    BadEnergizedRegion,
    #[error("damaged line ({u},{v}) lies inside the energized region")]
    DamagedInsideEnergized { u: BusId, v: BusId },
    #[error("travel speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error("precedence graph is not a rooted tree: {0}")]
    NotATree(String),
    #[error("invalid working graph: {0}")]
    BadWorkingGraph(String),
}

/// Symmetric all-pairs shortest-path distances in feet.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    order: Vec<BusId>,
    index: BTreeMap<BusId, usize>,
    dist: Vec<u64>,
}

impl DistanceMatrix {
    pub fn buses(&self) -> &[BusId] {
        &self.order
    }

    pub fn feet(&self, a: BusId, b: BusId) -> u64 {
        self.try_feet(a, b).expect("bus not covered by the transport graph")
    }

    /// Distance if both buses appear in the transport graph.
    pub fn try_feet(&self, a: BusId, b: BusId) -> Option<u64> {
        let n = self.order.len();
        let i = self.index.get(&a)?;
        let j = self.index.get(&b)?;
        Some(self.dist[i * n + j])
    }
}

const UNREACHED: u64 = u64::MAX / 4;

/// All-pairs shortest paths over the transport graph (Floyd–Warshall).
///
/// Every pair of buses must be mutually reachable; the first missing pair
/// (in bus order) is reported otherwise.
pub fn apsp(transport: &TransportGraph) -> Result<DistanceMatrix, TransformError> {
    let order: Vec<BusId> = transport.nodes().into_iter().collect();
    let index: BTreeMap<BusId, usize> = order.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let n = order.len();
    let mut dist = vec![UNREACHED; n * n];
    for i in 0..n {
        dist[i * n + i] = 0;
    }
    for &(u, v, feet) in &transport.edges {
        let (i, j) = (index[&u], index[&v]);
        dist[i * n + j] = dist[i * n + j].min(feet);
        dist[j * n + i] = dist[j * n + i].min(feet);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik == UNREACHED {
                continue;
            }
            for j in 0..n {
                let alt = dik + dist[k * n + j];
                if alt < dist[i * n + j] {
                    dist[i * n + j] = alt;
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist[i * n + j] >= UNREACHED {
                return Err(TransformError::Unreachable { a: order[i], b: order[j] });
            }
        }
    }
    Ok(DistanceMatrix { order, index, dist })
}

/// Complete doubly weighted job graph. Node 0 is the root (the contracted
/// energized region); the remaining nodes are repair jobs.
///
/// Travel times along the root row and column are zero: time accounting for
/// a crew starts at its first job site and the trip home is free. The
/// physical travel time from the root region to each job is kept separately
/// in `root_travel_min`, which the model needs when it appends a parking
/// node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkingGraph {
    repair_min: Vec<f64>,
    reward: Vec<f64>,
    penalty: Vec<f64>,
    damaged: Vec<bool>,
    travel_min: Vec<f64>,
    root_travel_min: Vec<f64>,
}

impl WorkingGraph {
    /// Builds a working graph in which every non-root node is a damaged job.
    ///
    /// `travel` is a full `n x n` matrix in minutes; it must be symmetric
    /// with a zero diagonal and zero root row/column.
    pub fn new(
        repair_min: Vec<f64>,
        reward: Vec<f64>,
        penalty: Vec<f64>,
        travel: Vec<Vec<f64>>,
    ) -> Result<Self, TransformError> {
        let n = repair_min.len();
        let bad = |msg: String| Err(TransformError::BadWorkingGraph(msg));
        if n == 0 {
            return bad("empty node set".into());
        }
        if reward.len() != n || penalty.len() != n || travel.len() != n {
            return bad("field lengths disagree".into());
        }
        if repair_min[0] != 0.0 || reward[0] != 0.0 {
            return bad("root must have zero repair time and reward".into());
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in travel.iter().enumerate() {
            if row.len() != n {
                return bad(format!("travel row {i} has wrong length"));
            }
            for (j, &t) in row.iter().enumerate() {
                if t < 0.0 || t.is_nan() {
                    return bad(format!("travel({i},{j}) is not a nonnegative number"));
                }
                if (travel[j][i] - t).abs() != 0.0 {
                    return bad(format!("travel matrix asymmetric at ({i},{j})"));
                }
                if i == j && t != 0.0 {
                    return bad(format!("travel({i},{i}) must be zero"));
                }
                if (i == 0 || j == 0) && t != 0.0 {
                    return bad("root travel row/column must be zero".into());
                }
                flat.push(t);
            }
        }
        let mut damaged = vec![true; n];
        damaged[0] = false;
        Ok(Self {
            repair_min,
            reward,
            penalty,
            damaged,
            travel_min: flat,
            root_travel_min: vec![0.0; n],
        })
    }

    /// Attaches the physical root-to-job travel times (minutes).
    pub fn with_root_travel(mut self, root_travel_min: Vec<f64>) -> Self {
        assert_eq!(root_travel_min.len(), self.node_count());
        self.root_travel_min = root_travel_min;
        self
    }

    pub fn node_count(&self) -> usize {
        self.repair_min.len()
    }

    /// Job node ids (everything except the root).
    pub fn jobs(&self) -> std::ops::Range<usize> {
        1..self.node_count()
    }

    pub fn job_count(&self) -> usize {
        self.node_count() - 1
    }

    pub fn repair(&self, i: usize) -> f64 {
        self.repair_min[i]
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.reward[i]
    }

    pub fn penalty(&self, i: usize) -> f64 {
        self.penalty[i]
    }

    pub fn is_damaged(&self, i: usize) -> bool {
        self.damaged[i]
    }

    pub fn travel(&self, i: usize, j: usize) -> f64 {
        self.travel_min[i * self.node_count() + j]
    }

    pub fn root_travel(&self, i: usize) -> f64 {
        self.root_travel_min[i]
    }

    pub fn scale_rewards(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for r in &mut g.reward {
            *r *= factor;
        }
        g
    }
}

/// Directed precedence arcs over working-graph nodes: an arc `i -> j` means
/// job `j` can only be energized once `i` is repaired (or `i` is the root).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecedenceDag {
    pub node_count: usize,
    pub arcs: Vec<(usize, usize)>,
}

impl PrecedenceDag {
    pub fn new(node_count: usize, arcs: Vec<(usize, usize)>) -> Self {
        Self { node_count, arcs }
    }

    pub fn empty(node_count: usize) -> Self {
        Self { node_count, arcs: Vec::new() }
    }

    /// Parent of each node, if the arc set forms a forest (at most one
    /// incoming arc per node).
    pub fn parent_map(&self) -> Result<Vec<Option<usize>>, TransformError> {
        let mut parent = vec![None; self.node_count];
        for &(i, j) in &self.arcs {
            if i >= self.node_count || j >= self.node_count {
                return Err(TransformError::NotATree(format!("arc ({i},{j}) out of range")));
            }
            if j == 0 {
                return Err(TransformError::NotATree("arc into the root".into()));
            }
            if parent[j].replace(i).is_some() {
                return Err(TransformError::NotATree(format!("node {j} has two parents")));
            }
        }
        Ok(parent)
    }
}

/// Deletes every undamaged non-root node from a rooted precedence tree and
/// rewires each damaged node to its nearest damaged ancestor (the root when
/// none exists). Returns the rewired arcs (original node ids) and the sorted
/// list of deleted nodes.
///
/// Nodes that neither appear on an arc nor are damaged are treated as
/// already absent, so collapsing twice is a no-op.
pub fn collapse_undamaged(
    dag: &PrecedenceDag,
    damaged: &[bool],
) -> Result<(PrecedenceDag, Vec<usize>), TransformError> {
    assert_eq!(damaged.len(), dag.node_count);
    let parent = dag.parent_map()?;

    let mut present = vec![false; dag.node_count];
    if dag.node_count > 0 {
        present[0] = true;
    }
    for &(i, j) in &dag.arcs {
        present[i] = true;
        present[j] = true;
    }
    for (i, &d) in damaged.iter().enumerate() {
        if d {
            present[i] = true;
        }
    }

    // Reject cycles: every present node must reach the root through parents.
    for (start, _) in present.iter().enumerate().filter(|&(_, &p)| p) {
        let mut hops = 0usize;
        let mut cur = start;
        while cur != 0 {
            match parent[cur] {
                Some(p) => cur = p,
                None => {
                    return Err(TransformError::NotATree(format!(
                        "node {start} does not reach the root"
                    )))
                }
            }
            hops += 1;
            if hops > dag.node_count {
                return Err(TransformError::NotATree("cycle detected".into()));
            }
        }
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); dag.node_count];
    for &(i, j) in &dag.arcs {
        children[i].push(j);
    }

    // Step 1: repeatedly delete undamaged leaves.
    let mut alive = present.clone();
    let mut child_count: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut queue: Vec<usize> = (1..dag.node_count)
        .filter(|&i| alive[i] && !damaged[i] && child_count[i] == 0)
        .collect();
    while let Some(leaf) = queue.pop() {
        alive[leaf] = false;
        if let Some(p) = parent[leaf] {
            child_count[p] -= 1;
            if p != 0 && alive[p] && !damaged[p] && child_count[p] == 0 {
                queue.push(p);
            }
        }
    }

    // Step 2: rewire each damaged node to its nearest damaged ancestor; the
    // undamaged interior nodes skipped over are deleted as well.
    let mut arcs = Vec::new();
    for j in 1..dag.node_count {
        if !alive[j] || !damaged[j] {
            continue;
        }
        let mut anc = parent[j].expect("non-root present node has a parent");
        while anc != 0 && !damaged[anc] {
            alive[anc] = false;
            anc = parent[anc].expect("non-root present node has a parent");
        }
        arcs.push((anc, j));
    }

    let deleted: Vec<usize> =
        (1..dag.node_count).filter(|&i| present[i] && !damaged[i]).collect();
    arcs.sort_unstable();
    Ok((PrecedenceDag::new(dag.node_count, arcs), deleted))
}

/// Bijection between working-graph job nodes and the damaged lines they
/// repair. Job node `k` (for `k >= 1`) corresponds to `lines()[k - 1]`,
/// stored as the power-flow-oriented `(upstream, downstream)` bus pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobMap {
    lines: Vec<(BusId, BusId)>,
}

impl JobMap {
    pub fn lines(&self) -> &[(BusId, BusId)] {
        &self.lines
    }

    pub fn line_for(&self, node: usize) -> Option<(BusId, BusId)> {
        node.checked_sub(1).and_then(|k| self.lines.get(k)).copied()
    }

    /// Node id for the line with the given endpoints, in either order.
    pub fn node_for(&self, u: BusId, v: BusId) -> Option<usize> {
        self.lines
            .iter()
            .position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
            .map(|k| k + 1)
    }
}

/// Runs the full pipeline: contract the energized region, build the directed
/// line graph, collapse undamaged nodes, and assemble the complete travel
/// matrix over the surviving jobs.
///
/// `energized` must be a connected subtree of buses containing the source;
/// pass just `{source}` when nothing has been restored yet. Travel times are
/// shortest-path distances between job sites (each job sits at the
/// downstream bus of its line) divided by `speed_ft_min`; an infinite speed
/// yields zero travel everywhere.
pub fn build_working_graphs(
    net: &DistributionNetwork,
    transport: &TransportGraph,
    energized: &BTreeSet<BusId>,
    speed_ft_min: f64,
) -> Result<(WorkingGraph, PrecedenceDag, JobMap), TransformError> {
    if speed_ft_min.is_nan() || speed_ft_min <= 0.0 {
        return Err(TransformError::BadSpeed(speed_ft_min));
    }
    let oriented = orient_power_flow(net)?;
    let buses = net.buses();
    if !energized.contains(&net.source) || !energized.iter().all(|b| buses.contains(b)) {
        return Err(TransformError::BadEnergizedRegion);
    }

    // The energized region must be downward-closed from the source: every
    // energized bus other than the source needs its tree parent energized.
    let mut tree_parent: BTreeMap<BusId, BusId> = BTreeMap::new();
    for &(p, c) in &oriented {
        tree_parent.insert(c, p);
    }
    for &b in energized {
        if b != net.source && !energized.contains(&tree_parent[&b]) {
            return Err(TransformError::BadEnergizedRegion);
        }
    }

    // Line-graph nodes: every line whose downstream bus is outside the
    // energized region. Lines fully inside the region are contracted away
    // and must not be damaged.
    let mut entries: Vec<(BusId, BusId, usize)> = Vec::new(); // (parent, child, line index)
    for (idx, &(p, c)) in oriented.iter().enumerate() {
        if energized.contains(&c) {
            if net.lines[idx].damaged {
                return Err(TransformError::DamagedInsideEnergized { u: p, v: c });
            }
            continue;
        }
        entries.push((p, c, idx));
    }
    entries.sort_unstable_by_key(|&(p, c, _)| (p, c));

    let full_count = entries.len() + 1;
    let node_of_child: BTreeMap<BusId, usize> =
        entries.iter().enumerate().map(|(k, &(_, c, _))| (c, k + 1)).collect();
    let mut full_arcs = Vec::with_capacity(entries.len());
    let mut full_damaged = vec![false; full_count];
    for (k, &(p, _c, idx)) in entries.iter().enumerate() {
        let tail = if energized.contains(&p) { 0 } else { node_of_child[&p] };
        full_arcs.push((tail, k + 1));
        full_damaged[k + 1] = net.lines[idx].damaged;
    }
    let full_dag = PrecedenceDag::new(full_count, full_arcs);
    let (collapsed, _deleted) = collapse_undamaged(&full_dag, &full_damaged)?;

    // Rebase onto the surviving (damaged) nodes, keeping their sorted order.
    let kept: Vec<usize> = (1..full_count).filter(|&k| full_damaged[k]).collect();
    let mut new_id = vec![usize::MAX; full_count];
    new_id[0] = 0;
    for (rank, &old) in kept.iter().enumerate() {
        new_id[old] = rank + 1;
    }
    let arcs: Vec<(usize, usize)> =
        collapsed.arcs.iter().map(|&(i, j)| (new_id[i], new_id[j])).collect();
    let n = kept.len() + 1;
    let dag = PrecedenceDag::new(n, arcs);

    let job_lines: Vec<(BusId, BusId)> =
        kept.iter().map(|&k| (entries[k - 1].0, entries[k - 1].1)).collect();
    let sites: Vec<BusId> = job_lines.iter().map(|&(_, c)| c).collect();

    let distances = apsp(transport)?;
    // A job site missing from the road map violates the reachability
    // assumption just as an unconnected one does.
    let lookup = |a: BusId, b: BusId| -> Result<u64, TransformError> {
        distances.try_feet(a, b).ok_or(TransformError::Unreachable { a, b })
    };
    let mut travel = vec![vec![0.0; n]; n];
    for a in 1..n {
        for b in 1..n {
            if a != b {
                travel[a][b] = lookup(sites[a - 1], sites[b - 1])? as f64 / speed_ft_min;
            }
        }
    }
    let mut root_travel = vec![0.0; n];
    for a in 1..n {
        root_travel[a] = lookup(net.source, sites[a - 1])? as f64 / speed_ft_min;
    }

    let mut repair = vec![0.0; n];
    let mut reward = vec![0.0; n];
    let mut penalty = vec![0.0; n];
    for (k, &old) in kept.iter().enumerate() {
        let line = &net.lines[entries[old - 1].2];
        repair[k + 1] = line.repair_min;
        reward[k + 1] = line.reward;
        penalty[k + 1] = line.penalty;
    }

    let gw = WorkingGraph::new(repair, reward, penalty, travel)?.with_root_travel(root_travel);
    Ok((gw, dag, JobMap { lines: job_lines }))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::net::Line;
    use crate::rng::SplitMix64;

    #[test]
    fn apsp_triangle() {
        let t = TransportGraph::new(vec![(1, 2, 3), (2, 3, 4), (1, 3, 5)]);
        let d = apsp(&t).unwrap();
        assert_eq!(d.feet(1, 3), 5); // direct edge beats 3 + 4
        assert_eq!(d.feet(1, 2), 3);
        assert_eq!(d.feet(2, 3), 4);
    }

    #[test]
    fn apsp_path() {
        let t = TransportGraph::new(vec![(1, 2, 10), (2, 3, 20)]);
        let d = apsp(&t).unwrap();
        assert_eq!(d.feet(1, 3), 30);
    }

    #[test]
    fn apsp_unreachable_names_pair() {
        let t = TransportGraph::new(vec![(1, 2, 10), (3, 4, 20)]);
        match apsp(&t) {
            Err(TransformError::Unreachable { a: 1, b: 3 }) => {}
            other => panic!("expected unreachable(1,3), got {other:?}"),
        }
    }

    /// Independent oracle: per-source Dijkstra with a binary heap.
    fn dijkstra(transport: &TransportGraph, src: BusId) -> BTreeMap<BusId, u64> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut adj: BTreeMap<BusId, Vec<(BusId, u64)>> = BTreeMap::new();
        for &(u, v, w) in &transport.edges {
            adj.entry(u).or_default().push((v, w));
            adj.entry(v).or_default().push((u, w));
        }
        let mut dist = BTreeMap::from([(src, 0u64)]);
        let mut heap = BinaryHeap::from([(Reverse(0u64), src)]);
        while let Some((Reverse(d), u)) = heap.pop() {
            if dist.get(&u).is_some_and(|&best| d > best) {
                continue;
            }
            for &(v, w) in adj.get(&u).into_iter().flatten() {
                let alt = d + w;
                if dist.get(&v).is_none_or(|&best| alt < best) {
                    dist.insert(v, alt);
                    heap.push((Reverse(alt), v));
                }
            }
        }
        dist
    }

    #[test]
    fn apsp_matches_dijkstra_oracle() {
        for seed in 0..10 {
            let mut rng = SplitMix64::new(seed);
            let n: u64 = 50;
            // random connected graph: spanning chain plus random chords
            let mut edges: Vec<(BusId, BusId, u64)> = (1..n)
                .map(|i| (i as u32 - 1, i as u32, 1 + rng.next_below(1000)))
                .collect();
            for _ in 0..60 {
                let a = rng.next_below(n) as u32;
                let b = rng.next_below(n) as u32;
                if a != b {
                    edges.push((a, b, 1 + rng.next_below(1000)));
                }
            }
            let t = TransportGraph::new(edges);
            let d = apsp(&t).unwrap();
            for src in 0..n as u32 {
                let oracle = dijkstra(&t, src);
                for dst in 0..n as u32 {
                    assert_eq!(d.feet(src, dst), oracle[&dst], "{src}->{dst}");
                }
            }
        }
    }

    /// The network of the worked pipeline example: buses 1..9, source 1,
    /// lines (1,2) and (1,3) already repaired/energized, the other six
    /// damaged.
    pub(crate) fn example_network() -> (DistributionNetwork, BTreeSet<BusId>) {
        let lines = vec![
            Line::undamaged(1, 2, 40),
            Line::undamaged(1, 3, 40),
            Line::damaged(2, 4, 10, 1.0, 1.0),
            Line::damaged(2, 5, 20, 1.0, 1.0),
            Line::damaged(3, 6, 30, 1.0, 1.0),
            Line::damaged(3, 7, 40, 1.0, 1.0),
            Line::damaged(4, 8, 50, 1.0, 1.0),
            Line::damaged(7, 9, 60, 1.0, 1.0),
        ];
        let net = DistributionNetwork::new_radial(1, lines).unwrap();
        (net, BTreeSet::from([1, 2, 3]))
    }

    #[test]
    fn example_working_graph_shape() {
        let (net, energized) = example_network();
        let transport = TransportGraph::from_distribution(&net);
        let (gw, dag, map) = build_working_graphs(&net, &transport, &energized, 1.0).unwrap();

        // Six damaged lines plus the root.
        assert_eq!(gw.node_count(), 7);
        // 21 unordered travel pairs, symmetric, zero on the root row.
        let mut pairs = 0;
        for i in 0..7 {
            for j in i + 1..7 {
                pairs += 1;
                assert_eq!(gw.travel(i, j), gw.travel(j, i));
                if i == 0 {
                    assert_eq!(gw.travel(i, j), 0.0);
                }
            }
        }
        assert_eq!(pairs, 21);

        // Precedence: one arc per damaged node; the two deep jobs hang off
        // their boundary lines, everything else off the root.
        assert_eq!(dag.arcs.len(), 6);
        let arc_lines: BTreeSet<((BusId, BusId), (BusId, BusId))> = dag
            .arcs
            .iter()
            .map(|&(i, j)| {
                let tail = map.line_for(i).unwrap_or((0, 0)); // (0,0) = root
                (tail, map.line_for(j).unwrap())
            })
            .collect();
        let expected: BTreeSet<((BusId, BusId), (BusId, BusId))> = BTreeSet::from([
            ((0, 0), (2, 4)),
            ((0, 0), (2, 5)),
            ((0, 0), (3, 6)),
            ((0, 0), (3, 7)),
            ((2, 4), (4, 8)),
            ((3, 7), (7, 9)),
        ]);
        assert_eq!(arc_lines, expected);
    }

    #[test]
    fn chain_precedence() {
        let lines = vec![
            Line::damaged(1, 2, 10, 30.0, 1.0),
            Line::damaged(2, 3, 10, 30.0, 1.0),
            Line::damaged(3, 4, 10, 20.0, 1.0),
        ];
        let net = DistributionNetwork::new_radial(1, lines).unwrap();
        let transport = TransportGraph::from_distribution(&net);
        let (gw, dag, map) = build_working_graphs(&net, &transport, &BTreeSet::from([1]), 1.0).unwrap();
        assert_eq!(gw.node_count(), 4);
        assert_eq!(dag.arcs, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(map.lines(), &[(1, 2), (2, 3), (3, 4)]);
    }

    /// Rooted tree used by the collapse examples: damaged set
    /// {3,4,5,7,12,14}; node 10 is an undamaged leaf placed under node 2.
    fn collapse_fixture() -> (PrecedenceDag, Vec<bool>) {
        let arcs = vec![
            (0, 1),
            (0, 2),
            (0, 3),
            (0, 4),
            (0, 5),
            (1, 6),
            (6, 11),
            (2, 7),
            (2, 10),
            (3, 8),
            (8, 12),
            (4, 9),
            (9, 13),
            (13, 14),
        ];
        let mut damaged = vec![false; 15];
        for i in [3, 4, 5, 7, 12, 14] {
            damaged[i] = true;
        }
        (PrecedenceDag::new(15, arcs), damaged)
    }

    #[test]
    fn collapse_rewires_to_nearest_damaged_ancestor() {
        let (dag, damaged) = collapse_fixture();
        let (out, deleted) = collapse_undamaged(&dag, &damaged).unwrap();
        assert_eq!(out.arcs, vec![(0, 3), (0, 4), (0, 5), (0, 7), (3, 12), (4, 14)]);
        assert_eq!(deleted, vec![1, 2, 6, 8, 9, 10, 11, 13]);
    }

    #[test]
    fn collapse_fully_damaged_is_identity() {
        let arcs = vec![(0, 1), (1, 2), (1, 3), (0, 4)];
        let dag = PrecedenceDag::new(5, arcs.clone());
        let damaged = vec![false, true, true, true, true];
        let (out, deleted) = collapse_undamaged(&dag, &damaged).unwrap();
        let mut expect = arcs;
        expect.sort_unstable();
        assert_eq!(out.arcs, expect);
        assert!(deleted.is_empty());
    }

    #[test]
    fn collapse_is_idempotent() {
        let (dag, damaged) = collapse_fixture();
        let (once, _) = collapse_undamaged(&dag, &damaged).unwrap();
        let (twice, deleted) = collapse_undamaged(&once, &damaged).unwrap();
        assert_eq!(once.arcs, twice.arcs);
        assert!(deleted.is_empty());
    }

    #[test]
    fn collapse_rejects_cycles() {
        let dag = PrecedenceDag::new(3, vec![(1, 2), (2, 1)]);
        assert!(collapse_undamaged(&dag, &[false, true, true]).is_err());
    }

    fn random_rooted_tree(rng: &mut SplitMix64, n: usize) -> PrecedenceDag {
        let arcs = (1..n).map(|c| (rng.next_below(c as u64) as usize, c)).collect();
        PrecedenceDag::new(n, arcs)
    }

    #[test]
    fn collapse_matches_ancestor_walk_oracle() {
        // Oracle: recompute each damaged node's nearest damaged ancestor by
        // walking the original parent chain, independently of the two-step
        // deletion procedure.
        for seed in 0..500 {
            let mut rng = SplitMix64::new(40_000 + seed);
            let n = 2 + rng.next_below(30) as usize;
            let dag = random_rooted_tree(&mut rng, n);
            let damaged: Vec<bool> =
                (0..n).map(|i| i != 0 && rng.next_below(100) < 45).collect();

            let mut parent = vec![0usize; n];
            for &(i, j) in &dag.arcs {
                parent[j] = i;
            }
            let mut expect: Vec<(usize, usize)> = (1..n)
                .filter(|&j| damaged[j])
                .map(|j| {
                    let mut a = parent[j];
                    while a != 0 && !damaged[a] {
                        a = parent[a];
                    }
                    (a, j)
                })
                .collect();
            expect.sort_unstable();

            let (out, deleted) = collapse_undamaged(&dag, &damaged).unwrap();
            assert_eq!(out.arcs, expect, "seed {seed}");
            let expect_deleted: Vec<usize> = (1..n).filter(|&i| !damaged[i]).collect();
            assert_eq!(deleted, expect_deleted, "seed {seed}");
        }
    }

    #[test]
    fn star_precedence_is_all_root_tailed() {
        for seed in 0..20 {
            let mut rng = SplitMix64::new(7_000 + seed);
            let spokes = 2 + rng.next_below(8) as u32;
            let lines: Vec<Line> = (1..=spokes)
                .map(|s| Line::damaged(0, s, 1 + rng.next_below(50), 10.0, 1.0))
                .collect();
            let net = DistributionNetwork::new_radial(0, lines).unwrap();
            let transport = TransportGraph::from_distribution(&net);
            let (_, dag, _) =
                build_working_graphs(&net, &transport, &BTreeSet::from([0]), 2.0).unwrap();
            assert!(dag.arcs.iter().all(|&(tail, _)| tail == 0));
            assert_eq!(dag.arcs.len(), spokes as usize);
        }
    }

    #[test]
    fn travel_divides_exactly_by_speed() {
        let (net, energized) = example_network();
        let transport = TransportGraph::from_distribution(&net);
        let speed = 141.0;
        let (gw, _, map) = build_working_graphs(&net, &transport, &energized, speed).unwrap();
        let d = apsp(&transport).unwrap();
        for i in gw.jobs() {
            for j in gw.jobs() {
                if i == j {
                    continue;
                }
                let (_, si) = map.line_for(i).unwrap();
                let (_, sj) = map.line_for(j).unwrap();
                let expect = d.feet(si, sj) as f64 / speed;
                assert_eq!(gw.travel(i, j).to_bits(), expect.to_bits());
            }
        }
    }

    #[test]
    fn arc_count_equals_job_count_after_collapse() {
        for seed in 0..50 {
            let mut rng = SplitMix64::new(90_000 + seed);
            let n = 3 + rng.next_below(15) as usize;
            let tree = crate::net::tests::random_tree(&mut rng, n);
            let mut lines = tree.lines.clone();
            let mut any = false;
            for l in &mut lines {
                if rng.next_below(2) == 0 {
                    l.damaged = true;
                    l.repair_min = 5.0;
                    l.reward = 1.0;
                    any = true;
                }
            }
            if !any {
                lines[0].damaged = true;
                lines[0].repair_min = 5.0;
                lines[0].reward = 1.0;
            }
            let net = DistributionNetwork::new_radial(0, lines).unwrap();
            let transport = TransportGraph::from_distribution(&net);
            let (gw, dag, _) =
                build_working_graphs(&net, &transport, &BTreeSet::from([0]), 3.0).unwrap();
            assert_eq!(dag.arcs.len(), gw.job_count());
        }
    }

    #[test]
    fn infinite_speed_zeroes_travel() {
        let (net, energized) = example_network();
        let transport = TransportGraph::from_distribution(&net);
        let (gw, _, _) =
            build_working_graphs(&net, &transport, &energized, f64::INFINITY).unwrap();
        for i in 0..gw.node_count() {
            for j in 0..gw.node_count() {
                assert_eq!(gw.travel(i, j), 0.0);
            }
        }
    }

    #[test]
    fn rejects_damaged_line_inside_energized_region() {
        let (net, _) = example_network();
        let transport = TransportGraph::from_distribution(&net);
        // Bus 4 energized but line (2,4) is damaged.
        let energized = BTreeSet::from([1, 2, 3, 4]);
        assert!(matches!(
            build_working_graphs(&net, &transport, &energized, 1.0),
            Err(TransformError::DamagedInsideEnergized { u: 2, v: 4 })
        ));
    }

    #[test]
    fn rejects_disconnected_energized_region() {
        let (net, _) = example_network();
        let transport = TransportGraph::from_distribution(&net);
        // Bus 4's parent (2) missing from the region.
        let energized = BTreeSet::from([1, 4]);
        assert!(matches!(
            build_working_graphs(&net, &transport, &energized, 1.0),
            Err(TransformError::BadEnergizedRegion)
        ));
    }
}
