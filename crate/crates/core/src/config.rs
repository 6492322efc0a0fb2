//! Classification of initial configurations and canonical leader election.
//!
//! A configuration is the multiset of homebase positions, described by the
//! inter-distance sequence between consecutive homebases. Classes are
//! mutually exclusive with precedence periodic > edge-edge > node-symmetric
//! > asymmetric. Election follows the canonical construction: the unique
//! lexicographically smallest sequence picks a homebase in asymmetric
//! configurations; symmetric ones elect the axis crossing in the shorter
//! arc between the two palindrome-starting homebases.

use crate::ring::{Direction, EdgeId, NodeId, RingTopology};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("need at least 2 homebases")]
    TooFewHomebases,
}

/// Rotation direction for inter-distance sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotDir {
    Cw,
    Ccw,
}

/// The clockwise gap sequence between consecutive homebases together with
/// all materialized rotations in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterDistanceView {
    /// d_0..d_{k-1}: clockwise gaps, starting from the lowest-index homebase.
    pub distances: Vec<usize>,
    /// Homebase node for rotation start j.
    pub start_nodes: Vec<NodeId>,
    /// Rotation j in clockwise reading: <d_j, d_{j+1}, ...>.
    pub rotations_cw: Vec<Vec<usize>>,
    /// Rotation j in counter-clockwise reading: <d_{j-1}, d_{j-2}, ...>.
    pub rotations_ccw: Vec<Vec<usize>>,
}

pub fn compute_inter_distances(topo: &RingTopology) -> Result<InterDistanceView, ConfigError> {
    let hb = topo.homebases();
    if hb.len() < 2 {
        return Err(ConfigError::TooFewHomebases);
    }
    let k = hb.len();
    let n = topo.n();
    let mut distances = Vec::with_capacity(k);
    for i in 0..k {
        let a = hb[i];
        let b = hb[(i + 1) % k];
        distances.push((b + n - a) % n);
    }
    debug_assert_eq!(distances.iter().sum::<usize>(), n);

    let rotations_cw: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..k).map(|t| distances[(j + t) % k]).collect())
        .collect();
    let rotations_ccw: Vec<Vec<usize>> = (0..k)
        .map(|j| (0..k).map(|t| distances[(j + k - 1 - t) % k]).collect())
        .collect();

    Ok(InterDistanceView {
        distances,
        start_nodes: hb.to_vec(),
        rotations_cw,
        rotations_ccw,
    })
}

/// The ascending lexicographic minimum over both rotation sets, with every
/// (direction, start homebase ordinal) pair achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaMin {
    pub sequence: Vec<usize>,
    pub achieved: Vec<(RotDir, usize)>,
}

pub fn delta_min(view: &InterDistanceView) -> DeltaMin {
    let mut best: Option<&Vec<usize>> = None;
    for seq in view.rotations_cw.iter().chain(view.rotations_ccw.iter()) {
        if best.is_none_or(|b| seq < b) {
            best = Some(seq);
        }
    }
    let best = best.expect("at least two homebases").clone();
    let mut achieved = Vec::new();
    for (j, seq) in view.rotations_cw.iter().enumerate() {
        if *seq == best {
            achieved.push((RotDir::Cw, j));
        }
    }
    for (j, seq) in view.rotations_ccw.iter().enumerate() {
        if *seq == best {
            achieved.push((RotDir::Ccw, j));
        }
    }
    DeltaMin {
        sequence: best,
        achieved,
    }
}

/// Configuration class. Periodic and edge-edge configurations are the
/// unsolvable sets for the protocols that need a node leader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigClass {
    Periodic { period: usize },
    /// Unique symmetry axis crossing two edges; both arcs between the
    /// palindrome homebases have odd length.
    EdgeEdge { axis: (EdgeId, EdgeId) },
    /// Double-palindrome whose axis passes through at least one node.
    NodeSymmetric {
        axis_nodes: Vec<NodeId>,
        axis_edge: Option<EdgeId>,
    },
    Asymmetric,
}

impl ConfigClass {
    pub fn is_periodic(&self) -> bool {
        matches!(self, ConfigClass::Periodic { .. })
    }
    pub fn is_edge_edge(&self) -> bool {
        matches!(self, ConfigClass::EdgeEdge { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoLeaderReason {
    Periodic,
    EdgeEdgeWithoutChirality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectionResult {
    LeaderNode(NodeId),
    LeaderEdge(EdgeId),
    NoLeader(NoLeaderReason),
}

/// Smallest proper period p | k with d_i = d_{i+p} for all i.
fn period_of(distances: &[usize]) -> Option<usize> {
    let k = distances.len();
    for p in 1..k {
        if k % p != 0 {
            continue;
        }
        if (0..k).all(|i| distances[i] == distances[(i + p) % k]) {
            return Some(p);
        }
    }
    None
}

/// The two axis crossings of the reflection swapping nodes `a` and `b`, in
/// half-positions: node v sits at 2v, edge v at 2v+1. The crossing at
/// `a + b` is the midpoint of the clockwise arc a -> b, the other one the
/// midpoint of the complementary arc.
fn axis_crossings(n: usize, a: NodeId, b: NodeId) -> [usize; 2] {
    let c = (2 * a + ((b + n - a) % n)) % (2 * n);
    [c, (c + n) % (2 * n)]
}

enum Crossing {
    Node(NodeId),
    Edge(EdgeId),
}

fn crossing_at(half: usize) -> Crossing {
    if half % 2 == 0 {
        Crossing::Node(half / 2)
    } else {
        Crossing::Edge(EdgeId((half - 1) / 2))
    }
}

pub fn classify(topo: &RingTopology) -> ConfigClass {
    let view = compute_inter_distances(topo).expect("topology guarantees k >= 2");
    classify_view(topo.n(), &view)
}

fn classify_view(n: usize, view: &InterDistanceView) -> ConfigClass {
    if let Some(p) = period_of(&view.distances) {
        return ConfigClass::Periodic { period: p };
    }
    let dm = delta_min(view);
    let cw: Vec<usize> = dm
        .achieved
        .iter()
        .filter(|(d, _)| *d == RotDir::Cw)
        .map(|&(_, j)| j)
        .collect();
    let ccw: Vec<usize> = dm
        .achieved
        .iter()
        .filter(|(d, _)| *d == RotDir::Ccw)
        .map(|&(_, j)| j)
        .collect();
    // Non-periodic: at most one start per direction; symmetric iff both.
    assert!(cw.len() <= 1 && ccw.len() <= 1, "repeated rotation implies periodicity");
    if cw.is_empty() || ccw.is_empty() {
        return ConfigClass::Asymmetric;
    }
    let a = view.start_nodes[cw[0]];
    let b = view.start_nodes[ccw[0]];
    let halves = axis_crossings(n, a, b);
    let mut axis_nodes = Vec::new();
    let mut axis_edges = Vec::new();
    for h in halves {
        match crossing_at(h) {
            Crossing::Node(v) => axis_nodes.push(v),
            Crossing::Edge(e) => axis_edges.push(e),
        }
    }
    if axis_nodes.is_empty() {
        ConfigClass::EdgeEdge {
            axis: (axis_edges[0], axis_edges[1]),
        }
    } else {
        ConfigClass::NodeSymmetric {
            axis_nodes,
            axis_edge: axis_edges.first().copied(),
        }
    }
}

/// Geometry of a double-palindrome: the crossing in the clockwise arc
/// a -> b and the crossing in the complementary arc, with arc lengths and
/// the gap sub-sequences along each arc.
struct PalindromeArcs {
    /// (crossing half-position, arc length, gap sequence along the arc)
    arcs: [(usize, usize, Vec<usize>); 2],
}

fn palindrome_arcs(n: usize, view: &InterDistanceView, i: usize, j: usize) -> PalindromeArcs {
    let k = view.distances.len();
    let a = view.start_nodes[i];
    let b = view.start_nodes[j];
    let halves = axis_crossings(n, a, b);
    let len1 = (b + n - a) % n;
    let len2 = n - len1;
    let m1 = (j + k - i) % k;
    let gaps1: Vec<usize> = (0..m1).map(|t| view.distances[(i + t) % k]).collect();
    let gaps2: Vec<usize> = (0..k - m1).map(|t| view.distances[(j + t) % k]).collect();
    PalindromeArcs {
        arcs: [(halves[0], len1, gaps1), (halves[1], len2, gaps2)],
    }
}

/// Pick between the two axis crossings: shorter arc wins; equal-length
/// arcs are distinguished by the lexicographically smaller gap sequence.
/// A tie there would imply periodicity, which is excluded.
fn pick_arc(arcs: &PalindromeArcs, want_node: bool) -> usize {
    let eligible: Vec<&(usize, usize, Vec<usize>)> = arcs
        .arcs
        .iter()
        .filter(|(h, _, _)| (h % 2 == 0) == want_node)
        .collect();
    match eligible.len() {
        1 => eligible[0].0,
        2 => {
            let (x, y) = (eligible[0], eligible[1]);
            if x.1 != y.1 {
                if x.1 < y.1 {
                    x.0
                } else {
                    y.0
                }
            } else if x.2 < y.2 {
                x.0
            } else if y.2 < x.2 {
                y.0
            } else {
                unreachable!("equal arcs with equal gap sequences imply periodicity")
            }
        }
        _ => unreachable!("double palindrome always has a crossing of each kind or two of one"),
    }
}

pub fn elect(topo: &RingTopology, chirality: bool) -> ElectionResult {
    let n = topo.n();
    let view = compute_inter_distances(topo).expect("topology guarantees k >= 2");
    if period_of(&view.distances).is_some() {
        return ElectionResult::NoLeader(NoLeaderReason::Periodic);
    }
    let dm = delta_min(&view);
    let cw: Option<usize> = dm
        .achieved
        .iter()
        .find(|(d, _)| *d == RotDir::Cw)
        .map(|&(_, j)| j);
    let ccw: Option<usize> = dm
        .achieved
        .iter()
        .find(|(d, _)| *d == RotDir::Ccw)
        .map(|&(_, j)| j);

    match (cw, ccw) {
        // Asymmetric: the unique minimal rotation start is the leader.
        (Some(j), None) | (None, Some(j)) => ElectionResult::LeaderNode(view.start_nodes[j]),
        (Some(i), Some(j)) => {
            let arcs = palindrome_arcs(n, &view, i, j);
            let both_odd = arcs.arcs.iter().all(|(_, len, _)| len % 2 == 1);
            if both_odd {
                // Edge-edge: elect the central edge of the shorter arc.
                let half = pick_arc(&arcs, false);
                let e = match crossing_at(half) {
                    Crossing::Edge(e) => e,
                    Crossing::Node(_) => unreachable!(),
                };
                if !chirality {
                    return ElectionResult::LeaderEdge(e);
                }
                // With chirality a node leader is required: take the
                // endpoint of the leader edge reached first when walking
                // clockwise from the homebase starting the clockwise-
                // minimal sequence.
                let start = view.start_nodes[i];
                let u = e.0;
                let v = (e.0 + 1) % n;
                let du = topo.dist(start, u, Direction::Cw);
                let dv = topo.dist(start, v, Direction::Cw);
                ElectionResult::LeaderNode(if du < dv { u } else { v })
            } else {
                // At least one even arc: its central node leads.
                let half = pick_arc(&arcs, true);
                match crossing_at(half) {
                    Crossing::Node(v) => ElectionResult::LeaderNode(v),
                    Crossing::Edge(_) => unreachable!(),
                }
            }
        }
        (None, None) => unreachable!("delta_min is achieved somewhere"),
    }
}

/// Node-leader election per the static-ring characterization: without
/// chirality an edge-edge configuration admits no leader node even though
/// a leader edge exists.
pub fn elect_node(topo: &RingTopology, chirality: bool) -> ElectionResult {
    match elect(topo, chirality) {
        ElectionResult::LeaderEdge(_) => {
            ElectionResult::NoLeader(NoLeaderReason::EdgeEdgeWithoutChirality)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(n: usize, hb: &[usize]) -> RingTopology {
        RingTopology::new(n, hb.to_vec()).unwrap()
    }

    #[test]
    fn paper_example_distances() {
        let view = compute_inter_distances(&topo(16, &[0, 3, 7, 12])).unwrap();
        assert_eq!(view.distances, vec![3, 4, 5, 4]);
    }

    #[test]
    fn antipodal_pair_distances() {
        let view = compute_inter_distances(&topo(8, &[0, 4])).unwrap();
        assert_eq!(view.distances, vec![4, 4]);
    }

    #[test]
    fn small_asymmetric_distances() {
        let view = compute_inter_distances(&topo(7, &[0, 1, 3])).unwrap();
        assert_eq!(view.distances, vec![1, 2, 4]);
    }

    #[test]
    fn delta_min_paper_example() {
        let view = compute_inter_distances(&topo(16, &[0, 3, 7, 12])).unwrap();
        let dm = delta_min(&view);
        assert_eq!(dm.sequence, vec![3, 4, 5, 4]);
        assert_eq!(dm.achieved, vec![(RotDir::Cw, 0), (RotDir::Ccw, 1)]);
    }

    #[test]
    fn delta_min_full_symmetry() {
        let view = compute_inter_distances(&topo(8, &[0, 4])).unwrap();
        let dm = delta_min(&view);
        assert_eq!(dm.sequence, vec![4, 4]);
        assert_eq!(dm.achieved.len(), 4);
    }

    #[test]
    fn delta_min_unique_cw() {
        // Brute force over all 6 rotations confirms <1,2,4> is unique.
        let view = compute_inter_distances(&topo(7, &[0, 1, 3])).unwrap();
        let dm = delta_min(&view);
        assert_eq!(dm.sequence, vec![1, 2, 4]);
        assert_eq!(dm.achieved, vec![(RotDir::Cw, 0)]);
    }

    #[test]
    fn classify_uniform_spacing_is_periodic() {
        assert_eq!(
            classify(&topo(8, &[0, 2, 4, 6])),
            ConfigClass::Periodic { period: 1 }
        );
    }

    #[test]
    fn classify_paper_example_edge_edge() {
        // Axis midway between h0=0,h1=3 (edge 1) and between h2=7,h3=12
        // (edge 9).
        match classify(&topo(16, &[0, 3, 7, 12])) {
            ConfigClass::EdgeEdge { axis } => {
                assert_eq!(axis, (EdgeId(1), EdgeId(9)));
            }
            other => panic!("expected edge-edge, got {other:?}"),
        }
    }

    #[test]
    fn classify_asymmetric() {
        assert_eq!(classify(&topo(7, &[0, 1, 3])), ConfigClass::Asymmetric);
    }

    #[test]
    fn classify_node_symmetric_two_axis_nodes() {
        // {0,4,5,7} on n=8: distances <4,1,2,1>, axis through nodes 2 and 6.
        match classify(&topo(8, &[0, 4, 5, 7])) {
            ConfigClass::NodeSymmetric { mut axis_nodes, axis_edge } => {
                axis_nodes.sort_unstable();
                assert_eq!(axis_nodes, vec![2, 6]);
                assert_eq!(axis_edge, None);
            }
            other => panic!("expected node-symmetric, got {other:?}"),
        }
    }

    #[test]
    fn elect_edge_edge_without_chirality() {
        // Leader edge is in the middle of the shortest portion (length 3).
        assert_eq!(
            elect(&topo(16, &[0, 3, 7, 12]), false),
            ElectionResult::LeaderEdge(EdgeId(1))
        );
        assert_eq!(
            elect_node(&topo(16, &[0, 3, 7, 12]), false),
            ElectionResult::NoLeader(NoLeaderReason::EdgeEdgeWithoutChirality)
        );
    }

    #[test]
    fn elect_edge_edge_with_chirality_picks_endpoint() {
        // Walking cw from h0=0, edge 1 = (1,2): node 1 comes first.
        assert_eq!(
            elect(&topo(16, &[0, 3, 7, 12]), true),
            ElectionResult::LeaderNode(1)
        );
    }

    #[test]
    fn elect_asymmetric_both_settings() {
        for chir in [false, true] {
            assert_eq!(
                elect(&topo(7, &[0, 1, 3]), chir),
                ElectionResult::LeaderNode(0)
            );
        }
    }

    #[test]
    fn elect_periodic_no_leader() {
        for chir in [false, true] {
            assert_eq!(
                elect(&topo(8, &[0, 2, 4, 6]), chir),
                ElectionResult::NoLeader(NoLeaderReason::Periodic)
            );
        }
    }
}
