//! The synchronous dynamic-ring world: topology, port buffers, per-round
//! edge removal, movement resolution, cross events, and per-agent
//! observations.
//!
//! Nodes are `0..n` arranged in a circle. `Direction::Cw` is the global
//! direction of increasing node index; edge `i` connects nodes `i` and
//! `i+1 (mod n)`. At most one edge is absent per round (1-interval
//! connectivity). Each node has an incoming and an outgoing buffer per
//! port; buffers are tagged with the direction of travel they carry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// Global direction around the ring. `Cw` increases node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cw,
    Ccw,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Cw => Direction::Ccw,
            Direction::Ccw => Direction::Cw,
        }
    }

    /// Stable index for two-slot direction tables.
    pub fn index(self) -> usize {
        match self {
            Direction::Cw => 0,
            Direction::Ccw => 1,
        }
    }

    pub const BOTH: [Direction; 2] = [Direction::Cw, Direction::Ccw];
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Cw => write!(f, "cw"),
            Direction::Ccw => write!(f, "ccw"),
        }
    }
}

/// Edge `i` connects node `i` and node `i+1 (mod n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

#[derive(Debug, Error)]
pub enum RingError {
    #[error("ring needs at least 3 nodes, got {0}")]
    TooSmall(usize),
    #[error("need between 2 and n homebases, got {0}")]
    BadHomebaseCount(usize),
    #[error("homebase index {0} out of range")]
    HomebaseOutOfRange(usize),
    #[error("duplicate homebase {0}")]
    DuplicateHomebase(usize),
    #[error("node {0} has equal port labels")]
    EqualPortLabels(usize),
    #[error("invalid edge id {0}")]
    InvalidEdge(usize),
    #[error("expected {expected} intents, got {got}")]
    IntentCount { expected: usize, got: usize },
}

/// Ring topology: node count, marked homebases, per-node port labels.
///
/// Port labels default to `(0, 1)` with label 0 on the counter-clockwise
/// port of every node; scenarios may override per node to exercise
/// election tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingTopology {
    n: usize,
    homebases: Vec<NodeId>,
    /// Per node: (label of the ccw port, label of the cw port).
    port_labels: Vec<(u8, u8)>,
}

impl RingTopology {
    pub fn new(n: usize, homebases: Vec<NodeId>) -> Result<Self, RingError> {
        let labels = vec![(0u8, 1u8); n];
        Self::with_port_labels(n, homebases, labels)
    }

    pub fn with_port_labels(
        n: usize,
        mut homebases: Vec<NodeId>,
        port_labels: Vec<(u8, u8)>,
    ) -> Result<Self, RingError> {
        if n < 3 {
            return Err(RingError::TooSmall(n));
        }
        if homebases.len() < 2 || homebases.len() > n {
            return Err(RingError::BadHomebaseCount(homebases.len()));
        }
        homebases.sort_unstable();
        for w in homebases.windows(2) {
            if w[0] == w[1] {
                return Err(RingError::DuplicateHomebase(w[0]));
            }
        }
        if let Some(&h) = homebases.iter().find(|&&h| h >= n) {
            return Err(RingError::HomebaseOutOfRange(h));
        }
        assert_eq!(port_labels.len(), n, "one label pair per node");
        for (v, &(a, b)) in port_labels.iter().enumerate() {
            if a == b {
                return Err(RingError::EqualPortLabels(v));
            }
        }
        Ok(RingTopology {
            n,
            homebases,
            port_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homebase node indices, ascending. Agent `i` starts at `homebases()[i]`.
    pub fn homebases(&self) -> &[NodeId] {
        &self.homebases
    }

    pub fn agent_count(&self) -> usize {
        self.homebases.len()
    }

    pub fn is_homebase(&self, v: NodeId) -> bool {
        self.homebases.binary_search(&v).is_ok()
    }

    /// (ccw label, cw label) of node `v`.
    pub fn port_labels(&self, v: NodeId) -> (u8, u8) {
        self.port_labels[v]
    }

    pub fn neighbor(&self, v: NodeId, dir: Direction) -> NodeId {
        match dir {
            Direction::Cw => (v + 1) % self.n,
            Direction::Ccw => (v + self.n - 1) % self.n,
        }
    }

    /// Edge crossed when leaving `v` in direction `dir`.
    pub fn edge_from(&self, v: NodeId, dir: Direction) -> EdgeId {
        match dir {
            Direction::Cw => EdgeId(v),
            Direction::Ccw => EdgeId((v + self.n - 1) % self.n),
        }
    }

    /// Ring distance walking from `a` to `b` in direction `dir`.
    pub fn dist(&self, a: NodeId, b: NodeId, dir: Direction) -> usize {
        match dir {
            Direction::Cw => (b + self.n - a) % self.n,
            Direction::Ccw => (a + self.n - b) % self.n,
        }
    }
}

/// Where an agent sits within a node: at the node proper, or in one of the
/// four port buffers. The direction tag of a buffer is the direction of
/// travel it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    AtNode(NodeId),
    OutBuffer(NodeId, Direction),
    InBuffer(NodeId, Direction),
}

impl Location {
    /// The node this location belongs to. Buffer occupants count as being
    /// at the node for co-location and homebase detection.
    pub fn node(&self) -> NodeId {
        match *self {
            Location::AtNode(v) | Location::OutBuffer(v, _) | Location::InBuffer(v, _) => v,
        }
    }

    pub fn buffer_dir(&self) -> Option<Direction> {
        match *self {
            Location::AtNode(_) => None,
            Location::OutBuffer(_, d) | Location::InBuffer(_, d) => Some(d),
        }
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::AtNode(v) => write!(f, "node({v})"),
            Location::OutBuffer(v, d) => write!(f, "out({v},{d})"),
            Location::InBuffer(v, d) => write!(f, "in({v},{d})"),
        }
    }
}

/// Snapshot of the world between rounds. The topology is carried
/// separately; the state holds only what evolves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub round: u64,
    pub locations: Vec<Location>,
    /// Locations at the start of the previous round, for arrival detection.
    pub prev_locations: Vec<Location>,
    /// Set for agents that traversed an edge whose opposite direction was
    /// simultaneously traversed in the round that just completed.
    pub cross_flags: Vec<bool>,
}

/// Per-agent outcome of one `apply_round`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveOutcome {
    /// Traversed an edge this round.
    pub moved: bool,
    /// Sat in an outgoing buffer on the missing edge this round.
    pub blocked: bool,
}

impl WorldState {
    pub fn initial(topo: &RingTopology) -> WorldState {
        let locs: Vec<Location> = topo.homebases.iter().map(|&h| Location::AtNode(h)).collect();
        WorldState {
            round: 0,
            prev_locations: locs.clone(),
            cross_flags: vec![false; locs.len()],
            locations: locs,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.locations.len()
    }

    /// One synchronous round: stage every agent per its intent, then
    /// transfer outgoing-buffer occupants across every present edge. An
    /// agent with no intent places itself at the node (also when currently
    /// on a port); an agent with intent `d` enters the outgoing buffer of
    /// the `d` port and crosses unless that edge is the missing one.
    pub fn apply_round(
        &self,
        topo: &RingTopology,
        missing: Option<EdgeId>,
        intents: &[Option<Direction>],
    ) -> Result<(WorldState, Vec<MoveOutcome>), RingError> {
        if intents.len() != self.locations.len() {
            return Err(RingError::IntentCount {
                expected: self.locations.len(),
                got: intents.len(),
            });
        }
        if let Some(EdgeId(e)) = missing {
            if e >= topo.n() {
                return Err(RingError::InvalidEdge(e));
            }
        }

        let mut staged: Vec<Location> = Vec::with_capacity(self.locations.len());
        for (loc, intent) in self.locations.iter().zip(intents) {
            let v = loc.node();
            staged.push(match intent {
                None => Location::AtNode(v),
                Some(d) => Location::OutBuffer(v, *d),
            });
        }

        // Transfer phase: everyone in an outgoing buffer crosses unless the
        // edge is missing. Track per-edge traffic for cross flags.
        let mut outcomes = vec![MoveOutcome::default(); staged.len()];
        let mut traffic: Vec<[bool; 2]> = vec![[false; 2]; topo.n()];
        let mut traversed_edge: Vec<Option<(EdgeId, Direction)>> = vec![None; staged.len()];
        for (i, loc) in staged.iter_mut().enumerate() {
            if let Location::OutBuffer(v, d) = *loc {
                let e = topo.edge_from(v, d);
                if Some(e) == missing {
                    outcomes[i].blocked = true;
                } else {
                    *loc = Location::InBuffer(topo.neighbor(v, d), d);
                    outcomes[i].moved = true;
                    traffic[e.0][d.index()] = true;
                    traversed_edge[i] = Some((e, d));
                }
            }
        }

        let mut cross_flags = vec![false; staged.len()];
        for (i, te) in traversed_edge.iter().enumerate() {
            if let Some((e, d)) = te {
                if traffic[e.0][d.opposite().index()] {
                    cross_flags[i] = true;
                }
            }
        }

        Ok((
            WorldState {
                round: self.round + 1,
                prev_locations: self.locations.clone(),
                locations: staged,
                cross_flags,
            },
            outcomes,
        ))
    }
}

/// What one agent can see at the start of a round: the occupancy of its
/// node (node proper plus all four buffers), the homebase mark, port
/// labels, arrivals since the previous round, and — when the capability is
/// on — whether it crossed someone in the round that just completed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub round: u64,
    pub at_homebase: bool,
    pub own_location: Location,
    /// (ccw label, cw label) of the current node.
    pub port_labels: (u8, u8),
    pub count_at_node: usize,
    /// Occupancy of the two incoming buffers, indexed by `Direction::index`.
    pub count_in_buf: [usize; 2],
    /// Occupancy of the two outgoing buffers, indexed by `Direction::index`.
    pub count_out_buf: [usize; 2],
    /// All agents co-located at this node, the observer included.
    pub total_here: usize,
    /// Agents co-located now that were not co-located with the observer in
    /// the previous round. The comparison baseline follows the observer, so
    /// arriving at an occupied node counts everyone already there.
    pub arrived: usize,
    /// The subset of `arrived` currently sitting in a buffer (incoming or
    /// outgoing) of the given travel direction.
    pub arrived_by_dir: [usize; 2],
    /// False whenever cross detection is off.
    pub crossed_this_round: bool,
}

/// Observe the world from agent `id`'s point of view.
pub fn observe(
    state: &WorldState,
    topo: &RingTopology,
    id: usize,
    cross_detection: bool,
) -> Observation {
    let own = state.locations[id];
    let here = own.node();
    let my_prev = state.prev_locations[id].node();

    let mut count_at_node = 0;
    let mut count_in_buf = [0usize; 2];
    let mut count_out_buf = [0usize; 2];
    let mut total_here = 0;
    let mut arrived = 0;
    let mut arrived_by_dir = [0usize; 2];

    for (j, loc) in state.locations.iter().enumerate() {
        if loc.node() != here {
            continue;
        }
        total_here += 1;
        match *loc {
            Location::AtNode(_) => count_at_node += 1,
            Location::InBuffer(_, d) => count_in_buf[d.index()] += 1,
            Location::OutBuffer(_, d) => count_out_buf[d.index()] += 1,
        }
        // Newly seen: was not co-located with the observer last round.
        if j != id && state.prev_locations[j].node() != my_prev {
            arrived += 1;
            if let Some(d) = loc.buffer_dir() {
                arrived_by_dir[d.index()] += 1;
            }
        }
    }

    Observation {
        round: state.round,
        at_homebase: topo.is_homebase(here),
        own_location: own,
        port_labels: topo.port_labels(here),
        count_at_node,
        count_in_buf,
        count_out_buf,
        total_here,
        arrived,
        arrived_by_dir,
        crossed_this_round: cross_detection && state.cross_flags[id],
    }
}
