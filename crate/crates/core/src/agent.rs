//! Per-agent protocol state: the variable set, the exploration recorder
//! that reconstructs the configuration from a completed tour, and the
//! local frame used to navigate toward an elected node or edge.
//!
//! Everything here is a pure value; one context is owned by one run and
//! evolves only through `tick` (in `protocol`) and `post_update`.

use crate::logic_ring::LogicRingLabels;
use crate::ring::{Direction, MoveOutcome, NodeId, RingTopology};
use serde::{Deserialize, Serialize};

/// An agent's private orientation: the global direction its `left` maps
/// to. Its private clockwise is its `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orientation {
    pub left: Direction,
}

impl Orientation {
    pub fn right(self) -> Direction {
        self.left.opposite()
    }
    pub fn clockwise(self) -> Direction {
        self.right()
    }
    pub fn counterclockwise(self) -> Direction {
        self.left
    }
}

/// What the agent was told at startup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Knowledge {
    N,
    K,
    Both,
}

impl Knowledge {
    pub fn knows_n(self) -> bool {
        matches!(self, Knowledge::N | Knowledge::Both)
    }
    pub fn knows_k(self) -> bool {
        matches!(self, Knowledge::K | Knowledge::Both)
    }
}

/// The variable set every protocol maintains.
///
/// `btime` resets on traversal, on direction change, and when the agent
/// meets new agents moving in its own direction (the blocked counter runs
/// "since r_ms"); `etime`/`esteps` reset on every state transition (a new
/// exploration call) and when `r_ms` is set; `stall_rounds` drives the
/// BPeriods counter of logic-ring motion and resets on traversal,
/// direction change and same-direction meetings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AgentVars {
    pub ttime: u64,
    pub total_agents: Option<usize>,
    pub r_ms: u64,
    pub btime: u64,
    pub btime_prev: u64,
    pub etime: u64,
    pub esteps: u64,
    pub agents: usize,
    pub stall_rounds: u64,
}

impl AgentVars {
    /// Everything except `total_agents` goes back to zero on a phase
    /// boundary.
    fn reset_for_phase(&mut self) {
        let total = self.total_agents;
        *self = AgentVars::default();
        self.total_agents = total;
    }
}

/// One recorded node of the current exploration window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Cell {
    homebase: bool,
    /// (label of the port behind, label of the port ahead) in walk frame.
    labels: (u8, u8),
}

/// Records the nodes visited while walking in one fixed direction. A
/// window restarts whenever the agent changes direction; it freezes into
/// a `LocalMap` once a full tour is detected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WalkRecorder {
    dir: Direction,
    anchor: NodeId,
    steps: u64,
    cells: Vec<Cell>,
    visit_count: u32,
}

impl WalkRecorder {
    fn cell_for(topo: &RingTopology, node: NodeId, dir: Direction) -> Cell {
        let (ccw, cw) = topo.port_labels(node);
        let labels = match dir {
            Direction::Cw => (ccw, cw),
            Direction::Ccw => (cw, ccw),
        };
        Cell {
            homebase: topo.is_homebase(node),
            labels,
        }
    }

    fn start(topo: &RingTopology, node: NodeId, dir: Direction) -> WalkRecorder {
        let cell = Self::cell_for(topo, node, dir);
        WalkRecorder {
            dir,
            anchor: node,
            steps: 0,
            cells: vec![cell],
            visit_count: cell.homebase as u32,
        }
    }

    fn push(&mut self, topo: &RingTopology, node: NodeId) {
        self.steps += 1;
        let cell = Self::cell_for(topo, node, self.dir);
        self.cells.push(cell);
        if cell.homebase {
            self.visit_count += 1;
        }
    }
}

/// The ring as reconstructed by one agent from a completed tour, indexed
/// in its walk frame: position 0 is the tour anchor and +1 steps follow
/// `plus_dir`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalMap {
    pub n: usize,
    pub plus_dir: Direction,
    pub anchor: NodeId,
    pub homebases: Vec<bool>,
    /// Per frame index: (label toward -1, label toward +1).
    pub port_labels: Vec<(u8, u8)>,
}

impl LocalMap {
    fn from_recorder(rec: &WalkRecorder) -> LocalMap {
        let n = rec.steps as usize;
        LocalMap {
            n,
            plus_dir: rec.dir,
            anchor: rec.anchor,
            homebases: rec.cells[..n].iter().map(|c| c.homebase).collect(),
            port_labels: rec.cells[..n].iter().map(|c| c.labels).collect(),
        }
    }

    /// Re-index so that +1 runs in the opposite global direction. Index 0
    /// stays on the same physical node.
    pub fn mirrored(&self) -> LocalMap {
        let n = self.n;
        let mut homebases = vec![false; n];
        let mut port_labels = vec![(0u8, 0u8); n];
        for i in 0..n {
            let j = (n - i) % n;
            homebases[j] = self.homebases[i];
            port_labels[j] = (self.port_labels[i].1, self.port_labels[i].0);
        }
        LocalMap {
            n,
            plus_dir: self.plus_dir.opposite(),
            anchor: self.anchor,
            homebases,
            port_labels,
        }
    }

    /// Frame-local topology with +1 as the clockwise convention.
    pub fn to_topology(&self) -> RingTopology {
        let homebases: Vec<NodeId> = (0..self.n).filter(|&i| self.homebases[i]).collect();
        let labels: Vec<(u8, u8)> = self.port_labels.clone();
        RingTopology::with_port_labels(self.n, homebases, labels)
            .expect("a completed tour yields a valid topology")
    }

    /// Global node behind a frame index.
    pub fn global_node(&self, idx: usize) -> NodeId {
        match self.plus_dir {
            Direction::Cw => (self.anchor + idx) % self.n,
            Direction::Ccw => (self.anchor + self.n - idx % self.n) % self.n,
        }
    }
}

/// Elected target in frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elected {
    Node(usize),
    /// Frame edge `j` joins indices `j` and `j+1`.
    Edge(usize),
}

impl Elected {
    pub fn contains(&self, pos: usize, n: usize) -> bool {
        match *self {
            Elected::Node(t) => pos == t,
            Elected::Edge(j) => pos == j || pos == (j + 1) % n,
        }
    }
}

/// Phase-2 bookkeeping: the target, and for the no-cross protocols the
/// logic-ring labels anchored at the leader.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phase2State {
    /// Global round at which phase 2 began (same for every agent).
    pub entered_round: u64,
    pub target: Elected,
    pub labels: Option<LogicRingLabels>,
    /// Frame index of the leader node; anchors the label indexing.
    pub leader_frame: usize,
}

/// Terminal declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Declared {
    Gathered,
    Unsolvable,
}

/// Protocol state machine states across all four protocols. `ReverseDir`
/// of the cross-detection phase 2 is a zero-duration action (direction
/// flip plus jump to `ReachedElected`) and is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtoState {
    Init,
    SwitchDir,
    KeepDir,
    SyncL,
    SyncR,
    Phase2,
    ReachedElected,
    ReachingElected,
    Joining,
    Waiting,
    Term,
}

impl std::fmt::Display for ProtoState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProtoState::Init => "init",
            ProtoState::SwitchDir => "switch-dir",
            ProtoState::KeepDir => "keep-dir",
            ProtoState::SyncL => "sync-l",
            ProtoState::SyncR => "sync-r",
            ProtoState::Phase2 => "phase2",
            ProtoState::ReachedElected => "reached-elected",
            ProtoState::ReachingElected => "reaching-elected",
            ProtoState::Joining => "joining",
            ProtoState::Waiting => "waiting",
            ProtoState::Term => "term",
        };
        write!(f, "{s}")
    }
}

/// One agent's full protocol context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentContext {
    pub id: usize,
    pub orientation: Orientation,
    pub state: ProtoState,
    pub declared: Option<Declared>,
    /// Current movement direction, in the global frame.
    pub dir: Direction,
    pub vars: AgentVars,
    /// Known or discovered ring size.
    pub n: Option<usize>,
    pub recorder: Option<WalkRecorder>,
    pub map: Option<LocalMap>,
    /// Frame position; meaningful once `map` is set.
    pub pos: usize,
    pub phase2: Option<Phase2State>,
    // Transient per-round flags.
    pub dir_changed: bool,
    pub gated_this_round: bool,
    pub events_active: bool,
}

impl AgentContext {
    pub fn new(
        id: usize,
        orientation: Orientation,
        initial_dir: Direction,
        topo: &RingTopology,
        start: NodeId,
        knowledge: Knowledge,
    ) -> AgentContext {
        let mut vars = AgentVars::default();
        if knowledge.knows_k() {
            vars.total_agents = Some(topo.agent_count());
        }
        AgentContext {
            id,
            orientation,
            state: ProtoState::Init,
            declared: None,
            dir: initial_dir,
            vars,
            n: knowledge.knows_n().then_some(topo.n()),
            recorder: Some(WalkRecorder::start(topo, start, initial_dir)),
            map: None,
            pos: 0,
            phase2: None,
            dir_changed: false,
            gated_this_round: false,
            events_active: true,
        }
    }

    pub fn is_term(&self) -> bool {
        self.state == ProtoState::Term
    }

    /// State transition: a new exploration call. Resets `r_ms`, `etime`,
    /// `esteps` and consumes the round's event predicates.
    pub fn goto(&mut self, s: ProtoState) {
        self.state = s;
        self.vars.r_ms = 0;
        self.vars.etime = 0;
        self.vars.esteps = 0;
        self.events_active = false;
    }

    pub fn term(&mut self, declared: Declared) {
        self.declared = Some(declared);
        self.goto(ProtoState::Term);
    }

    /// Change movement direction; a no-op when already moving that way.
    pub fn set_dir(&mut self, d: Direction) {
        if self.dir != d {
            self.dir = d;
            self.dir_changed = true;
            self.vars.btime = 0;
            self.vars.stall_rounds = 0;
            self.vars.r_ms = 0;
        }
    }

    pub fn flip_dir(&mut self) {
        self.set_dir(self.dir.opposite());
    }

    /// Normalize the local map so that frame +1 runs along `cw`.
    pub fn orient_map(&mut self, cw: Direction) {
        let map = self.map.as_ref().expect("orient requires a map");
        if map.plus_dir != cw {
            self.map = Some(map.mirrored());
            self.pos = (map.n - self.pos) % map.n;
        }
    }

    /// Movement/bookkeeping updates after the world applied the round.
    /// `node_before`/`node_after` are the agent's ground nodes around the
    /// transfer; `intent` is the direction it tried to move, if any.
    pub fn post_update(
        &mut self,
        mv: MoveOutcome,
        intent: Option<Direction>,
        node_before: NodeId,
        node_after: NodeId,
        topo: &RingTopology,
    ) {
        let v = &mut self.vars;
        v.ttime += 1;
        v.etime += 1;
        v.btime_prev = v.btime;
        if mv.moved || self.dir_changed {
            v.btime = 0;
        } else if mv.blocked {
            v.btime += 1;
        }
        if mv.moved {
            v.esteps += 1;
            v.stall_rounds = 0;
        } else if self.gated_this_round {
            v.stall_rounds += 1;
        }

        // A direction change restarts the exploration window.
        if self.dir_changed && self.map.is_none() {
            self.recorder = Some(WalkRecorder::start(topo, node_before, self.dir));
        }

        if mv.moved {
            let moved_dir = intent.expect("moved implies an intent");
            if let Some(map) = &self.map {
                self.pos = if moved_dir == map.plus_dir {
                    (self.pos + 1) % map.n
                } else {
                    (self.pos + map.n - 1) % map.n
                };
                debug_assert_eq!(map.global_node(self.pos), node_after);
            } else if let Some(rec) = &mut self.recorder {
                rec.push(topo, node_after);
                self.check_tour_complete();
            }
        }

        self.dir_changed = false;
        self.gated_this_round = false;
        self.events_active = true;
    }

    /// Full-loop detection. With known n the tour completes after n same-
    /// direction steps and yields k (every node was passed exactly once);
    /// with known k it completes at the (k+1)-th homebase visit event and
    /// yields n.
    fn check_tour_complete(&mut self) {
        let Some(rec) = &self.recorder else { return };
        let done = match (self.n, self.vars.total_agents) {
            (Some(n), _) => rec.steps as usize == n,
            (None, Some(k)) => rec.visit_count as usize == k + 1,
            (None, None) => unreachable!("at least one of n and k is known"),
        };
        if !done {
            return;
        }
        if self.n.is_none() {
            self.n = Some(rec.steps as usize);
        }
        let map = LocalMap::from_recorder(rec);
        if self.vars.total_agents.is_none() {
            self.vars.total_agents = Some(map.homebases.iter().filter(|&&h| h).count());
        }
        debug_assert_eq!(map.global_node(0), map.anchor);
        self.map = Some(map);
        self.pos = 0;
        self.recorder = None;
    }

    /// Enter a phase boundary: variables reset except `total_agents`.
    pub fn reset_variables_for_phase(&mut self) {
        self.vars.reset_for_phase();
        self.recorder = None;
    }

    /// Frame direction (+1 or -1) as a global direction.
    pub fn frame_step_dir(&self, plus: bool) -> Direction {
        let map = self.map.as_ref().expect("frame requires a map");
        if plus {
            map.plus_dir
        } else {
            map.plus_dir.opposite()
        }
    }

    /// Direction of the shorter frame path from `pos` to the target.
    /// `tie` breaks equidistant targets (+1 when true).
    pub fn shortest_dir_to(&self, target: Elected, tie_plus: bool) -> Direction {
        let map = self.map.as_ref().expect("navigation requires a map");
        let n = map.n;
        let (d_plus, d_minus) = match target {
            Elected::Node(t) => ((t + n - self.pos) % n, (self.pos + n - t) % n),
            Elected::Edge(j) => {
                let u = j;
                let w = (j + 1) % n;
                let dp = ((u + n - self.pos) % n).min((w + n - self.pos) % n);
                let dm = ((self.pos + n - u) % n).min((self.pos + n - w) % n);
                (dp, dm)
            }
        };
        let plus = if d_plus != d_minus {
            d_plus < d_minus
        } else {
            tie_plus
        };
        self.frame_step_dir(plus)
    }

    pub fn sees_elected(&self) -> bool {
        let (Some(map), Some(p2)) = (&self.map, &self.phase2) else {
            return false;
        };
        p2.target.contains(self.pos, map.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{EdgeId, WorldState};

    fn ctx_walker(topo: &RingTopology, dir: Direction, knowledge: Knowledge) -> AgentContext {
        AgentContext::new(0, Orientation { left: Direction::Ccw }, dir, topo, topo.homebases()[0], knowledge)
    }

    /// Drive a single agent around an always-present ring and watch the
    /// counters. Under such a schedule btime never rises and esteps
    /// matches ttime.
    #[test]
    fn lone_walker_counters() {
        let topo = RingTopology::new(6, vec![0, 3]).unwrap();
        let mut world = WorldState::initial(&topo);
        let mut ctx = ctx_walker(&topo, Direction::Cw, Knowledge::N);
        for _ in 0..10 {
            let before = world.locations[0].node();
            let (next, moves) = world
                .apply_round(&topo, None, &[Some(Direction::Cw), None])
                .unwrap();
            let after = next.locations[0].node();
            ctx.post_update(moves[0], Some(Direction::Cw), before, after, &topo);
            world = next;
            assert_eq!(ctx.vars.btime, 0);
            assert_eq!(ctx.vars.esteps, ctx.vars.ttime);
        }
    }

    #[test]
    fn blocked_counter_and_prev() {
        let topo = RingTopology::new(4, vec![0, 2]).unwrap();
        let mut world = WorldState::initial(&topo);
        let mut ctx = ctx_walker(&topo, Direction::Cw, Knowledge::N);
        for round in 1..=3u64 {
            let before = world.locations[0].node();
            let (next, moves) = world
                .apply_round(&topo, Some(EdgeId(0)), &[Some(Direction::Cw), None])
                .unwrap();
            let after = next.locations[0].node();
            ctx.post_update(moves[0], Some(Direction::Cw), before, after, &topo);
            world = next;
            assert_eq!(ctx.vars.btime, round);
        }
        assert_eq!(ctx.vars.btime, 3);
        assert_eq!(ctx.vars.btime_prev, 2);
    }

    /// Completing a loop with known n sets TotalAgents to the number of
    /// distinct homebases seen.
    #[test]
    fn known_n_tour_sets_total_agents() {
        let topo = RingTopology::new(6, vec![0, 2, 3]).unwrap();
        let mut world = WorldState::initial(&topo);
        let mut ctx = ctx_walker(&topo, Direction::Cw, Knowledge::N);
        for _ in 0..6 {
            assert_eq!(ctx.vars.total_agents, None);
            let before = world.locations[0].node();
            let (next, moves) = world
                .apply_round(&topo, None, &[Some(Direction::Cw), None, None])
                .unwrap();
            let after = next.locations[0].node();
            ctx.post_update(moves[0], Some(Direction::Cw), before, after, &topo);
            world = next;
        }
        assert_eq!(ctx.vars.total_agents, Some(3));
        let map = ctx.map.as_ref().unwrap();
        assert_eq!(map.n, 6);
        assert_eq!(map.homebases, vec![true, false, true, true, false, false]);
        assert_eq!(ctx.pos, 0);
    }

    /// Known k: n is discovered at the (k+1)-th homebase visit event.
    #[test]
    fn known_k_discovers_n() {
        let topo = RingTopology::new(6, vec![0, 3]).unwrap();
        let mut world = WorldState::initial(&topo);
        let mut ctx = ctx_walker(&topo, Direction::Ccw, Knowledge::K);
        let mut discovered_at = None;
        for step in 1..=6u64 {
            let before = world.locations[0].node();
            let (next, moves) = world
                .apply_round(&topo, None, &[Some(Direction::Ccw), None])
                .unwrap();
            let after = next.locations[0].node();
            ctx.post_update(moves[0], Some(Direction::Ccw), before, after, &topo);
            world = next;
            if ctx.n.is_some() && discovered_at.is_none() {
                discovered_at = Some(step);
            }
        }
        assert_eq!(ctx.n, Some(6));
        // Visits: start (1), node 3 (2), back to 0 (3 = k+1) after 6 steps.
        assert_eq!(discovered_at, Some(6));
    }

    #[test]
    fn mirrored_map_round_trips() {
        let topo = RingTopology::new(5, vec![0, 1, 3]).unwrap();
        let mut world = WorldState::initial(&topo);
        let mut ctx = ctx_walker(&topo, Direction::Ccw, Knowledge::N);
        for _ in 0..5 {
            let before = world.locations[0].node();
            let (next, moves) = world
                .apply_round(&topo, None, &[Some(Direction::Ccw), None, None])
                .unwrap();
            let after = next.locations[0].node();
            ctx.post_update(moves[0], Some(Direction::Ccw), before, after, &topo);
            world = next;
        }
        let map = ctx.map.clone().unwrap();
        let mirrored = map.mirrored();
        assert_eq!(mirrored.mirrored(), map);
        // Physical homebase set is frame-independent.
        for i in 0..5 {
            let g = map.global_node(i);
            assert_eq!(map.homebases[i], topo.is_homebase(g));
        }
        for i in 0..5 {
            let g = mirrored.global_node(i);
            assert_eq!(mirrored.homebases[i], topo.is_homebase(g));
        }
    }
}
