//! Dynamic-topology generators. An adversary fixes the communication graph
//! for every round; the only constraint the model places on it is that each
//! per-round snapshot is connected. Adversaries may read the engine's
//! informed flags (adaptive scheduling), which costs no generality here
//! because the algorithms are deterministic.

mod random;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

pub use random::RandomConnectedAdversary;

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("snapshot needs at least one node")]
    EmptyGraph,
    #[error("edge ({0}, {1}) is out of range for {2} nodes")]
    EdgeOutOfRange(NodeId, NodeId, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("graph is not connected")]
    Disconnected,
    #[error("path length must be at least 1")]
    EmptyPath,
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("exhaustive enumeration is capped at 5 nodes, got {0}")]
    TooManyNodes(usize),
}

/// One round's undirected communication graph on nodes `0..n`.
///
/// Edges are stored with endpoints normalized to `u < v`. No self-loops, no
/// duplicates. Edge order is whatever the producer emitted, which keeps
/// construction cheap for the large adaptive schedules; [`Snapshot::new`]
/// sorts, so externally supplied graphs come out canonical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Snapshot {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl Snapshot {
    /// Validates, normalizes, sorts, and rejects duplicate edges.
    pub fn new(n: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self, AdversaryError> {
        if n == 0 {
            return Err(AdversaryError::EmptyGraph);
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(AdversaryError::SelfLoop(a));
            }
            if a as usize >= n || b as usize >= n {
                return Err(AdversaryError::EdgeOutOfRange(a, b, n));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(AdversaryError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Snapshot {
            n,
            edges: normalized,
        })
    }

    /// Trusted constructor for adversaries that build valid edge lists by
    /// construction. Validity is still asserted in debug builds.
    pub(crate) fn from_edges_unchecked(n: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        debug_assert!(n >= 1);
        debug_assert!(edges.iter().all(|&(a, b)| a < b && (b as usize) < n));
        debug_assert!({
            let set: BTreeSet<_> = edges.iter().collect();
            set.len() == edges.len()
        });
        Snapshot { n, edges }
    }

    /// The complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n as NodeId {
            for v in (u + 1)..n as NodeId {
                edges.push((u, v));
            }
        }
        Snapshot::from_edges_unchecked(n, edges)
    }

    /// The path `0 - 1 - ... - n-1`.
    pub fn path(n: usize) -> Self {
        let edges = (0..n.saturating_sub(1) as NodeId)
            .map(|i| (i, i + 1))
            .collect();
        Snapshot::from_edges_unchecked(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True iff a traversal from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v as usize);
            adj[v as usize].push(u as usize);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        reached == self.n
    }
}

/// What an adversary may observe when picking the next snapshot: the node
/// count and the engine-maintained informed flags. Algorithm states stay
/// opaque.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryView<'a> {
    pub n: usize,
    pub informed: &'a [bool],
}

/// Produces the snapshot for each round. Implementations must be
/// deterministic in `(t, view)` and any internal seed, and must only return
/// connected snapshots on exactly `view.n` nodes.
pub trait Adversary: Send + Sync {
    /// Registry-style name, used as the default trace-header label.
    fn name(&self) -> String;

    fn next(&self, t: u64, view: &AdversaryView<'_>) -> Snapshot;
}

/// The same connected snapshot every round.
#[derive(Debug, Clone)]
pub struct StaticAdversary {
    snapshot: Snapshot,
}

impl StaticAdversary {
    pub fn new(snapshot: Snapshot) -> Result<Self, AdversaryError> {
        if !snapshot.is_connected() {
            return Err(AdversaryError::Disconnected);
        }
        Ok(StaticAdversary { snapshot })
    }
}

impl Adversary for StaticAdversary {
    fn name(&self) -> String {
        "static".to_owned()
    }

    fn next(&self, _t: u64, view: &AdversaryView<'_>) -> Snapshot {
        assert_eq!(view.n, self.snapshot.n(), "static snapshot node count");
        self.snapshot.clone()
    }
}

/// The complete graph every round.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompleteAdversary;

impl Adversary for CompleteAdversary {
    fn name(&self) -> String {
        "complete".to_owned()
    }

    fn next(&self, _t: u64, view: &AdversaryView<'_>) -> Snapshot {
        Snapshot::complete(view.n)
    }
}

/// Adaptive worst-case schedule for information spread: informed nodes form a
/// clique, uninformed nodes form a path (in index order), and exactly one
/// uninformed path endpoint touches exactly one informed node, so at most one
/// node can learn anything per round. Returns the complete graph once
/// everyone is informed.
///
/// The bridge always joins the lowest-index informed node (the broadcaster)
/// to the lowest-index uninformed node, keeping the schedule deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpoolingAdversary;

impl Adversary for SpoolingAdversary {
    fn name(&self) -> String {
        "spooling".to_owned()
    }

    fn next(&self, _t: u64, view: &AdversaryView<'_>) -> Snapshot {
        let informed: Vec<NodeId> = (0..view.n as NodeId)
            .filter(|&v| view.informed[v as usize])
            .collect();
        let uninformed: Vec<NodeId> = (0..view.n as NodeId)
            .filter(|&v| !view.informed[v as usize])
            .collect();
        if uninformed.is_empty() {
            return Snapshot::complete(view.n);
        }
        assert!(
            !informed.is_empty(),
            "spooling adversary needs at least the broadcaster informed"
        );
        let mut edges =
            Vec::with_capacity(informed.len() * informed.len() / 2 + uninformed.len());
        for i in 0..informed.len() {
            for j in (i + 1)..informed.len() {
                edges.push((informed[i], informed[j]));
            }
        }
        for w in uninformed.windows(2) {
            edges.push((w[0], w[1]));
        }
        let (a, b) = (informed[0], uninformed[0]);
        edges.push((a.min(b), a.max(b)));
        Snapshot::from_edges_unchecked(view.n, edges)
    }
}

/// The moving-bridge sequestration schedule: a fixed connected core on nodes
/// `0..m` containing the broadcaster (node 0), a fixed path `v_0 - ... -
/// v_{L-1}` on nodes `m..m+L`, and a single bridge `{0, v_min(t, L-1)}` that
/// advances one path node per round and then stays clamped at the far end so
/// every snapshot remains connected.
#[derive(Debug, Clone)]
pub struct PathSequesterAdversary {
    core_n: usize,
    path_len: usize,
    static_edges: Vec<(NodeId, NodeId)>,
}

impl PathSequesterAdversary {
    pub fn new(core: Snapshot, path_len: usize) -> Result<Self, AdversaryError> {
        if !core.is_connected() {
            return Err(AdversaryError::Disconnected);
        }
        if path_len == 0 {
            return Err(AdversaryError::EmptyPath);
        }
        let core_n = core.n();
        let mut static_edges = core.edges().to_vec();
        for i in 0..path_len - 1 {
            let u = (core_n + i) as NodeId;
            static_edges.push((u, u + 1));
        }
        Ok(PathSequesterAdversary {
            core_n,
            path_len,
            static_edges,
        })
    }

    /// Sequestration with a complete core on `core_n` nodes.
    pub fn with_complete_core(core_n: usize, path_len: usize) -> Result<Self, AdversaryError> {
        PathSequesterAdversary::new(Snapshot::complete(core_n), path_len)
    }

    pub fn n(&self) -> usize {
        self.core_n + self.path_len
    }

    /// Node index of path position `i`.
    pub fn path_node(&self, i: usize) -> NodeId {
        (self.core_n + i) as NodeId
    }
}

impl Adversary for PathSequesterAdversary {
    fn name(&self) -> String {
        format!("sequester:{}:{}", self.core_n, self.path_len)
    }

    fn next(&self, t: u64, view: &AdversaryView<'_>) -> Snapshot {
        assert_eq!(view.n, self.n(), "sequester node count");
        let clamp = (self.path_len - 1) as u64;
        let target = self.core_n as u64 + t.min(clamp);
        let mut edges = self.static_edges.clone();
        edges.push((0, target as NodeId));
        Snapshot::from_edges_unchecked(view.n, edges)
    }
}

/// Replays a fixed snapshot sequence, clamping at the last entry. Used for
/// witness replay and hand-built schedules in tests.
#[derive(Debug, Clone)]
pub struct ScriptedAdversary {
    snapshots: Vec<Snapshot>,
}

impl ScriptedAdversary {
    pub fn new(snapshots: Vec<Snapshot>) -> Self {
        assert!(!snapshots.is_empty(), "scripted schedule needs a snapshot");
        ScriptedAdversary { snapshots }
    }
}

impl Adversary for ScriptedAdversary {
    fn name(&self) -> String {
        "scripted".to_owned()
    }

    fn next(&self, t: u64, _view: &AdversaryView<'_>) -> Snapshot {
        let i = (t as usize).min(self.snapshots.len() - 1);
        self.snapshots[i].clone()
    }
}

/// All labeled connected graphs on `n <= 5` nodes, each exactly once, ordered
/// by ascending edge-subset bitmask over the lexicographic pair list.
pub fn enumerate_connected_snapshots(n: usize) -> Result<Vec<Snapshot>, AdversaryError> {
    if n == 0 {
        return Err(AdversaryError::EmptyGraph);
    }
    if n > 5 {
        return Err(AdversaryError::TooManyNodes(n));
    }
    let mut pairs = Vec::new();
    for u in 0..n as NodeId {
        for v in (u + 1)..n as NodeId {
            pairs.push((u, v));
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(NodeId, NodeId)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let snapshot = Snapshot::from_edges_unchecked(n, edges);
        if snapshot.is_connected() {
            out.push(snapshot);
        }
    }
    Ok(out)
}
