//! The synchronous round executor.
//!
//! A round works on the configuration at time `t`: every node's emission is
//! computed from its pre-round state, each node then receives the canonical
//! multiset of messages from its snapshot neighbors that emitted, and all
//! state transitions apply simultaneously to form the configuration at
//! `t + 1`. The engine, not the algorithm, tracks which nodes are informed
//! (the broadcaster, or any node that received a message from an informed
//! node) and detects stabilization, the absorbing all-idle condition.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryView, NodeId, Snapshot};
use crate::model::{ceil_log2, is_idle, Algorithm, MessageBag, Role};
use crate::trace::{RoundRecord, Trace, TraceHeader};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("round {t}: adversary produced a disconnected snapshot")]
    DisconnectedSnapshot { t: u64 },
    #[error("round {t}: snapshot has {actual} nodes, expected {expected}")]
    NodeCountMismatch {
        t: u64,
        expected: usize,
        actual: usize,
    },
    #[error("invariant violated at t={t}: {message}")]
    InvariantViolation { t: u64, message: String },
    #[error("simulation needs at least one node")]
    NoNodes,
}

/// Global state at the start of a round: per-node algorithm states plus the
/// engine-maintained informed flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration<S> {
    pub t: u64,
    pub states: Vec<S>,
    pub informed: Vec<bool>,
}

impl<S> Configuration<S> {
    /// All nodes initialized at time 0; node 0 is the broadcaster.
    pub fn initial<A: Algorithm<State = S>>(alg: &A, n: usize) -> Self {
        let states = (0..n)
            .map(|v| {
                alg.init(if v == 0 {
                    Role::Broadcaster
                } else {
                    Role::Ordinary
                })
            })
            .collect();
        let mut informed = vec![false; n];
        if n > 0 {
            informed[0] = true;
        }
        Configuration {
            t: 0,
            states,
            informed,
        }
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn all_informed(&self) -> bool {
        self.informed.iter().all(|&i| i)
    }

    pub fn informed_count(&self) -> usize {
        self.informed.iter().filter(|&&i| i).count()
    }

    pub fn view(&self) -> AdversaryView<'_> {
        AdversaryView {
            n: self.n(),
            informed: &self.informed,
        }
    }
}

/// What one round did, without the per-node state vectors.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub messages_sent: usize,
    pub deliveries: u64,
    pub senders: Vec<bool>,
    pub newly_informed: Vec<NodeId>,
}

/// Flat adjacency scratch space reused across rounds of one run.
#[derive(Default)]
struct RoundWorkspace {
    offsets: Vec<usize>,
    cursor: Vec<usize>,
    neighbors: Vec<NodeId>,
    seen: Vec<bool>,
    stack: Vec<NodeId>,
}

impl RoundWorkspace {
    /// Builds the adjacency structure and checks connectivity.
    fn load(&mut self, snapshot: &Snapshot, t: u64) -> Result<(), EngineError> {
        let n = snapshot.n();
        self.offsets.clear();
        self.offsets.resize(n + 1, 0);
        for &(u, v) in snapshot.edges() {
            self.offsets[u as usize + 1] += 1;
            self.offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            self.offsets[i + 1] += self.offsets[i];
        }
        self.cursor.clear();
        self.cursor.extend_from_slice(&self.offsets[..n]);
        self.neighbors.clear();
        self.neighbors.resize(2 * snapshot.edge_count(), 0);
        for &(u, v) in snapshot.edges() {
            self.neighbors[self.cursor[u as usize]] = v;
            self.cursor[u as usize] += 1;
            self.neighbors[self.cursor[v as usize]] = u;
            self.cursor[v as usize] += 1;
        }

        // 1-interval connectivity is a model requirement, not a convention.
        if n > 1 {
            self.seen.clear();
            self.seen.resize(n, false);
            self.stack.clear();
            self.stack.push(0);
            self.seen[0] = true;
            let mut reached = 1usize;
            while let Some(u) = self.stack.pop() {
                for i in self.offsets[u as usize]..self.offsets[u as usize + 1] {
                    let v = self.neighbors[i];
                    if !self.seen[v as usize] {
                        self.seen[v as usize] = true;
                        reached += 1;
                        self.stack.push(v);
                    }
                }
            }
            if reached != n {
                return Err(EngineError::DisconnectedSnapshot { t });
            }
        }
        Ok(())
    }

    fn adjacent(&self, u: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    fn degree(&self, u: NodeId) -> usize {
        self.offsets[u as usize + 1] - self.offsets[u as usize]
    }
}

fn execute_round_with<A: Algorithm>(
    ws: &mut RoundWorkspace,
    alg: &A,
    config: &Configuration<A::State>,
    snapshot: &Snapshot,
) -> Result<(Configuration<A::State>, RoundOutcome), EngineError> {
    let n = config.n();
    if snapshot.n() != n {
        return Err(EngineError::NodeCountMismatch {
            t: config.t,
            expected: n,
            actual: snapshot.n(),
        });
    }
    ws.load(snapshot, config.t)?;

    // step 2: emissions are a function of the pre-round states only
    let emits: Vec<Option<A::Message>> = config.states.iter().map(|s| alg.emit(s)).collect();
    let senders: Vec<bool> = emits.iter().map(|e| e.is_some()).collect();
    let messages_sent = senders.iter().filter(|&&s| s).count();
    let deliveries: u64 = (0..n as NodeId)
        .filter(|&u| senders[u as usize])
        .map(|u| ws.degree(u) as u64)
        .sum();

    // step 3: deliver canonical multisets and transition all nodes at once
    let mut new_states = Vec::with_capacity(n);
    let mut new_informed = config.informed.clone();
    let mut newly_informed = Vec::new();
    for v in 0..n as NodeId {
        let mut counts: BTreeMap<A::Message, usize> = BTreeMap::new();
        let mut heard_informed = false;
        for &u in ws.adjacent(v) {
            if let Some(m) = &emits[u as usize] {
                *counts.entry(m.clone()).or_insert(0) += 1;
                heard_informed |= config.informed[u as usize];
            }
        }
        let bag = MessageBag::from_counts(counts);
        new_states.push(alg.step(&config.states[v as usize], &bag));
        if heard_informed && !config.informed[v as usize] {
            new_informed[v as usize] = true;
            newly_informed.push(v);
        }
    }

    Ok((
        Configuration {
            t: config.t + 1,
            states: new_states,
            informed: new_informed,
        },
        RoundOutcome {
            messages_sent,
            deliveries,
            senders,
            newly_informed,
        },
    ))
}

/// Executes one synchronous round against `snapshot`.
pub fn execute_round<A: Algorithm>(
    alg: &A,
    config: &Configuration<A::State>,
    snapshot: &Snapshot,
) -> Result<(Configuration<A::State>, RoundOutcome), EngineError> {
    execute_round_with(&mut RoundWorkspace::default(), alg, config, snapshot)
}

/// True iff every node is idle. Idleness is absorbing: idle nodes send
/// nothing, so every bag stays empty and every state stays fixed.
pub fn detect_stabilization<A: Algorithm>(alg: &A, config: &Configuration<A::State>) -> bool {
    states_all_idle(alg, &config.states)
}

pub fn states_all_idle<A: Algorithm>(alg: &A, states: &[A::State]) -> bool {
    states.iter().all(|s| is_idle(alg, s))
}

/// Closed-form upper bound on countdown stabilization: attempts of duration
/// `2, 4, ..., 2^ceil(log2 n)` each span duration + 1 rounds after the
/// initial broadcaster round, which is safely below `4n + ceil(log2 n) + 2`
/// for every `n >= 2`. A lone broadcaster stabilizes in one round.
pub fn stabilization_bound(n: usize) -> u64 {
    if n <= 1 {
        1
    } else {
        4 * n as u64 + u64::from(ceil_log2(n as u64)) + 2
    }
}

/// Default horizon: ten times the stabilization bound, which cleanly
/// separates "never stabilizes" from "slow".
pub fn auto_horizon(n: usize) -> u64 {
    10 * stabilization_bound(n)
}

/// Round count that may be "never".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    At(u64),
    Never,
}

impl Completion {
    pub fn from_option(o: Option<u64>) -> Self {
        match o {
            Some(t) => Completion::At(t),
            None => Completion::Never,
        }
    }

    pub fn value(&self) -> Option<u64> {
        match self {
            Completion::At(t) => Some(*t),
            Completion::Never => None,
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, Completion::At(_))
    }
}

impl Serialize for Completion {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        match self {
            Completion::At(t) => serializer.serialize_u64(*t),
            Completion::Never => serializer.serialize_str("never"),
        }
    }
}

impl std::fmt::Display for Completion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Completion::At(t) => write!(f, "{t}"),
            Completion::Never => f.write_str("never"),
        }
    }
}

/// Aggregate measures of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub rounds_to_all_informed: Completion,
    pub rounds_to_stabilization: Completion,
    /// Peak counter value over all rounds and nodes, for counter-carrying
    /// algorithms; 0 otherwise.
    pub peak_counter_value: i64,
    pub peak_state_bits: u32,
    /// Deliveries summed over rounds, counted once per (sender, neighbor).
    pub total_messages: u64,
}

/// Per-round observations kept for every run, cheap enough for large sweeps.
#[derive(Debug, Clone)]
pub struct RunStats {
    pub n: usize,
    pub rounds_executed: u64,
    pub stabilized_at: Option<u64>,
    pub all_informed_at: Option<u64>,
    /// Emitting-node count per executed round.
    pub senders_per_round: Vec<u32>,
    pub final_informed_count: usize,
}

impl RunStats {
    pub fn stabilized(&self) -> bool {
        self.stabilized_at.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_rounds: u64,
    pub check_invariants: bool,
    pub record_trace: bool,
    pub algorithm_label: Option<String>,
    pub adversary_label: Option<String>,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(max_rounds: u64) -> Self {
        RunOptions {
            max_rounds,
            check_invariants: true,
            record_trace: false,
            algorithm_label: None,
            adversary_label: None,
            seed: 0,
        }
    }

    /// Horizon defaulted to [`auto_horizon`] for `n` nodes.
    pub fn auto(n: usize) -> Self {
        RunOptions::new(auto_horizon(n))
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn with_invariant_checks(mut self, check: bool) -> Self {
        self.check_invariants = check;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_labels(
        mut self,
        algorithm: impl Into<String>,
        adversary: impl Into<String>,
    ) -> Self {
        self.algorithm_label = Some(algorithm.into());
        self.adversary_label = Some(adversary.into());
        self
    }
}

pub struct RunOutput<S> {
    pub metrics: Metrics,
    pub stats: RunStats,
    pub trace: Option<Trace<S>>,
    pub final_config: Configuration<S>,
}

struct PeakTracker {
    counter: i64,
    bits: u32,
}

impl PeakTracker {
    fn new() -> Self {
        PeakTracker { counter: 0, bits: 0 }
    }

    fn observe<A: Algorithm>(&mut self, alg: &A, states: &[A::State]) {
        for s in states {
            if let Some(c) = alg.counter_value(s) {
                self.counter = self.counter.max(c);
            }
            self.bits = self.bits.max(alg.state_bits(s));
        }
    }
}

/// Runs `alg` against `adv` on `n` nodes until stabilization or the horizon.
///
/// Node 0 is the broadcaster. Stabilization is absorbing, so the loop stops
/// at the first all-idle configuration; nothing can happen afterwards.
pub fn run<A: Algorithm>(
    alg: &A,
    adv: &dyn Adversary,
    n: usize,
    opts: &RunOptions,
) -> Result<RunOutput<A::State>, EngineError> {
    if n == 0 {
        return Err(EngineError::NoNodes);
    }
    let mut config = Configuration::initial(alg, n);
    let mut peaks = PeakTracker::new();
    peaks.observe(alg, &config.states);
    let mut total_deliveries = 0u64;
    let mut senders_per_round = Vec::new();
    let mut all_informed_at = if config.all_informed() { Some(0) } else { None };
    let mut stabilized_at = None;
    let mut ws = RoundWorkspace::default();
    let mut rounds = Vec::new();

    check_invariant(alg, opts, 0, &config.states)?;

    loop {
        if detect_stabilization(alg, &config) {
            stabilized_at = Some(config.t);
            break;
        }
        if config.t >= opts.max_rounds {
            break;
        }
        let snapshot = adv.next(config.t, &config.view());
        let (next, outcome) = execute_round_with(&mut ws, alg, &config, &snapshot)?;
        check_invariant(alg, opts, next.t, &next.states)?;

        peaks.observe(alg, &next.states);
        total_deliveries += outcome.deliveries;
        senders_per_round.push(outcome.messages_sent as u32);
        if all_informed_at.is_none() && next.all_informed() {
            all_informed_at = Some(next.t);
        }
        if opts.record_trace {
            rounds.push(RoundRecord {
                t: config.t,
                snapshot,
                messages_sent: outcome.messages_sent,
                deliveries: outcome.deliveries,
                senders: outcome.senders,
                newly_informed: outcome.newly_informed,
                states_after: next.states.clone(),
                informed_after: next.informed.clone(),
            });
        }
        config = next;
    }

    let stats = RunStats {
        n,
        rounds_executed: config.t,
        stabilized_at,
        all_informed_at,
        senders_per_round,
        final_informed_count: config.informed_count(),
    };
    let metrics = Metrics {
        rounds_to_all_informed: Completion::from_option(all_informed_at),
        rounds_to_stabilization: Completion::from_option(stabilized_at),
        peak_counter_value: peaks.counter,
        peak_state_bits: peaks.bits,
        total_messages: total_deliveries,
    };
    let trace = opts.record_trace.then(|| {
        let initial = Configuration::initial(alg, n);
        Trace {
            header: TraceHeader {
                algorithm: opts
                    .algorithm_label
                    .clone()
                    .unwrap_or_else(|| alg.name()),
                adversary: opts
                    .adversary_label
                    .clone()
                    .unwrap_or_else(|| adv.name()),
                n,
                seed: opts.seed,
            },
            initial_states: initial.states,
            initial_informed: initial.informed,
            rounds,
        }
    });
    Ok(RunOutput {
        metrics,
        stats,
        trace,
        final_config: config,
    })
}

fn check_invariant<A: Algorithm>(
    alg: &A,
    opts: &RunOptions,
    t: u64,
    states: &[A::State],
) -> Result<(), EngineError> {
    if opts.check_invariants {
        alg.round_invariant(t, states)
            .map_err(|message| EngineError::InvariantViolation { t, message })?;
    }
    Ok(())
}

/// Recomputes [`Metrics`] from a fully recorded trace. Mirrors what [`run`]
/// accumulates on the fly; the two routes are cross-checked in tests.
pub fn compute_metrics<A: Algorithm>(trace: &Trace<A::State>, alg: &A) -> Metrics {
    let mut peaks = PeakTracker::new();
    peaks.observe(alg, &trace.initial_states);
    let mut total = 0u64;
    let mut all_informed_at = if trace.initial_informed.iter().all(|&i| i) {
        Some(0)
    } else {
        None
    };
    for round in &trace.rounds {
        peaks.observe(alg, &round.states_after);
        total += round.deliveries;
        if all_informed_at.is_none() && round.informed_after.iter().all(|&i| i) {
            all_informed_at = Some(round.t + 1);
        }
    }
    let stabilized = states_all_idle(alg, trace.final_states());
    Metrics {
        rounds_to_all_informed: Completion::from_option(all_informed_at),
        rounds_to_stabilization: if stabilized {
            Completion::At(trace.rounds_executed())
        } else {
            Completion::Never
        },
        peak_counter_value: peaks.counter,
        peak_state_bits: peaks.bits,
        total_messages: total,
    }
}

/// Renders metrics as aligned `key: value` lines for terminal output.
pub fn format_metrics_table(metrics: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rounds_to_all_informed:  {}", metrics.rounds_to_all_informed);
    let _ = writeln!(out, "rounds_to_stabilization: {}", metrics.rounds_to_stabilization);
    let _ = writeln!(out, "peak_counter_value:      {}", metrics.peak_counter_value);
    let _ = writeln!(out, "peak_state_bits:         {}", metrics.peak_state_bits);
    let _ = writeln!(out, "total_messages:          {}", metrics.total_messages);
    out
}
