//! In-memory run traces and their JSON Lines serialization.
//!
//! A trace file starts with a header object
//! `{"algorithm": .., "adversary": .., "n": .., "seed": ..}` followed by one
//! object per round: `{"t", "edges", "states", "informed", "messages_sent"}`,
//! where `states` and `informed` describe the configuration at the start of
//! round `t` and `edges`/`messages_sent` describe what happened during it.
//! A terminal line with the final configuration, an empty edge list, and zero
//! messages closes the file.

use std::io::{self, Write};

use serde::Serialize;

use crate::adversary::{NodeId, Snapshot};

#[derive(Debug, Clone, Serialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub adversary: String,
    pub n: usize,
    pub seed: u64,
}

/// Everything the engine observed during one round.
#[derive(Debug, Clone)]
pub struct RoundRecord<S> {
    pub t: u64,
    pub snapshot: Snapshot,
    /// Nodes whose emit was non-absent this round.
    pub messages_sent: usize,
    /// Message deliveries, counted once per (sender, receiving neighbor).
    pub deliveries: u64,
    pub senders: Vec<bool>,
    pub newly_informed: Vec<NodeId>,
    pub states_after: Vec<S>,
    pub informed_after: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub header: TraceHeader,
    pub initial_states: Vec<S>,
    pub initial_informed: Vec<bool>,
    pub rounds: Vec<RoundRecord<S>>,
}

#[derive(Serialize)]
struct Line<'a, S> {
    t: u64,
    edges: &'a [(NodeId, NodeId)],
    states: &'a [S],
    informed: &'a [bool],
    messages_sent: usize,
}

impl<S> Trace<S> {
    pub fn rounds_executed(&self) -> u64 {
        self.rounds.len() as u64
    }

    /// Configuration states at time `t`, for `t <= rounds_executed()`.
    pub fn states_at(&self, t: u64) -> &[S] {
        if t == 0 {
            &self.initial_states
        } else {
            &self.rounds[t as usize - 1].states_after
        }
    }

    pub fn informed_at(&self, t: u64) -> &[bool] {
        if t == 0 {
            &self.initial_informed
        } else {
            &self.rounds[t as usize - 1].informed_after
        }
    }

    pub fn final_states(&self) -> &[S] {
        self.states_at(self.rounds_executed())
    }

    pub fn final_informed(&self) -> &[bool] {
        self.informed_at(self.rounds_executed())
    }
}

impl<S: Serialize> Trace<S> {
    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let write_line = |w: &mut W, line: &Line<'_, S>| -> io::Result<()> {
            serde_json::to_writer(&mut *w, line)?;
            w.write_all(b"\n")
        };
        serde_json::to_writer(&mut *w, &self.header)?;
        w.write_all(b"\n")?;
        for (i, round) in self.rounds.iter().enumerate() {
            write_line(
                w,
                &Line {
                    t: round.t,
                    edges: round.snapshot.edges(),
                    states: self.states_at(i as u64),
                    informed: self.informed_at(i as u64),
                    messages_sent: round.messages_sent,
                },
            )?;
        }
        write_line(
            w,
            &Line {
                t: self.rounds_executed(),
                edges: &[],
                states: self.final_states(),
                informed: self.final_informed(),
                messages_sent: 0,
            },
        )
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_jsonl(&mut out)
            .expect("writing a trace to memory cannot fail");
        out
    }
}
