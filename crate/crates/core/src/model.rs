//! Execution-model contracts that everything else builds on: node roles,
//! canonical message multisets, and the behavioural trait a distributed
//! algorithm implements (initialize by role, emit from state, transition on
//! a message multiset).
//!
//! Nodes are anonymous: messages carry no sender identity, algorithms never
//! see node indices or neighbor counts, and the engine inspects algorithm
//! state only through the trait functions and the state-size accountant.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use serde::Serialize;

/// Role of a node in a broadcast instance.
///
/// Exactly one node per simulation is the broadcaster; the engine pins it at
/// index 0. Nodes themselves never learn their index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Broadcaster,
    Ordinary,
}

/// A canonical multiset of received messages.
///
/// Entries are stored as `(message, count)` pairs sorted by message value, so
/// two bags built from the same messages in any arrival order compare equal.
/// The total count equals the number of delivering neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageBag<M> {
    entries: Vec<(M, usize)>,
}

impl<M: Ord> MessageBag<M> {
    /// The empty multiset (no neighbor delivered anything).
    pub fn empty() -> Self {
        MessageBag {
            entries: Vec::new(),
        }
    }

    /// Builds the order-independent canonical multiset of `messages`.
    pub fn from_messages<I: IntoIterator<Item = M>>(messages: I) -> Self {
        let mut counts: BTreeMap<M, usize> = BTreeMap::new();
        for m in messages {
            *counts.entry(m).or_insert(0) += 1;
        }
        Self::from_counts(counts)
    }

    pub(crate) fn from_counts(counts: BTreeMap<M, usize>) -> Self {
        MessageBag {
            entries: counts.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of messages in the bag, i.e. how many neighbors delivered one.
    pub fn total(&self) -> usize {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Canonical `(message, count)` pairs in ascending message order.
    pub fn entries(&self) -> &[(M, usize)] {
        &self.entries
    }

    /// The greatest message value in the bag, if any.
    pub fn max_message(&self) -> Option<&M> {
        self.entries.last().map(|(m, _)| m)
    }
}

impl<M: Ord> FromIterator<M> for MessageBag<M> {
    fn from_iter<I: IntoIterator<Item = M>>(iter: I) -> Self {
        MessageBag::from_messages(iter)
    }
}

impl<M: Ord> Default for MessageBag<M> {
    fn default() -> Self {
        MessageBag::empty()
    }
}

/// Behavioural contract of a deterministic anonymous algorithm.
///
/// All three functions must be total, deterministic, and pure: `emit` depends
/// only on the state, `step` only on the state and the received multiset.
/// States are opaque values compared by structural equality; `state_bits`
/// reports how many bits a node needs to store the state between rounds, so
/// space accounting stays algorithm-agnostic.
pub trait Algorithm: Send + Sync {
    type State: Clone + Eq + Ord + Hash + Debug + Send + Sync + Serialize;
    type Message: Clone + Eq + Ord + Debug + Send + Sync;

    /// Registry-style name, used as the default trace-header label.
    fn name(&self) -> String;

    fn init(&self, role: Role) -> Self::State;

    fn emit(&self, state: &Self::State) -> Option<Self::Message>;

    fn step(&self, state: &Self::State, bag: &MessageBag<Self::Message>) -> Self::State;

    /// Bits needed to encode `state` between rounds.
    fn state_bits(&self, state: &Self::State) -> u32;

    /// Counter value carried by the state, for peak-counter metrics.
    /// `None` for algorithms whose states are not counters.
    fn counter_value(&self, _state: &Self::State) -> Option<i64> {
        None
    }

    /// Per-round configuration invariant, checked by the engine after every
    /// transition when invariant checking is enabled. `states` is the full
    /// per-node state vector at time `t`.
    fn round_invariant(&self, _t: u64, _states: &[Self::State]) -> Result<(), String> {
        Ok(())
    }
}

/// A node is idle iff it will send nothing next round and an empty multiset
/// leaves its state unchanged.
pub fn is_idle<A: Algorithm>(alg: &A, state: &A::State) -> bool {
    alg.emit(state).is_none() && alg.step(state, &MessageBag::empty()) == *state
}

/// Bits needed to encode an integer in `-1..=v` (the `-1` sentinel plus the
/// value range), i.e. the bit length of `v + 1` with a one-bit minimum.
pub fn int_bits(v: i64) -> u32 {
    debug_assert!(v >= -1);
    let x = (v + 1) as u64;
    if x == 0 {
        1
    } else {
        u64::BITS - x.leading_zeros()
    }
}

/// Smallest `b` with `2^b >= m` (number of bits that distinguish `m` values).
pub fn ceil_log2(m: u64) -> u32 {
    assert!(m >= 1);
    if m == 1 {
        0
    } else {
        u64::BITS - (m - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{Countdown, CountdownMessage, CountdownState, FloodForever};
    use proptest::prelude::*;

    fn msg(current: i64, maximum: i64) -> CountdownMessage {
        CountdownMessage { current, maximum }
    }

    #[test]
    fn canonical_bag_counts_multiplicities() {
        let bag = MessageBag::from_messages([msg(2, 2), msg(0, 1), msg(2, 2)]);
        assert_eq!(bag.entries(), &[(msg(0, 1), 1), (msg(2, 2), 2)]);
        assert_eq!(bag.total(), 3);
    }

    #[test]
    fn canonical_bag_empty() {
        let bag: MessageBag<CountdownMessage> = MessageBag::from_messages([]);
        assert!(bag.is_empty());
        assert_eq!(bag.total(), 0);
        assert_eq!(bag.max_message(), None);
    }

    #[test]
    fn canonical_bag_is_order_independent() {
        let a = MessageBag::from_messages([msg(2, 2), msg(0, 1), msg(2, 2)]);
        let b = MessageBag::from_messages([msg(0, 1), msg(2, 2), msg(2, 2)]);
        assert_eq!(a, b);
    }

    #[test]
    fn is_idle_examples() {
        let countdown = Countdown;
        assert!(is_idle(&countdown, &CountdownState::new(-1, -1)));
        assert!(!is_idle(&countdown, &CountdownState::new(0, 1)));

        let flood = FloodForever;
        let informed = flood.init(Role::Broadcaster);
        assert!(!is_idle(&flood, &informed));
    }

    #[test]
    fn int_bits_examples() {
        assert_eq!(int_bits(-1), 1);
        assert_eq!(int_bits(0), 1);
        assert_eq!(int_bits(1), 2);
        assert_eq!(int_bits(2), 2);
        assert_eq!(int_bits(3), 3);
        assert_eq!(int_bits(2046), 11);
    }

    #[test]
    fn ceil_log2_examples() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1024), 10);
    }

    proptest! {
        #[test]
        fn bag_is_permutation_invariant(mut msgs in proptest::collection::vec((0i64..6, 0i64..6), 0..12)) {
            let original: Vec<CountdownMessage> =
                msgs.iter().map(|&(c, m)| msg(c, m)).collect();
            let a = MessageBag::from_messages(original.clone());
            // reverse plus a rotation covers arbitrary reorderings well enough
            msgs.reverse();
            if !msgs.is_empty() {
                msgs.rotate_left(msgs.len() / 2);
            }
            let permuted: Vec<CountdownMessage> =
                msgs.iter().map(|&(c, m)| msg(c, m)).collect();
            let b = MessageBag::from_messages(permuted);
            prop_assert_eq!(a.clone(), b);
            prop_assert_eq!(a.total(), original.len());
        }

        #[test]
        fn countdown_functions_are_reproducible(
            current in -1i64..8,
            maximum in -1i64..8,
            bag_msgs in proptest::collection::vec((0i64..5, 1i64..6), 0..6),
        ) {
            let alg = Countdown;
            let state = CountdownState { current, maximum };
            let bag = MessageBag::from_messages(bag_msgs.iter().map(|&(c, m)| msg(c, m)));
            prop_assert_eq!(alg.emit(&state), alg.emit(&state));
            prop_assert_eq!(alg.step(&state, &bag), alg.step(&state, &bag));
        }
    }
}
