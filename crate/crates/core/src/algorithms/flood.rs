//! Flooding baselines: the always-on flood that never stabilizes, and a
//! constant-memory idle-start variant that relays for a fixed number of
//! rounds and then falls silent.

use serde::{Deserialize, Serialize};

use crate::model::{ceil_log2, Algorithm, MessageBag, Role};

/// Contentless token; flooding carries no payload beyond its arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FloodState {
    Uninformed,
    Informed,
}

/// Every informed node sends a token every round, forever. Solves broadcast
/// in one new node per round at worst, with a single state bit, but never
/// stops talking.
#[derive(Debug, Clone, Copy, Default)]
pub struct FloodForever;

impl Algorithm for FloodForever {
    type State = FloodState;
    type Message = Token;

    fn name(&self) -> String {
        "flood-forever".to_owned()
    }

    fn init(&self, role: Role) -> FloodState {
        match role {
            Role::Broadcaster => FloodState::Informed,
            Role::Ordinary => FloodState::Uninformed,
        }
    }

    fn emit(&self, state: &FloodState) -> Option<Token> {
        match state {
            FloodState::Informed => Some(Token),
            FloodState::Uninformed => None,
        }
    }

    fn step(&self, state: &FloodState, bag: &MessageBag<Token>) -> FloodState {
        match state {
            FloodState::Informed => FloodState::Informed,
            FloodState::Uninformed if !bag.is_empty() => FloodState::Informed,
            FloodState::Uninformed => FloodState::Uninformed,
        }
    }

    fn state_bits(&self, _state: &FloodState) -> u32 {
        1
    }
}

/// Counter state of [`BoundedFlood`]: `-1` is idle (uninformed or exhausted),
/// `budget..=0` counts the remaining relay rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundedFloodState {
    pub counter: i64,
}

/// Idle-start flood with a fixed relay budget: the broadcaster starts at
/// `budget`, a node with a positive counter sends a token and decrements,
/// a counter of zero drops to `-1` silently, and an idle node that receives
/// any message restarts at `budget`. Constant memory for a fixed budget.
#[derive(Debug, Clone, Copy)]
pub struct BoundedFlood {
    budget: u64,
}

impl BoundedFlood {
    /// `budget` is the number of rounds an activated node relays for.
    pub fn new(budget: u64) -> Self {
        assert!(budget >= 1, "relay budget must be at least 1");
        BoundedFlood { budget }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }
}

impl Algorithm for BoundedFlood {
    type State = BoundedFloodState;
    type Message = Token;

    fn name(&self) -> String {
        format!("bounded-flood:{}", self.budget)
    }

    fn init(&self, role: Role) -> BoundedFloodState {
        match role {
            Role::Broadcaster => BoundedFloodState {
                counter: self.budget as i64,
            },
            Role::Ordinary => BoundedFloodState { counter: -1 },
        }
    }

    fn emit(&self, state: &BoundedFloodState) -> Option<Token> {
        if state.counter >= 1 {
            Some(Token)
        } else {
            None
        }
    }

    fn step(&self, state: &BoundedFloodState, bag: &MessageBag<Token>) -> BoundedFloodState {
        let counter = if state.counter >= 1 {
            state.counter - 1
        } else if state.counter == 0 {
            -1
        } else if !bag.is_empty() {
            self.budget as i64
        } else {
            -1
        };
        BoundedFloodState { counter }
    }

    fn state_bits(&self, _state: &BoundedFloodState) -> u32 {
        // counter takes one of budget + 2 values
        ceil_log2(self.budget + 2)
    }

    fn counter_value(&self, state: &BoundedFloodState) -> Option<i64> {
        Some(state.counter)
    }
}
