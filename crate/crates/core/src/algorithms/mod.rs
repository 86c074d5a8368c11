//! Concrete algorithm implementations.

mod countdown;
mod flood;

pub use countdown::{
    attempt_schedule, countdown_round_invariant, expected_attempt_values, AttemptValues,
    Countdown, CountdownMessage, CountdownState,
};
pub use flood::{BoundedFlood, BoundedFloodState, FloodForever, FloodState, Token};
