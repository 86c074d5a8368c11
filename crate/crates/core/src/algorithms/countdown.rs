//! The doubling-attempt broadcast algorithm.
//!
//! Broadcast proceeds as a sequence of attempts, each twice as long as the
//! one before. A node stores two counters: `current`, the rounds remaining in
//! the attempt it participates in (`-1` while idle), and `maximum`, that
//! attempt's total duration (`-1` before first contact). Non-idle nodes send
//! `(current, maximum)` and decrement; an idle node that hears `(0, m)` opens
//! a fresh attempt of duration `2m`, and one that hears `(c, m)` with `c > 0`
//! joins the running attempt at `(c - 1, m)`. Once an attempt leaves every
//! node non-idle simultaneously, all counters run out together and no node
//! ever speaks again.

use serde::{Deserialize, Serialize};

use crate::engine::RunStats;
use crate::model::{int_bits, Algorithm, MessageBag, Role};

/// Per-node state of the countdown algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CountdownState {
    pub current: i64,
    pub maximum: i64,
}

impl CountdownState {
    pub fn new(current: i64, maximum: i64) -> Self {
        CountdownState { current, maximum }
    }

    /// Idle means not participating in any attempt.
    pub fn is_idle(&self) -> bool {
        self.current == -1
    }
}

/// Wire payload: the sender's pre-round `(current, maximum)` pair. Ordered
/// lexicographically, which is what the receiver tie-break relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountdownMessage {
    pub current: i64,
    pub maximum: i64,
}

/// The countdown algorithm. Stateless; all behaviour lives in the functions.
#[derive(Debug, Clone, Copy, Default)]
pub struct Countdown;

impl Algorithm for Countdown {
    type State = CountdownState;
    type Message = CountdownMessage;

    fn name(&self) -> String {
        "countdown".to_owned()
    }

    fn init(&self, role: Role) -> CountdownState {
        match role {
            Role::Broadcaster => CountdownState::new(0, 1),
            Role::Ordinary => CountdownState::new(-1, -1),
        }
    }

    fn emit(&self, state: &CountdownState) -> Option<CountdownMessage> {
        if state.current != -1 {
            Some(CountdownMessage {
                current: state.current,
                maximum: state.maximum,
            })
        } else {
            None
        }
    }

    fn step(&self, state: &CountdownState, bag: &MessageBag<CountdownMessage>) -> CountdownState {
        if state.current != -1 {
            // Participants ignore their mailbox and just count down.
            return CountdownState::new(state.current - 1, state.maximum);
        }
        // In a reachable execution every received message is identical; the
        // lexicographically greatest one is selected so that the function
        // stays total on arbitrary bags.
        match bag.max_message() {
            Some(m) if m.current == 0 => CountdownState::new(2 * m.maximum, 2 * m.maximum),
            Some(m) if m.current > 0 => CountdownState::new(m.current - 1, m.maximum),
            _ => *state,
        }
    }

    fn state_bits(&self, state: &CountdownState) -> u32 {
        int_bits(state.current) + int_bits(state.maximum)
    }

    fn counter_value(&self, state: &CountdownState) -> Option<i64> {
        Some(state.maximum)
    }

    fn round_invariant(&self, t: u64, states: &[CountdownState]) -> Result<(), String> {
        countdown_round_invariant(t, states)
    }
}

/// The `(current, maximum)` pair shared by every non-idle node at one time
/// step of any execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttemptValues {
    pub current: i64,
    pub maximum: i64,
}

/// Iterates the shared-value recurrence `t` times from `(0, 1)`:
/// `(0, m) -> (2m, 2m)` and `(c, m) -> (c - 1, m)` otherwise.
pub fn expected_attempt_values(t: u64) -> AttemptValues {
    let (mut current, mut maximum) = (0i64, 1i64);
    for _ in 0..t {
        if current == 0 {
            current = 2 * maximum;
            maximum = 2 * maximum;
        } else {
            current -= 1;
        }
    }
    AttemptValues { current, maximum }
}

/// Start rounds and durations of every attempt beginning at or before
/// `max_start`: pairs `(t, k)` with shared values `current = maximum = k > 0`
/// at time `t`.
pub fn attempt_schedule(max_start: u64) -> Vec<(u64, u64)> {
    let mut attempts = Vec::new();
    let (mut current, mut maximum) = (0i64, 1i64);
    let mut t = 0u64;
    while t <= max_start {
        if current == 0 {
            current = 2 * maximum;
            maximum *= 2;
            t += 1;
            if t <= max_start {
                attempts.push((t, maximum as u64));
            }
        } else {
            current -= 1;
            t += 1;
        }
    }
    attempts
}

/// Configuration invariant of the countdown algorithm at time `t`:
/// every non-idle node carries one shared `(current, maximum)` pair, that
/// pair equals the value recurrence at `t`, counters respect
/// `current <= maximum <= 2n`, and no state is structurally malformed.
pub fn countdown_round_invariant(t: u64, states: &[CountdownState]) -> Result<(), String> {
    let n = states.len() as i64;
    let mut shared: Option<(i64, i64)> = None;
    for (v, s) in states.iter().enumerate() {
        if s.current < -1 || s.maximum < -1 {
            return Err(format!("node {v} holds malformed counters {s:?} at t={t}"));
        }
        if s.current >= 0 && s.current > s.maximum {
            return Err(format!(
                "node {v} has current > maximum ({s:?}) at t={t}"
            ));
        }
        if s.maximum > 2 * n {
            return Err(format!(
                "node {v} exceeds the 2n counter bound ({s:?}, n={n}) at t={t}"
            ));
        }
        if s.current != -1 {
            let pair = (s.current, s.maximum);
            match shared {
                None => shared = Some(pair),
                Some(p) if p != pair => {
                    return Err(format!(
                        "non-idle nodes disagree at t={t}: {p:?} vs {pair:?} (node {v})"
                    ));
                }
                _ => {}
            }
        }
    }
    if let Some((current, maximum)) = shared {
        let expect = expected_attempt_values(t);
        if current != expect.current || maximum != expect.maximum {
            return Err(format!(
                "shared pair ({current}, {maximum}) at t={t} differs from the \
                 recurrence value ({}, {})",
                expect.current, expect.maximum
            ));
        }
    }
    Ok(())
}

/// Checks the attempt-progress property over a recorded countdown run: every
/// attempt of duration `k` that does not end in global idleness must have at
/// least `k + 1` non-idle nodes in its final round. For countdown a node
/// emits iff it is non-idle, so the engine's per-round sender counts are
/// exactly the non-idle counts.
pub fn verify_progress(stats: &RunStats) -> Vec<String> {
    let mut violations = Vec::new();
    let executed = stats.senders_per_round.len() as u64;
    for (t, k) in attempt_schedule(executed) {
        let end = t + k;
        if end >= executed {
            // the horizon cut this attempt short
            continue;
        }
        let ends_all_idle = stats.stabilized_at == Some(end + 1);
        let non_idle_at_end = u64::from(stats.senders_per_round[end as usize]);
        if !ends_all_idle && non_idle_at_end < k + 1 {
            violations.push(format!(
                "attempt of duration {k} starting at t={t} ended with only \
                 {non_idle_at_end} non-idle nodes and no global idleness"
            ));
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_idle;

    fn msg(current: i64, maximum: i64) -> CountdownMessage {
        CountdownMessage { current, maximum }
    }

    #[test]
    fn init_by_role() {
        let alg = Countdown;
        assert_eq!(alg.init(Role::Broadcaster), CountdownState::new(0, 1));
        assert_eq!(alg.init(Role::Ordinary), CountdownState::new(-1, -1));
        assert_eq!(alg.init(Role::Ordinary), alg.init(Role::Ordinary));
    }

    #[test]
    fn emit_guard() {
        let alg = Countdown;
        assert_eq!(alg.emit(&CountdownState::new(0, 1)), Some(msg(0, 1)));
        assert_eq!(alg.emit(&CountdownState::new(-1, -1)), None);
        assert_eq!(alg.emit(&CountdownState::new(3, 4)), Some(msg(3, 4)));
    }

    #[test]
    fn step_transitions() {
        let alg = Countdown;
        let empty = MessageBag::empty();
        // participant decrements on an empty bag
        assert_eq!(
            alg.step(&CountdownState::new(0, 1), &empty),
            CountdownState::new(-1, 1)
        );
        // idle node opens a new attempt on current = 0
        assert_eq!(
            alg.step(
                &CountdownState::new(-1, -1),
                &MessageBag::from_messages([msg(0, 1)])
            ),
            CountdownState::new(2, 2)
        );
        // idle node joins a running attempt on current > 0
        assert_eq!(
            alg.step(
                &CountdownState::new(-1, -1),
                &MessageBag::from_messages([msg(2, 2)])
            ),
            CountdownState::new(1, 2)
        );
        // participants ignore their mailbox entirely
        assert_eq!(
            alg.step(
                &CountdownState::new(5, 8),
                &MessageBag::from_messages([msg(2, 8)])
            ),
            CountdownState::new(4, 8)
        );
        // idle node with no input stays put
        assert_eq!(
            alg.step(&CountdownState::new(-1, -1), &empty),
            CountdownState::new(-1, -1)
        );
    }

    #[test]
    fn mixed_bag_takes_lexicographic_max() {
        // Unreachable in real executions; the tie-break picks (2, 2).
        let alg = Countdown;
        let bag = MessageBag::from_messages([msg(0, 1), msg(2, 2)]);
        assert_eq!(
            alg.step(&CountdownState::new(-1, -1), &bag),
            CountdownState::new(1, 2)
        );
    }

    #[test]
    fn attempt_value_recurrence() {
        let orbit: Vec<(i64, i64)> = (0..5)
            .map(|t| {
                let v = expected_attempt_values(t);
                (v.current, v.maximum)
            })
            .collect();
        assert_eq!(orbit, vec![(0, 1), (2, 2), (1, 2), (0, 2), (4, 4)]);
        let v9 = expected_attempt_values(9);
        assert_eq!((v9.current, v9.maximum), (8, 8));
    }

    #[test]
    fn attempt_schedule_matches_recurrence() {
        assert_eq!(attempt_schedule(20), vec![(1, 2), (4, 4), (9, 8), (18, 16)]);
        for &(t, k) in &attempt_schedule(200) {
            let v = expected_attempt_values(t);
            assert_eq!((v.current, v.maximum), (k as i64, k as i64));
        }
    }

    #[test]
    fn broadcaster_counts_as_an_attempt_of_its_own() {
        // The initial (0, 1) state is not in the schedule: current != maximum.
        assert!(attempt_schedule(20).iter().all(|&(t, _)| t > 0));
    }

    #[test]
    fn idle_state_is_idle() {
        let alg = Countdown;
        assert!(is_idle(&alg, &CountdownState::new(-1, -1)));
        assert!(is_idle(&alg, &CountdownState::new(-1, 2)));
        assert!(!is_idle(&alg, &CountdownState::new(0, 2)));
    }

    #[test]
    fn round_invariant_accepts_synchronized_states() {
        let states = vec![
            CountdownState::new(2, 2),
            CountdownState::new(-1, -1),
            CountdownState::new(2, 2),
        ];
        assert!(countdown_round_invariant(1, &states).is_ok());
    }

    #[test]
    fn round_invariant_rejects_disagreement() {
        let states = vec![CountdownState::new(2, 2), CountdownState::new(1, 2)];
        assert!(countdown_round_invariant(1, &states).is_err());
    }

    #[test]
    fn round_invariant_rejects_wrong_round_value() {
        // (2, 2) is the time-1 value, not the time-2 one.
        let states = vec![CountdownState::new(2, 2)];
        assert!(countdown_round_invariant(2, &states).is_err());
    }

    #[test]
    fn state_bits_accounts_both_counters() {
        let alg = Countdown;
        assert_eq!(alg.state_bits(&CountdownState::new(-1, -1)), 2);
        assert_eq!(alg.state_bits(&CountdownState::new(0, 1)), 3);
        assert_eq!(alg.state_bits(&CountdownState::new(2, 2)), 4);
    }

    #[test]
    fn progress_verifier_flags_starved_attempts() {
        // The K_2 run: senders per round 1, 1, 2, 2; attempt (1, 2) ends at
        // round 3 with stabilization at 4, which is the all-idle case.
        let good = RunStats {
            n: 2,
            rounds_executed: 4,
            stabilized_at: Some(4),
            all_informed_at: Some(1),
            senders_per_round: vec![1, 1, 2, 2],
            final_informed_count: 2,
        };
        assert!(verify_progress(&good).is_empty());

        // Same shape but pretending the run went on: the attempt that ends at
        // round 3 now needs three non-idle nodes and only has two.
        let bad = RunStats {
            n: 3,
            rounds_executed: 6,
            stabilized_at: None,
            all_informed_at: None,
            senders_per_round: vec![1, 1, 2, 2, 1, 1],
            final_informed_count: 2,
        };
        assert_eq!(verify_progress(&bad).len(), 1);
    }
}
