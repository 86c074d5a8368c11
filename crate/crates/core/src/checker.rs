//! Exhaustive small-instance verification.
//!
//! The checker explores every adversary choice: from each reachable
//! configuration it branches over all connected snapshots on `n` nodes,
//! deduplicating configurations up to permutation of the non-broadcaster
//! nodes (anonymous nodes in the same state are interchangeable because the
//! snapshot enumeration is closed under relabeling). The broadcaster stays
//! pinned at slot 0: its informed flag is permanent, so merging it with other
//! nodes would not be sound.
//!
//! Levels are iterated literally: the set of configurations reachable at
//! depth `d + 1` is the union of the successor sets of the configurations at
//! depth `d`. Successor sets are memoized per configuration, so revisiting a
//! stable (self-looping) configuration costs a lookup.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::adversary::{enumerate_connected_snapshots, AdversaryError, Snapshot};
use crate::algorithms::{countdown_round_invariant, CountdownState};
use crate::engine::{execute_round, states_all_idle, Configuration, EngineError};
use crate::model::Algorithm;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("exhaustive checking supports 2..=5 nodes, got {0}")]
    UnsupportedNodeCount(usize),
    #[error("configuration cap of {0} exceeded")]
    ConfigCapExceeded(usize),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Abort exploration beyond this many distinct configurations.
    pub config_cap: usize,
    /// Stop recording (not exploring) after this many violations.
    pub max_violations: usize,
    /// Expand frontier configurations on the rayon pool when available.
    pub parallel: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            config_cap: 10_000_000,
            max_violations: 32,
            parallel: true,
        }
    }
}

/// Canonical encoding of a configuration: the broadcaster's `(state,
/// informed)` slot first, the remaining slots sorted.
pub type ConfigKey<S> = Vec<(S, bool)>;

pub fn canonical_key<S: Clone + Ord>(states: &[S], informed: &[bool]) -> ConfigKey<S> {
    let mut key: Vec<(S, bool)> = states
        .iter()
        .cloned()
        .zip(informed.iter().copied())
        .collect();
    key[1..].sort_unstable();
    key
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub depth: u64,
    pub description: String,
    /// Snapshot sequence that reproduces the violating configuration when
    /// replayed from the initial configuration.
    pub witness: Vec<Snapshot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub n: usize,
    pub depth_bound: u64,
    /// Distinct canonical configurations discovered.
    pub reachable_count: usize,
    /// True iff no violations were recorded and every configuration
    /// reachable at exactly `depth_bound` is stable with all nodes informed.
    pub all_stable_at_bound: bool,
    pub invariant_violations: Vec<Violation>,
    /// One past the deepest level holding a configuration that is not
    /// stable-and-all-informed; equals the exact worst-case stabilization
    /// round when it does not exceed `depth_bound`.
    pub worst_stabilization_depth: u64,
}

struct Entry<S> {
    config: Configuration<S>,
    parent: Option<(usize, usize)>,
    stable_informed: bool,
}

struct Explorer<'a, A: Algorithm> {
    alg: &'a A,
    n: usize,
    snaps: Vec<Snapshot>,
    entries: Vec<Entry<A::State>>,
    index: HashMap<ConfigKey<A::State>, usize>,
    successors: Vec<Option<Vec<usize>>>,
    violations: Vec<Violation>,
    opts: CheckOptions,
}

impl<'a, A: Algorithm> Explorer<'a, A> {
    fn new(alg: &'a A, n: usize, opts: CheckOptions) -> Result<Self, CheckError> {
        if !(2..=5).contains(&n) {
            return Err(CheckError::UnsupportedNodeCount(n));
        }
        Ok(Explorer {
            alg,
            n,
            snaps: enumerate_connected_snapshots(n)?,
            entries: Vec::new(),
            index: HashMap::new(),
            successors: Vec::new(),
            violations: Vec::new(),
            opts,
        })
    }

    fn witness(&self, id: usize) -> Vec<Snapshot> {
        let mut path = Vec::new();
        let mut cursor = id;
        while let Some((parent, snap_idx)) = self.entries[cursor].parent {
            path.push(self.snaps[snap_idx].clone());
            cursor = parent;
        }
        path.reverse();
        path
    }

    fn insert<F>(
        &mut self,
        mut config: Configuration<A::State>,
        depth: u64,
        parent: Option<(usize, usize)>,
        hook: &F,
    ) -> Result<usize, CheckError>
    where
        F: Fn(u64, &Configuration<A::State>) -> Option<String>,
    {
        let key = canonical_key(&config.states, &config.informed);
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        if self.entries.len() >= self.opts.config_cap {
            return Err(CheckError::ConfigCapExceeded(self.opts.config_cap));
        }
        config.t = depth;
        let stable_informed =
            states_all_idle(self.alg, &config.states) && config.all_informed();
        let id = self.entries.len();
        self.entries.push(Entry {
            config,
            parent,
            stable_informed,
        });
        self.successors.push(None);
        self.index.insert(key, id);
        if let Some(description) = hook(depth, &self.entries[id].config) {
            if self.violations.len() < self.opts.max_violations {
                let witness = self.witness(id);
                self.violations.push(Violation {
                    depth,
                    description,
                    witness,
                });
            }
        }
        Ok(id)
    }

    /// Raw one-round results for every snapshot, in snapshot order.
    fn expand_raw(
        &self,
        id: usize,
    ) -> Result<Vec<Configuration<A::State>>, EngineError> {
        let config = &self.entries[id].config;
        self.snaps
            .iter()
            .map(|s| execute_round(self.alg, config, s).map(|(c, _)| c))
            .collect()
    }

    fn expand_level<F>(
        &mut self,
        level: &[usize],
        depth: u64,
        hook: &F,
    ) -> Result<Vec<usize>, CheckError>
    where
        F: Fn(u64, &Configuration<A::State>) -> Option<String>,
    {
        let pending: Vec<usize> = level
            .iter()
            .copied()
            .filter(|&id| self.successors[id].is_none())
            .collect();

        #[cfg(feature = "parallel")]
        let raw: Vec<(usize, Result<Vec<Configuration<A::State>>, EngineError>)> =
            if self.opts.parallel {
                pending
                    .par_iter()
                    .map(|&id| (id, self.expand_raw(id)))
                    .collect()
            } else {
                pending.iter().map(|&id| (id, self.expand_raw(id))).collect()
            };
        #[cfg(not(feature = "parallel"))]
        let raw: Vec<(usize, Result<Vec<Configuration<A::State>>, EngineError>)> =
            pending.iter().map(|&id| (id, self.expand_raw(id))).collect();

        // merge sequentially in id order so entry numbering, parents, and
        // violation order do not depend on thread scheduling
        for (id, configs) in raw {
            let mut targets = Vec::with_capacity(self.snaps.len());
            for (snap_idx, config) in configs?.into_iter().enumerate() {
                targets.push(self.insert(config, depth + 1, Some((id, snap_idx)), hook)?);
            }
            targets.sort_unstable();
            targets.dedup();
            self.successors[id] = Some(targets);
        }

        let mut next = Vec::new();
        for &id in level {
            next.extend(
                self.successors[id]
                    .as_ref()
                    .expect("successors were just computed")
                    .iter()
                    .copied(),
            );
        }
        next.sort_unstable();
        next.dedup();
        Ok(next)
    }

    fn run<F>(mut self, depth_bound: u64, hook: F) -> Result<CheckReport, CheckError>
    where
        F: Fn(u64, &Configuration<A::State>) -> Option<String>,
    {
        let initial = Configuration::initial(self.alg, self.n);
        let root = self.insert(initial, 0, None, &hook)?;
        let mut level = vec![root];
        let mut last_unstable: Option<u64> = None;
        let mut frontier_ok = true;
        for depth in 0..=depth_bound {
            if level
                .iter()
                .any(|&id| !self.entries[id].stable_informed)
            {
                last_unstable = Some(depth);
                if depth == depth_bound {
                    frontier_ok = false;
                }
            }
            if depth == depth_bound {
                break;
            }
            level = self.expand_level(&level, depth, &hook)?;
        }
        Ok(CheckReport {
            n: self.n,
            depth_bound,
            reachable_count: self.entries.len(),
            all_stable_at_bound: frontier_ok && self.violations.is_empty(),
            invariant_violations: self.violations,
            worst_stabilization_depth: last_unstable.map_or(0, |d| d + 1),
        })
    }
}

/// All distinct successor configurations of `config` under every connected
/// snapshot on `n` nodes, deduplicated by canonical key and listed in
/// first-occurrence (snapshot enumeration) order.
pub fn successors<A: Algorithm>(
    alg: &A,
    config: &Configuration<A::State>,
    n: usize,
) -> Result<Vec<Configuration<A::State>>, CheckError> {
    if config.n() != n {
        return Err(CheckError::UnsupportedNodeCount(config.n()));
    }
    let snaps = enumerate_connected_snapshots(n)?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for snapshot in &snaps {
        let (next, _) = execute_round(alg, config, snapshot)?;
        let key = canonical_key(&next.states, &next.informed);
        if seen.insert(key, ()).is_none() {
            out.push(next);
        }
    }
    Ok(out)
}

/// Breadth-first universal check that every adversary path reaches a stable,
/// fully informed configuration within `depth_bound` rounds.
pub fn verify_universal_stabilization<A: Algorithm>(
    alg: &A,
    n: usize,
    depth_bound: u64,
    opts: &CheckOptions,
) -> Result<CheckReport, CheckError> {
    Explorer::new(alg, n, opts.clone())?.run(depth_bound, |_, _| None)
}

/// Same exploration with per-configuration countdown invariants: one shared
/// `(current, maximum)` pair on every non-idle node, matching the value
/// recurrence at the configuration's depth, counters within the `2(n-1)`
/// bound, and idle/informed consistency. Violations carry a replayable
/// witness path.
pub fn verify_invariants<A: Algorithm<State = CountdownState>>(
    alg: &A,
    n: usize,
    depth_bound: u64,
    opts: &CheckOptions,
) -> Result<CheckReport, CheckError> {
    Explorer::new(alg, n, opts.clone())?
        .run(depth_bound, move |depth, config| {
            countdown_config_check(n, depth, config)
        })
}

fn countdown_config_check(
    n: usize,
    depth: u64,
    config: &Configuration<CountdownState>,
) -> Option<String> {
    if let Err(message) = countdown_round_invariant(depth, &config.states) {
        return Some(message);
    }
    let cap = 2 * (n as i64 - 1);
    for (v, s) in config.states.iter().enumerate() {
        if s.current == -1 {
            if s.maximum != -1 && s.maximum < 1 {
                return Some(format!("node {v} idles with malformed maximum {s:?}"));
            }
            if s.maximum == -1 && config.informed[v] {
                return Some(format!(
                    "node {v} is informed but still in the initial idle state"
                ));
            }
        } else if s.maximum > cap {
            return Some(format!(
                "node {v} carries maximum {} above the 2(n-1) bound {cap}",
                s.maximum
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Countdown;
    use crate::algorithms::FloodForever;
    use crate::engine::stabilization_bound;

    #[test]
    fn initial_k2_has_exactly_one_successor() {
        let config = Configuration::initial(&Countdown, 2);
        let succ = successors(&Countdown, &config, 2).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(
            succ[0].states,
            vec![CountdownState::new(-1, 1), CountdownState::new(2, 2)]
        );
    }

    #[test]
    fn initial_n3_successors_merge_up_to_permutation() {
        // four connected snapshots on three nodes collapse to two outcomes:
        // one neighbor of the broadcaster joins, or both do
        let config = Configuration::initial(&Countdown, 3);
        let succ = successors(&Countdown, &config, 3).unwrap();
        assert!(succ.len() <= 4);
        assert_eq!(succ.len(), 2);
    }

    #[test]
    fn stable_configuration_loops_to_itself() {
        let stable = Configuration {
            t: 4,
            states: vec![CountdownState::new(-1, 2), CountdownState::new(-1, 2)],
            informed: vec![true, true],
        };
        let succ = successors(&Countdown, &stable, 2).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].states, stable.states);
    }

    #[test]
    fn countdown_k2_report() {
        let report =
            verify_invariants(&Countdown, 2, 11, &CheckOptions::default()).unwrap();
        assert!(report.all_stable_at_bound);
        assert!(report.invariant_violations.is_empty());
        assert_eq!(report.worst_stabilization_depth, 4);
        // the five configurations of the single K_2 execution path
        assert_eq!(report.reachable_count, 5);
    }

    #[test]
    fn flood_never_stabilizes_under_the_checker() {
        let report =
            verify_universal_stabilization(&FloodForever, 2, 11, &CheckOptions::default())
                .unwrap();
        assert!(!report.all_stable_at_bound);
        assert_eq!(report.worst_stabilization_depth, 12);
    }

    #[test]
    fn worst_depth_stays_within_the_closed_form_bound() {
        for n in 2..=3 {
            let report = verify_invariants(
                &Countdown,
                n,
                stabilization_bound(n),
                &CheckOptions::default(),
            )
            .unwrap();
            assert!(report.all_stable_at_bound, "n={n}");
            assert!(report.worst_stabilization_depth <= stabilization_bound(n));
        }
    }

    #[test]
    fn canonical_key_pins_broadcaster_and_sorts_the_rest() {
        let a = canonical_key(
            &[
                CountdownState::new(0, 2),
                CountdownState::new(-1, -1),
                CountdownState::new(0, 2),
            ],
            &[true, false, true],
        );
        let b = canonical_key(
            &[
                CountdownState::new(0, 2),
                CountdownState::new(0, 2),
                CountdownState::new(-1, -1),
            ],
            &[true, true, false],
        );
        assert_eq!(a, b);
        assert_eq!(a[0], (CountdownState::new(0, 2), true));
    }

    #[test]
    fn canonicalization_is_a_congruence_on_samples() {
        // permuting non-broadcaster nodes must permute nothing observable:
        // equal keys imply equal successor key sets
        let base = Configuration {
            t: 1,
            states: vec![
                CountdownState::new(2, 2),
                CountdownState::new(-1, -1),
                CountdownState::new(2, 2),
                CountdownState::new(-1, -1),
            ],
            informed: vec![true, false, true, false],
        };
        let permuted = Configuration {
            t: 1,
            states: vec![
                CountdownState::new(2, 2),
                CountdownState::new(-1, -1),
                CountdownState::new(-1, -1),
                CountdownState::new(2, 2),
            ],
            informed: vec![true, false, false, true],
        };
        assert_eq!(
            canonical_key(&base.states, &base.informed),
            canonical_key(&permuted.states, &permuted.informed)
        );
        let keys = |cfgs: Vec<Configuration<CountdownState>>| {
            let mut v: Vec<_> = cfgs
                .iter()
                .map(|c| canonical_key(&c.states, &c.informed))
                .collect();
            v.sort();
            v
        };
        assert_eq!(
            keys(successors(&Countdown, &base, 4).unwrap()),
            keys(successors(&Countdown, &permuted, 4).unwrap())
        );
    }

    #[test]
    fn unsupported_node_counts_are_rejected() {
        assert!(matches!(
            verify_invariants(&Countdown, 1, 5, &CheckOptions::default()),
            Err(CheckError::UnsupportedNodeCount(1))
        ));
        assert!(matches!(
            verify_invariants(&Countdown, 6, 5, &CheckOptions::default()),
            Err(CheckError::UnsupportedNodeCount(6))
        ));
    }

    #[test]
    fn config_cap_aborts() {
        let opts = CheckOptions {
            config_cap: 3,
            ..CheckOptions::default()
        };
        assert!(matches!(
            verify_invariants(&Countdown, 3, 16, &opts),
            Err(CheckError::ConfigCapExceeded(3))
        ));
    }
}
