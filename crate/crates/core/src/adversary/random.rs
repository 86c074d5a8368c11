//! Per-round random connected topologies.
//!
//! Each round draws a fresh uniform random labeled spanning tree and then
//! adds every non-tree edge independently with a fixed probability. The
//! round generator is ChaCha8 seeded with the base seed and streamed by the
//! round index, so a snapshot depends only on `(seed, t, n)` and replays
//! identically across platforms and call orders.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Adversary, AdversaryError, AdversaryView, NodeId, Snapshot};

#[derive(Debug, Clone, Copy)]
pub struct RandomConnectedAdversary {
    seed: u64,
    extra_edge_prob: f64,
}

impl RandomConnectedAdversary {
    pub fn new(seed: u64, extra_edge_prob: f64) -> Result<Self, AdversaryError> {
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(AdversaryError::InvalidProbability(extra_edge_prob));
        }
        Ok(RandomConnectedAdversary {
            seed,
            extra_edge_prob,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn extra_edge_prob(&self) -> f64 {
        self.extra_edge_prob
    }

    fn round_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t);
        rng
    }
}

impl Adversary for RandomConnectedAdversary {
    fn name(&self) -> String {
        format!("random:{}:{}", self.seed, self.extra_edge_prob)
    }

    fn next(&self, t: u64, view: &AdversaryView<'_>) -> Snapshot {
        let n = view.n;
        if n == 1 {
            return Snapshot::from_edges_unchecked(1, Vec::new());
        }
        let mut rng = self.round_rng(t);
        let mut tree: Vec<(NodeId, NodeId)> = if n == 2 {
            vec![(0, 1)]
        } else {
            let code: Vec<NodeId> = (0..n - 2)
                .map(|_| rng.random_range(0..n as NodeId))
                .collect();
            prufer_decode(&code, n)
        };
        tree.sort_unstable();

        let mut edges = tree.clone();
        if self.extra_edge_prob > 0.0 {
            for u in 0..n as NodeId {
                for v in (u + 1)..n as NodeId {
                    if tree.binary_search(&(u, v)).is_err() && rng.random_bool(self.extra_edge_prob)
                    {
                        edges.push((u, v));
                    }
                }
            }
        }
        Snapshot::from_edges_unchecked(n, edges)
    }
}

/// Decodes a Prüfer sequence into its labeled tree (edges normalized to
/// `u < v`). Every sequence in `[0, n)^(n-2)` maps to a distinct labeled tree
/// and vice versa, so uniform sequences give uniform spanning trees.
fn prufer_decode(code: &[NodeId], n: usize) -> Vec<(NodeId, NodeId)> {
    debug_assert_eq!(code.len(), n - 2);
    let mut degree = vec![1u32; n];
    for &a in code {
        degree[a as usize] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<NodeId>> = (0..n as NodeId)
        .filter(|&v| degree[v as usize] == 1)
        .map(Reverse)
        .collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &a in code {
        let Reverse(leaf) = leaves.pop().expect("prufer decode ran out of leaves");
        edges.push((leaf.min(a), leaf.max(a)));
        degree[a as usize] -= 1;
        if degree[a as usize] == 1 {
            leaves.push(Reverse(a));
        }
    }
    let Reverse(u) = leaves.pop().expect("prufer decode missing final leaf");
    let Reverse(v) = leaves.pop().expect("prufer decode missing final leaf");
    edges.push((u.min(v), u.max(v)));
    edges
}
