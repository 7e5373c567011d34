//! Monte Carlo estimators over lazily sampled live graphs.
//!
//! Replicate `r` of an estimate seeded with `master_seed` keeps edge `e` iff
//! `coin(replicate_seed(master_seed, r), e) < p(e)`. Two estimates with the
//! same seed therefore see the same live graphs, which is what makes paired
//! differences (marginal gains) low-variance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{EdgeIdx, NodeEconomics, NodeId, SocialNetwork};
use crate::rng;

const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error (sample standard deviation over `sqrt(k)`).
    ///
    /// Sums are taken per fixed-size chunk and then across chunks, so the
    /// result does not depend on how the values were produced.
    pub fn from_values(values: &[f64]) -> Estimate {
        assert!(!values.is_empty(), "an estimate needs at least one sample");
        let k = values.len();
        let mean = chunked_sum(values.iter().copied(), k) / k as f64;
        let stderr = if k > 1 {
            let ss = chunked_sum(values.iter().map(|v| (v - mean) * (v - mean)), k);
            (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            samples: k,
        }
    }

    /// An exact value.
    pub fn exact(value: f64) -> Estimate {
        Estimate {
            mean: value,
            stderr: 0.0,
            samples: 1,
        }
    }
}

fn chunked_sum(values: impl Iterator<Item = f64>, len: usize) -> f64 {
    let mut total = 0.0;
    let mut partial = 0.0;
    for (i, v) in values.enumerate() {
        partial += v;
        if (i + 1) % CHUNK == 0 || i + 1 == len {
            total += partial;
            partial = 0.0;
        }
    }
    total
}

/// Seed of replicate `r` under `master_seed`.
#[inline]
pub fn replicate_seed(master_seed: u64, r: usize) -> u64 {
    rng::derive(master_seed, &[r as u64])
}

/// Whether edge `e` is live in the replicate with seed `replicate_seed`.
#[inline]
pub fn live_edge(network: &SocialNetwork, replicate_seed: u64, e: EdgeIdx) -> bool {
    rng::coin(replicate_seed, e as u64) < network.prob(e)
}

/// Reusable visited marks for repeated traversals.
pub(crate) struct Marks {
    stamp: Vec<u32>,
    epoch: u32,
    pub(crate) stack: Vec<NodeId>,
}

impl Marks {
    pub(crate) fn new(n: usize) -> Self {
        Marks {
            stamp: vec![0; n],
            epoch: 0,
            stack: Vec::new(),
        }
    }

    pub(crate) fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.stack.clear();
    }

    /// Marks `u`; returns false if it was already marked since the last reset.
    #[inline]
    pub(crate) fn mark(&mut self, u: NodeId) -> bool {
        let slot = &mut self.stamp[u.index()];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }

    #[inline]
    pub(crate) fn is_marked(&self, u: NodeId) -> bool {
        self.stamp[u.index()] == self.epoch
    }
}

/// Sum of `weight` over the nodes reachable from `seeds` in one replicate,
/// skipping nodes already marked in `marks` (which the call extends).
fn spread_into(
    network: &SocialNetwork,
    rep: u64,
    seeds: &[NodeId],
    weight: &impl Fn(NodeId) -> f64,
    marks: &mut Marks,
) -> f64 {
    let mut total = 0.0;
    for &s in seeds {
        if marks.mark(s) {
            total += weight(s);
            marks.stack.push(s);
        }
    }
    while let Some(u) = marks.stack.pop() {
        for &e in network.out_edges(u) {
            let e = e as EdgeIdx;
            let v = network.edge(e).target;
            if !marks.is_marked(v) && live_edge(network, rep, e) {
                marks.mark(v);
                total += weight(v);
                marks.stack.push(v);
            }
        }
    }
    total
}

fn estimate_weighted(
    network: &SocialNetwork,
    seeds: &[NodeId],
    samples: usize,
    master_seed: u64,
    weight: impl Fn(NodeId) -> f64 + Sync,
    offset: f64,
) -> Estimate {
    assert!(samples >= 1, "samples must be at least 1");
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map_init(
            || Marks::new(network.node_count()),
            |marks, r| {
                marks.reset();
                spread_into(
                    network,
                    replicate_seed(master_seed, r),
                    seeds,
                    &weight,
                    marks,
                ) - offset
            },
        )
        .collect();
    Estimate::from_values(&values)
}

/// Expected number of activated nodes, σ(S).
pub fn estimate_influence(
    network: &SocialNetwork,
    seeds: &[NodeId],
    samples: usize,
    master_seed: u64,
) -> Estimate {
    estimate_weighted(network, seeds, samples, master_seed, |_| 1.0, 0.0)
}

/// Expected benefit of the activated nodes, β(S).
pub fn estimate_benefit(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    seeds: &[NodeId],
    samples: usize,
    master_seed: u64,
) -> Estimate {
    estimate_weighted(
        network,
        seeds,
        samples,
        master_seed,
        |u| econ.benefit(u),
        0.0,
    )
}

/// Expected profit φ(S) = β(S) − C(S).
pub fn estimate_profit(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    seeds: &[NodeId],
    samples: usize,
    master_seed: u64,
) -> Estimate {
    let mut distinct = seeds.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let cost = econ.set_cost(&distinct);
    estimate_weighted(
        network,
        &distinct,
        samples,
        master_seed,
        |u| econ.benefit(u),
        cost,
    )
}

/// φ(S ∪ {u}) − φ(S) with both terms evaluated on the same replicates.
pub fn marginal_profit_gain(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    current: &[NodeId],
    candidate: NodeId,
    samples: usize,
    master_seed: u64,
) -> Estimate {
    assert!(samples >= 1, "samples must be at least 1");
    let cost = econ.cost(candidate);
    let benefit = |u: NodeId| econ.benefit(u);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map_init(
            || Marks::new(network.node_count()),
            |marks, r| {
                marks.reset();
                let rep = replicate_seed(master_seed, r);
                spread_into(network, rep, current, &benefit, marks);
                spread_into(network, rep, &[candidate], &benefit, marks) - cost
            },
        )
        .collect();
    Estimate::from_values(&values)
}
