//! Materialized live-graph replicates and incremental coverage.
//!
//! Greedy selection evaluates thousands of marginal gains on the same
//! replicates. [`LiveSamples`] draws the live edges of every replicate once
//! (with the same coins as [`estimate_profit`](super::estimate_profit)) and
//! stores them node-major; [`Coverage`] tracks, per replicate, which nodes a
//! seed set reaches. A replicate is either a Monte Carlo draw (weight 1) or,
//! in exact mode, one live graph of the full enumeration (weight P(G)).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{live_edge, replicate_seed, Marks};
use crate::error::{Error, Result};
use crate::graph::{EdgeIdx, NodeEconomics, NodeId, ResidualView, SocialNetwork};

/// Largest number of uncertain edges exact mode will enumerate.
pub const EXACT_EDGE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    /// Every live graph of the relevant edges, weighted by its probability.
    Exact,
}

/// Live edges of a set of replicates restricted to a view.
#[derive(Clone, Debug)]
pub struct LiveSamples {
    n: usize,
    weights: Vec<f64>,
    total_weight: f64,
    visible: Vec<bool>,
    base: Vec<NodeId>,
    out_off: Vec<usize>,
    out: Vec<(u32, u32)>,
    in_off: Vec<usize>,
    inn: Vec<(u32, u32)>,
}

impl LiveSamples {
    /// Samples the edges of `view`, plus the edges from `base` into the view.
    ///
    /// `base` nodes are treated as already active in every replicate: their
    /// live out-edges keep spreading but they are never candidates. Edges
    /// flagged in `blocked` are absent in every replicate.
    pub fn new(
        view: &ResidualView<'_>,
        base: &[NodeId],
        blocked: Option<&[bool]>,
        mode: SamplingMode,
    ) -> Result<Self> {
        let net = view.network();
        net.require_probabilities()?;
        let n = net.node_count();
        let mut is_base = vec![false; n];
        for &b in base {
            is_base[b.index()] = true;
        }
        let relevant: Vec<EdgeIdx> = (0..net.edge_count())
            .filter(|&e| {
                let edge = net.edge(e);
                view.contains(edge.target)
                    && (view.contains(edge.source) || is_base[edge.source.index()])
                    && !blocked.is_some_and(|b| b[e])
            })
            .collect();

        let (weights, triples) = match mode {
            SamplingMode::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::Config("samples must be at least 1".into()));
                }
                let triples: Vec<(u32, u32, u32)> = (0..samples)
                    .into_par_iter()
                    .with_min_len(256)
                    .flat_map_iter(|r| {
                        let rep = replicate_seed(seed, r);
                        relevant
                            .iter()
                            .filter(move |&&e| live_edge(net, rep, e))
                            .map(move |&e| {
                                let edge = net.edge(e);
                                (edge.source.0, r as u32, edge.target.0)
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect();
                (vec![1.0; samples], triples)
            }
            SamplingMode::Exact => exact_replicates(net, &relevant)?,
        };
        let total_weight = if matches!(mode, SamplingMode::Exact) {
            1.0
        } else {
            weights.len() as f64
        };

        let (out_off, out) = group(n, triples.iter().map(|&(s, r, t)| (s, r, t)));
        let (in_off, inn) = group(n, triples.iter().map(|&(s, r, t)| (t, r, s)));
        let visible = (0..n).map(|i| view.contains(NodeId::from(i))).collect();
        let mut base: Vec<NodeId> = base.to_vec();
        base.sort_unstable();
        base.dedup();
        Ok(LiveSamples {
            n,
            weights,
            total_weight,
            visible,
            base,
            out_off,
            out,
            in_off,
            inn,
        })
    }

    /// Samples of the whole network with no evidence.
    pub fn full(network: &SocialNetwork, mode: SamplingMode) -> Result<Self> {
        Self::new(&ResidualView::full(network), &[], None, mode)
    }

    pub fn replicates(&self) -> usize {
        self.weights.len()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_visible(&self, u: NodeId) -> bool {
        self.visible[u.index()]
    }

    /// Total number of stored live edges over all replicates.
    pub fn live_edge_count(&self) -> usize {
        self.out.len()
    }

    /// Live out-edges of `u` over all replicates, sorted by replicate.
    #[inline]
    fn out_all(&self, u: NodeId) -> &[(u32, u32)] {
        &self.out[self.out_off[u.index()]..self.out_off[u.index() + 1]]
    }

    #[inline]
    fn in_all(&self, u: NodeId) -> &[(u32, u32)] {
        &self.inn[self.in_off[u.index()]..self.in_off[u.index() + 1]]
    }

    /// Live out-neighbours of `u` in replicate `r`.
    #[inline]
    fn out_in_rep(&self, u: NodeId, r: u32) -> &[(u32, u32)] {
        rep_slice(self.out_all(u), r)
    }

    #[inline]
    fn in_in_rep(&self, u: NodeId, r: u32) -> &[(u32, u32)] {
        rep_slice(self.in_all(u), r)
    }
}

#[inline]
fn rep_slice(list: &[(u32, u32)], r: u32) -> &[(u32, u32)] {
    let lo = list.partition_point(|&(rep, _)| rep < r);
    let hi = lo + list[lo..].partition_point(|&(rep, _)| rep == r);
    &list[lo..hi]
}

/// Splits a sorted-by-replicate list into per-replicate runs.
fn runs(list: &[(u32, u32)]) -> impl Iterator<Item = (u32, &[(u32, u32)])> {
    let mut rest = list;
    std::iter::from_fn(move || {
        let &(r, _) = rest.first()?;
        let len = rest.partition_point(|&(rep, _)| rep == r);
        let (head, tail) = rest.split_at(len);
        rest = tail;
        Some((r, head))
    })
}

/// Stable counting sort of `(key, rep, other)` by key; replicate order within
/// a key is preserved because triples arrive replicate-major.
fn group(
    n: usize,
    triples: impl Iterator<Item = (u32, u32, u32)> + Clone,
) -> (Vec<usize>, Vec<(u32, u32)>) {
    let mut off = vec![0usize; n + 1];
    for (k, _, _) in triples.clone() {
        off[k as usize + 1] += 1;
    }
    for i in 0..n {
        off[i + 1] += off[i];
    }
    let mut fill = off.clone();
    let mut list = vec![(0u32, 0u32); off[n]];
    for (k, r, o) in triples {
        list[fill[k as usize]] = (r, o);
        fill[k as usize] += 1;
    }
    (off, list)
}

type Triples = Vec<(u32, u32, u32)>;

fn exact_replicates(net: &SocialNetwork, relevant: &[EdgeIdx]) -> Result<(Vec<f64>, Triples)> {
    if relevant.len() > EXACT_EDGE_CAP {
        return Err(Error::EnumerationCap {
            what: "uncertain edge count",
            got: relevant.len(),
            cap: EXACT_EDGE_CAP,
        });
    }
    let count = 1usize << relevant.len();
    let mut weights = Vec::with_capacity(count);
    let mut triples = Vec::new();
    for mask in 0..count {
        let mut w = 1.0;
        for (bit, &e) in relevant.iter().enumerate() {
            let p = net.prob(e);
            if mask >> bit & 1 == 1 {
                w *= p;
                let edge = net.edge(e);
                triples.push((edge.source.0, mask as u32, edge.target.0));
            } else {
                w *= 1.0 - p;
            }
        }
        weights.push(w);
    }
    Ok((weights, triples))
}

/// Per-traversal scratch space; one per thread.
pub struct SampleScratch {
    marks: Marks,
    inside: Marks,
    list: Vec<NodeId>,
}

impl SampleScratch {
    pub fn new(n: usize) -> Self {
        SampleScratch {
            marks: Marks::new(n),
            inside: Marks::new(n),
            list: Vec::new(),
        }
    }
}

/// The nodes reached by a seed set (plus the base) in every replicate.
#[derive(Clone, Debug)]
pub struct Coverage<'a> {
    samples: &'a LiveSamples,
    benefit: &'a [f64],
    covered: Vec<bool>,
    uncovered_weight: Vec<f64>,
    value: f64,
}

impl<'a> Coverage<'a> {
    /// Coverage of the base alone.
    pub fn new(samples: &'a LiveSamples, econ: &'a NodeEconomics) -> Self {
        let n = samples.n;
        let reps = samples.replicates();
        let uncovered_weight = (0..n)
            .map(|i| {
                if samples.visible[i] {
                    samples.total_weight
                } else {
                    0.0
                }
            })
            .collect();
        let mut cov = Coverage {
            samples,
            benefit: econ.benefits(),
            covered: vec![false; n * reps],
            uncovered_weight,
            value: 0.0,
        };
        let mut stack = Vec::new();
        for &b in &samples.base {
            for r in 0..reps {
                cov.spread(b, r as u32, &mut stack);
            }
        }
        cov
    }

    #[inline]
    fn is_covered(&self, r: u32, u: NodeId) -> bool {
        self.covered[r as usize * self.samples.n + u.index()]
    }

    fn set_covered(&mut self, r: u32, u: NodeId, on: bool) {
        let idx = r as usize * self.samples.n + u.index();
        if self.covered[idx] == on {
            return;
        }
        self.covered[idx] = on;
        if self.samples.visible[u.index()] {
            let w = self.samples.weights[r as usize];
            let sign = if on { 1.0 } else { -1.0 };
            self.value += sign * w * self.benefit[u.index()];
            self.uncovered_weight[u.index()] -= sign * w;
        }
    }

    fn spread(&mut self, u: NodeId, r: u32, stack: &mut Vec<NodeId>) {
        if self.is_covered(r, u) {
            return;
        }
        self.set_covered(r, u, true);
        stack.push(u);
        while let Some(w) = stack.pop() {
            for &(_, t) in self.samples.out_in_rep(w, r) {
                let t = NodeId(t);
                if !self.is_covered(r, t) {
                    self.set_covered(r, t, true);
                    stack.push(t);
                }
            }
        }
    }

    /// Expected benefit of the covered visible nodes.
    pub fn benefit(&self) -> f64 {
        self.value / self.samples.total_weight
    }

    /// Adds `u` to the seed set.
    pub fn add(&mut self, u: NodeId) {
        let mut stack = Vec::new();
        for r in 0..self.samples.replicates() {
            self.spread(u, r as u32, &mut stack);
        }
    }

    /// Expected benefit that adding `u` would newly cover.
    pub fn gain_of(&self, u: NodeId, scratch: &mut SampleScratch) -> f64 {
        let s = self.samples;
        if !s.visible[u.index()] {
            return 0.0;
        }
        let mut total = self.benefit[u.index()] * self.uncovered_weight[u.index()];
        for (r, edges) in runs(s.out_all(u)) {
            if self.is_covered(r, u) {
                continue;
            }
            let marks = &mut scratch.marks;
            marks.reset();
            marks.mark(u);
            let mut extra = 0.0;
            for &(_, t) in edges {
                let t = NodeId(t);
                if !self.is_covered(r, t) && marks.mark(t) {
                    extra += self.benefit[t.index()];
                    marks.stack.push(t);
                }
            }
            while let Some(w) = marks.stack.pop() {
                for &(_, t) in s.out_in_rep(w, r) {
                    let t = NodeId(t);
                    if !self.is_covered(r, t) && !marks.is_marked(t) {
                        marks.mark(t);
                        extra += self.benefit[t.index()];
                        marks.stack.push(t);
                    }
                }
            }
            total += s.weights[r as usize] * extra;
        }
        total / s.total_weight
    }

    /// Expected benefit lost if seed `u` is withdrawn from the seed set
    /// `in_set` that this coverage represents.
    pub fn loss_of(&self, u: NodeId, in_set: &[bool], scratch: &mut SampleScratch) -> f64 {
        self.withdraw(u, in_set, scratch, None)
    }

    /// Withdraws seed `u`; the caller clears `in_set[u]` afterwards.
    pub fn remove(&mut self, u: NodeId, in_set: &[bool], scratch: &mut SampleScratch) {
        let mut lost = Vec::new();
        self.withdraw(u, in_set, scratch, Some(&mut lost));
        for (r, v) in lost {
            self.set_covered(r, v, false);
        }
    }

    fn withdraw(
        &self,
        u: NodeId,
        in_set: &[bool],
        scratch: &mut SampleScratch,
        mut lost: Option<&mut Vec<(u32, NodeId)>>,
    ) -> f64 {
        let s = self.samples;
        let b = self.benefit;
        let out_reps: Vec<(u32, &[(u32, u32)])> = runs(s.out_all(u)).collect();
        let has_out = |r: u32| out_reps.binary_search_by_key(&r, |&(rep, _)| rep).is_ok();

        // Replicates where `u` has no live out-edge: only `u` itself can be
        // lost, and it is kept iff a covered node has a live edge into it.
        let mut kept = vec![false; 0];
        let mut kept_weight = 0.0;
        let track = lost.is_some();
        if track {
            kept = vec![false; s.replicates()];
        }
        for (r, edges) in runs(s.in_all(u)) {
            if has_out(r) {
                continue;
            }
            if edges.iter().any(|&(_, x)| self.is_covered(r, NodeId(x))) {
                kept_weight += s.weights[r as usize];
                if track {
                    kept[r as usize] = true;
                }
            }
        }
        let out_weight: f64 = out_reps.iter().map(|&(r, _)| s.weights[r as usize]).sum();
        let mut total = if s.visible[u.index()] {
            b[u.index()] * (s.total_weight - kept_weight - out_weight)
        } else {
            0.0
        };
        if let Some(lost) = lost.as_deref_mut() {
            let mut next_out = out_reps.iter().map(|&(r, _)| r).peekable();
            for r in 0..s.replicates() as u32 {
                if next_out.peek() == Some(&r) {
                    next_out.next();
                    continue;
                }
                if !kept[r as usize] && self.is_covered(r, u) {
                    lost.push((r, u));
                }
            }
        }

        // Replicates where `u` spreads: the candidates for loss are the nodes
        // D reachable from `u`. A node of D survives if it is a seed, has a
        // live in-edge from a covered node outside D, or is reached from a
        // survivor inside D.
        for &(r, edges) in &out_reps {
            let SampleScratch {
                marks,
                inside,
                list,
            } = &mut *scratch;
            inside.reset();
            list.clear();
            inside.mark(u);
            list.push(u);
            for &(_, t) in edges {
                if inside.mark(NodeId(t)) {
                    list.push(NodeId(t));
                }
            }
            let mut i = 1;
            while i < list.len() {
                let w = list[i];
                for &(_, t) in s.out_in_rep(w, r) {
                    if inside.mark(NodeId(t)) {
                        list.push(NodeId(t));
                    }
                }
                i += 1;
            }
            marks.reset();
            for &w in list.iter() {
                let survives = (w != u && in_set[w.index()])
                    || s.in_in_rep(w, r).iter().any(|&(_, x)| {
                        !inside.is_marked(NodeId(x)) && self.is_covered(r, NodeId(x))
                    });
                if survives && marks.mark(w) {
                    marks.stack.push(w);
                }
            }
            while let Some(w) = marks.stack.pop() {
                for &(_, t) in s.out_in_rep(w, r) {
                    let t = NodeId(t);
                    if inside.is_marked(t) && marks.mark(t) {
                        marks.stack.push(t);
                    }
                }
            }
            let mut extra = 0.0;
            for &w in list.iter() {
                if !marks.is_marked(w) && self.is_covered(r, w) {
                    if s.visible[w.index()] {
                        extra += b[w.index()];
                    }
                    if let Some(lost) = lost.as_deref_mut() {
                        lost.push((r, w));
                    }
                }
            }
            total += s.weights[r as usize] * extra;
        }
        total / s.total_weight
    }
}
