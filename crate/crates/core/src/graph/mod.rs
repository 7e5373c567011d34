//! Directed probabilistic social networks and per-node economics.

mod assign;
mod ingest;
mod instance;
mod view;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assign::{assign_economics, assign_weights, AssignmentSpec, Weighting, TRIVALENCY};
pub use ingest::{ingest_edge_list, parse_edge_list, IngestOptions, IngestReport, Ingested};
pub use instance::{Instance, InstanceMeta};
pub use view::ResidualView;

/// Dense node index, `0 <= id < n` for the owning network.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into [`SocialNetwork::edges`].
pub type EdgeIdx = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
}

/// A simple directed graph with an influence probability on every edge.
///
/// Edge indices are stable: they follow insertion order and are what live-graph
/// masks, observations and estimator coins refer to. Adjacency is kept in CSR
/// form in both directions.
#[derive(Clone, Debug)]
pub struct SocialNetwork {
    n: usize,
    edges: Vec<Edge>,
    probs: Option<Vec<f64>>,
    out_offsets: Vec<usize>,
    out_list: Vec<u32>,
    in_offsets: Vec<usize>,
    in_list: Vec<u32>,
}

impl SocialNetwork {
    /// Builds a network without probabilities. Rejects out-of-range ids,
    /// self-loops and duplicate edges.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let edges = pairs
            .into_iter()
            .map(|(s, t)| Edge {
                source: NodeId(s),
                target: NodeId(t),
            })
            .collect();
        Self::build(n, edges, None)
    }

    pub fn from_weighted_edges<I>(n: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let (edges, probs): (Vec<_>, Vec<_>) = triples
            .into_iter()
            .map(|(s, t, p)| {
                (
                    Edge {
                        source: NodeId(s),
                        target: NodeId(t),
                    },
                    p,
                )
            })
            .unzip();
        Self::build(n, edges, Some(probs))
    }

    fn build(n: usize, edges: Vec<Edge>, probs: Option<Vec<f64>>) -> Result<Self> {
        if u32::try_from(n).is_err() {
            return Err(Error::InvalidGraph(format!(
                "{n} nodes do not fit a u32 index"
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.source.index() >= n || e.target.index() >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a node outside 0..{n}",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on node {}",
                    e.source
                )));
            }
            if !seen.insert((e.source, e.target)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.source, e.target
                )));
            }
        }
        if let Some(p) = &probs {
            check_probabilities(&edges, p)?;
        }

        let (out_offsets, out_list) = csr(n, edges.iter().map(|e| e.source.index()));
        let (in_offsets, in_list) = csr(n, edges.iter().map(|e| e.target.index()));
        Ok(SocialNetwork {
            n,
            edges,
            probs,
            out_offsets,
            out_list,
            in_offsets,
            in_list,
        })
    }

    /// Replaces the edge probabilities (one per edge, in edge order).
    pub fn with_probabilities(mut self, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != self.edges.len() {
            return Err(Error::InvalidGraph(format!(
                "{} probabilities for {} edges",
                probs.len(),
                self.edges.len()
            )));
        }
        check_probabilities(&self.edges, &probs)?;
        self.probs = Some(probs);
        Ok(self)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).map(NodeId::from)
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: EdgeIdx) -> Edge {
        self.edges[e]
    }

    pub fn is_weighted(&self) -> bool {
        self.probs.is_some()
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }

    /// Probabilities, or [`Error::Unweighted`] when they were never assigned.
    pub fn require_probabilities(&self) -> Result<&[f64]> {
        self.probs.as_deref().ok_or(Error::Unweighted)
    }

    /// Probability of edge `e`.
    ///
    /// Panics if probabilities were never assigned; simulation entry points
    /// require a weighted network.
    #[inline]
    pub fn prob(&self, e: EdgeIdx) -> f64 {
        self.probs
            .as_ref()
            .expect("edge probabilities have not been assigned")[e]
    }

    /// Outgoing edge indices of `u`, ascending.
    #[inline]
    pub fn out_edges(&self, u: NodeId) -> &[u32] {
        &self.out_list[self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]]
    }

    /// Incoming edge indices of `u`, ascending.
    #[inline]
    pub fn in_edges(&self, u: NodeId) -> &[u32] {
        &self.in_list[self.in_offsets[u.index()]..self.in_offsets[u.index() + 1]]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_edges(u).len()
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_edges(u).len()
    }

    pub fn find_edge(&self, source: NodeId, target: NodeId) -> Option<EdgeIdx> {
        self.out_edges(source)
            .iter()
            .map(|&e| e as EdgeIdx)
            .find(|&e| self.edges[e].target == target)
    }

    pub fn mean_probability(&self) -> Option<f64> {
        let p = self.probs.as_ref()?;
        (!p.is_empty()).then(|| p.iter().sum::<f64>() / p.len() as f64)
    }
}

fn check_probabilities(edges: &[Edge], probs: &[f64]) -> Result<()> {
    for (e, &p) in edges.iter().zip(probs) {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Probability(e.source.0, e.target.0, p));
        }
    }
    Ok(())
}

fn csr(n: usize, keys: impl Iterator<Item = usize> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut list = vec![0u32; offsets[n]];
    for (e, k) in keys.enumerate() {
        list[fill[k]] = e as u32;
        fill[k] += 1;
    }
    (offsets, list)
}

/// Per-node selection cost and benefit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEconomics {
    cost: Vec<f64>,
    benefit: Vec<f64>,
}

impl NodeEconomics {
    pub fn new(cost: Vec<f64>, benefit: Vec<f64>) -> Result<Self> {
        if cost.len() != benefit.len() {
            return Err(Error::Economics(format!(
                "{} costs but {} benefits",
                cost.len(),
                benefit.len()
            )));
        }
        if let Some((u, c)) = cost
            .iter()
            .enumerate()
            .find(|(_, &c)| !(c > 0.0 && c.is_finite()))
        {
            return Err(Error::Economics(format!(
                "cost of node {u} is {c}, must be positive"
            )));
        }
        if let Some((u, b)) = benefit
            .iter()
            .enumerate()
            .find(|(_, &b)| !(b >= 0.0 && b.is_finite()))
        {
            return Err(Error::Economics(format!(
                "benefit of node {u} is {b}, must be non-negative"
            )));
        }
        Ok(NodeEconomics { cost, benefit })
    }

    /// Checks that the vectors cover exactly the nodes of `network`.
    pub fn check_against(&self, network: &SocialNetwork) -> Result<()> {
        if self.cost.len() != network.node_count() {
            return Err(Error::Economics(format!(
                "economics cover {} nodes, network has {}",
                self.cost.len(),
                network.node_count()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    #[inline]
    pub fn cost(&self, u: NodeId) -> f64 {
        self.cost[u.index()]
    }

    #[inline]
    pub fn benefit(&self, u: NodeId) -> f64 {
        self.benefit[u.index()]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn benefits(&self) -> &[f64] {
        &self.benefit
    }

    /// C(S) = sum of node costs.
    pub fn set_cost(&self, nodes: &[NodeId]) -> f64 {
        nodes.iter().map(|&u| self.cost(u)).sum()
    }

    pub fn set_benefit(&self, nodes: &[NodeId]) -> f64 {
        nodes.iter().map(|&u| self.benefit(u)).sum()
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.cost.iter().copied().reduce(f64::min)
    }

    pub fn mean_cost(&self) -> Option<f64> {
        (!self.cost.is_empty()).then(|| self.cost.iter().sum::<f64>() / self.cost.len() as f64)
    }
}
