//! Exact evaluation by enumerating every live graph of a small network.

mod instances;
mod lemmas;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diffusion::{budget_slack, observe_with, PartialObservation};
use crate::error::{Error, Result};
use crate::graph::{NodeEconomics, NodeId, SocialNetwork};

pub use instances::{figure1, figure2a, figure2b, figure3a, random_small_instance, PaperInstance};
pub use lemmas::{
    check_subadditivity, find_nonmonotone_witness, find_nonsubmodular_witness, verify_sign_lemma,
    ModularityWitness, MonotonicityWitness, NamedSetting, ObjectiveCache, ObjectiveSetting,
    SignEvaluation, SignReport, SubadditivityReport, SubadditivityViolation, SubmodularityReport,
};

/// Largest edge count the oracle enumerates (2^m live graphs).
pub const ENUMERATION_CAP: usize = 22;
/// Largest candidate pool for the brute-force phase-two search.
pub const SUBSET_CAP: usize = 20;

/// A live graph: bit `e` set iff edge `e` is present.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct LiveGraph {
    pub edge_mask: u64,
}

impl LiveGraph {
    pub fn new(edge_mask: u64) -> Self {
        LiveGraph { edge_mask }
    }

    /// The live graph containing exactly `edges`.
    pub fn from_edges(edges: &[usize]) -> Self {
        LiveGraph {
            edge_mask: edges.iter().fold(0, |m, &e| m | 1 << e),
        }
    }

    #[inline]
    pub fn contains(self, e: usize) -> bool {
        self.edge_mask >> e & 1 == 1
    }

    pub fn edges(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&e| self.contains(e))
    }
}

fn check_enumerable(network: &SocialNetwork) -> Result<()> {
    network.require_probabilities()?;
    if network.edge_count() > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            what: "edge count",
            got: network.edge_count(),
            cap: ENUMERATION_CAP,
        });
    }
    if network.node_count() > 64 {
        return Err(Error::EnumerationCap {
            what: "node count",
            got: network.node_count(),
            cap: 64,
        });
    }
    Ok(())
}

/// P(G): product of p(e) over present edges and 1 − p(e) over absent ones.
pub fn live_graph_probability(network: &SocialNetwork, g: LiveGraph) -> f64 {
    (0..network.edge_count())
        .map(|e| {
            if g.contains(e) {
                network.prob(e)
            } else {
                1.0 - network.prob(e)
            }
        })
        .product()
}

/// Nodes reachable from `seeds` using only the edges of `g`, ascending.
pub fn exact_reachable(network: &SocialNetwork, g: LiveGraph, seeds: &[NodeId]) -> Vec<NodeId> {
    let mut seen = vec![false; network.node_count()];
    let mut stack: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !seen[s.index()] {
            seen[s.index()] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &e in network.out_edges(u) {
            let v = network.edge(e as usize).target;
            if g.contains(e as usize) && !seen[v.index()] {
                seen[v.index()] = true;
                stack.push(v);
            }
        }
    }
    (0..network.node_count())
        .filter(|&i| seen[i])
        .map(NodeId::from)
        .collect()
}

/// Live-graph adjacency as node bitsets, for fast repeated reachability.
struct BitGraph {
    out: Vec<u64>,
}

impl BitGraph {
    fn new(network: &SocialNetwork, g: LiveGraph) -> Self {
        let mut out = vec![0u64; network.node_count()];
        for (e, edge) in network.edges().iter().enumerate() {
            if g.contains(e) {
                out[edge.source.index()] |= 1 << edge.target.0;
            }
        }
        BitGraph { out }
    }

    fn reach(&self, seeds: u64) -> u64 {
        let mut seen = seeds;
        let mut frontier = seeds;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let u = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.out[u];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen
    }
}

fn node_mask(nodes: &[NodeId]) -> u64 {
    nodes.iter().fold(0, |m, u| m | 1 << u.0)
}

fn mask_nodes(mask: u64) -> Vec<NodeId> {
    (0..64u32)
        .filter(|&i| mask >> i & 1 == 1)
        .map(NodeId)
        .collect()
}

fn mask_sum(mask: u64, values: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut m = mask;
    while m != 0 {
        let u = m.trailing_zeros() as usize;
        m &= m - 1;
        total += values[u];
    }
    total
}

/// φ(S) = Σ_G P(G)·b(reach_G(S)) − C(S), by full enumeration.
pub fn exact_profit(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    seeds: &[NodeId],
) -> Result<f64> {
    check_enumerable(network)?;
    econ.check_against(network)?;
    let seed_mask = node_mask(seeds);
    let benefit: f64 = (0..1u64 << network.edge_count())
        .map(|mask| {
            let g = LiveGraph::new(mask);
            live_graph_probability(network, g)
                * mask_sum(BitGraph::new(network, g).reach(seed_mask), econ.benefits())
        })
        .sum();
    Ok(benefit - mask_sum(seed_mask, econ.costs()))
}

/// Phase budgets of the two-phase problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBudgets {
    pub phase_one: f64,
    pub phase_two: f64,
}

impl PhaseBudgets {
    /// B₁ = ratio·B and B₂ = B − B₁.
    pub fn split(total: f64, ratio: f64) -> Self {
        let phase_one = ratio * total;
        PhaseBudgets {
            phase_one,
            phase_two: total - phase_one,
        }
    }

    pub fn total(&self) -> f64 {
        self.phase_one + self.phase_two
    }

    /// Phase-two budget after a phase-one spend of `spent`, with the unspent
    /// phase-one budget carried over.
    pub fn carried(&self, spent: f64) -> f64 {
        (self.total() - spent).max(0.0)
    }
}

/// One live graph's line in the objective table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveRow {
    pub graph: LiveGraph,
    pub probability: f64,
    pub already_active: Vec<NodeId>,
    pub recently_active: Vec<NodeId>,
    pub s2: Vec<NodeId>,
    /// C(S₁ ∪ S₂).
    pub cost: f64,
    /// b(reach_G(S₁ ∪ S₂)).
    pub benefit: f64,
    /// φ^G(S₁ ∪ S₂).
    pub profit: f64,
    /// P(G)·φ^G(S₁ ∪ S₂).
    pub contribution: f64,
}

/// The live graphs sharing one partial observation Y.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservationGroup {
    pub key: PartialObservation,
    /// P(Y).
    pub probability: f64,
    pub graphs: Vec<LiveGraph>,
    /// The optimal phase-two seed set for Y.
    pub s2: Vec<NodeId>,
    /// E[φ^G(S₁ ∪ S₂) | Y].
    pub conditional_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoPhaseEvaluation {
    pub s1: Vec<NodeId>,
    pub timestep: usize,
    pub phase_two_budget: f64,
    /// Σ_G P(G)·φ^G(S₁ ∪ S₂*(Y(G))).
    pub value: f64,
    /// Σ_Y P(Y)·E[φ | Y]; equal to `value` up to rounding.
    pub grouped_value: f64,
    pub groups: Vec<ObservationGroup>,
    /// One row per live graph, in mask order.
    pub rows: Vec<ObjectiveRow>,
}

/// The two-phase objective f(S₁) by enumeration.
///
/// Live graphs are grouped by the observation after `d` rounds from `s1`.
/// For each group the phase-two set S₂ ⊆ V ∖ A_Y with
/// C(S₂) ≤ B − C(S₁) maximizing the conditional expected profit is found by
/// brute force (∅ allowed; ties go to the lexicographically smallest set).
pub fn exact_two_phase_objective(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    s1: &[NodeId],
    d: usize,
    budgets: PhaseBudgets,
) -> Result<TwoPhaseEvaluation> {
    check_enumerable(network)?;
    econ.check_against(network)?;
    let mut s1: Vec<NodeId> = s1.to_vec();
    s1.sort_unstable();
    s1.dedup();
    let s1_mask = node_mask(&s1);
    let s1_cost = mask_sum(s1_mask, econ.costs());
    let budget2 = budgets.carried(s1_cost);
    let slack = budget_slack(budget2);
    let m = network.edge_count();

    let mut groups: BTreeMap<PartialObservation, Vec<(u64, f64)>> = BTreeMap::new();
    for mask in 0..1u64 << m {
        let g = LiveGraph::new(mask);
        let key = observe_with(network, &s1, d, |e| g.contains(e));
        groups
            .entry(key)
            .or_default()
            .push((mask, live_graph_probability(network, g)));
    }

    let mut out_groups = Vec::with_capacity(groups.len());
    let mut rows = Vec::with_capacity(1 << m);
    let mut grouped_value = 0.0;
    for (key, members) in groups {
        let active = node_mask(&key.already_active);
        let candidates: Vec<NodeId> = network.nodes().filter(|u| active >> u.0 & 1 == 0).collect();
        if candidates.len() > SUBSET_CAP {
            return Err(Error::EnumerationCap {
                what: "phase-two candidate count",
                got: candidates.len(),
                cap: SUBSET_CAP,
            });
        }
        let graphs: Vec<(BitGraph, f64)> = members
            .iter()
            .map(|&(mask, p)| (BitGraph::new(network, LiveGraph::new(mask)), p))
            .collect();
        let p_y: f64 = members.iter().map(|&(_, p)| p).sum();

        let value_of = |s2_mask: u64| -> f64 {
            let cost = s1_cost + mask_sum(s2_mask, econ.costs());
            graphs
                .iter()
                .map(|(bg, p)| p * (mask_sum(bg.reach(s1_mask | s2_mask), econ.benefits()) - cost))
                .sum()
        };
        let mut best_mask = 0u64;
        let mut best_value = value_of(0);
        let mut best_nodes: Vec<NodeId> = Vec::new();
        for sub in 1..1u64 << candidates.len() {
            let s2_mask = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| sub >> i & 1 == 1)
                .fold(0, |m, (_, u)| m | 1 << u.0);
            if mask_sum(s2_mask, econ.costs()) > budget2 + slack {
                continue;
            }
            let v = value_of(s2_mask);
            let tol = 1e-12 * v.abs().max(best_value.abs()).max(1.0);
            let nodes = mask_nodes(s2_mask);
            if v > best_value + tol || (v >= best_value - tol && nodes < best_nodes) {
                best_mask = s2_mask;
                best_value = v;
                best_nodes = nodes;
            }
        }

        let total_cost = s1_cost + mask_sum(best_mask, econ.costs());
        for (&(mask, p), (bg, _)) in members.iter().zip(&graphs) {
            let benefit = mask_sum(bg.reach(s1_mask | best_mask), econ.benefits());
            let profit = benefit - total_cost;
            rows.push(ObjectiveRow {
                graph: LiveGraph::new(mask),
                probability: p,
                already_active: key.already_active.clone(),
                recently_active: key.recently_active.clone(),
                s2: best_nodes.clone(),
                cost: total_cost,
                benefit,
                profit,
                contribution: p * profit,
            });
        }
        let conditional_value = if p_y > 0.0 { best_value / p_y } else { 0.0 };
        grouped_value += p_y * conditional_value;
        out_groups.push(ObservationGroup {
            key,
            probability: p_y,
            graphs: members
                .iter()
                .map(|&(mask, _)| LiveGraph::new(mask))
                .collect(),
            s2: best_nodes,
            conditional_value,
        });
    }
    rows.sort_by_key(|r| r.graph);
    let value = rows.iter().map(|r| r.contribution).sum();
    Ok(TwoPhaseEvaluation {
        s1,
        timestep: d,
        phase_two_budget: budget2,
        value,
        grouped_value,
        groups: out_groups,
        rows,
    })
}

/// Formats a node set with `labels`, e.g. `u1 u3`; `-` when empty.
pub fn format_nodes(nodes: &[NodeId], labels: &[String]) -> String {
    if nodes.is_empty() {
        return "-".into();
    }
    nodes
        .iter()
        .map(|u| label(labels, *u))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Formats a live graph as its edge list, e.g. `u1u3 u2u5`; `{}` when empty.
pub fn format_live_graph(network: &SocialNetwork, g: LiveGraph, labels: &[String]) -> String {
    let parts: Vec<String> = (0..network.edge_count())
        .filter(|&e| g.contains(e))
        .map(|e| {
            let edge = network.edge(e);
            format!(
                "{}{}",
                label(labels, edge.source),
                label(labels, edge.target)
            )
        })
        .collect();
    if parts.is_empty() {
        "{}".into()
    } else {
        parts.join(" ")
    }
}

fn label(labels: &[String], u: NodeId) -> String {
    labels
        .get(u.index())
        .cloned()
        .unwrap_or_else(|| u.to_string())
}

/// Writes the per-live-graph table as CSV with a final total row.
pub fn write_objective_csv<W: Write>(
    network: &SocialNetwork,
    eval: &TwoPhaseEvaluation,
    labels: &[String],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "live_graph",
        "probability",
        "s1",
        "already_active",
        "recently_active",
        "s2",
        "cost",
        "benefit",
        "profit",
        "contribution",
    ])?;
    let s1 = format_nodes(&eval.s1, labels);
    for r in &eval.rows {
        w.write_record([
            format_live_graph(network, r.graph, labels),
            format!("{}", r.probability),
            s1.clone(),
            format_nodes(&r.already_active, labels),
            format_nodes(&r.recently_active, labels),
            format_nodes(&r.s2, labels),
            format!("{}", r.cost),
            format!("{}", r.benefit),
            format!("{}", r.profit),
            format!("{}", r.contribution),
        ])?;
    }
    w.write_record([
        "total",
        "1",
        &s1,
        "",
        "",
        "",
        "",
        "",
        "",
        &format!("{}", eval.value),
    ])?;
    w.flush()?;
    Ok(())
}
