//! Independent Cascade simulation, partial observation and continuation.
//!
//! Round 0 is the seeding round. In round `k` every node activated in round
//! `k - 1` attempts each out-neighbour that is still inactive at the moment of
//! the attempt, once. Frontiers are processed in ascending node order, so a
//! simulation is a deterministic function of its edge-outcome source.

mod estimate;
mod samples;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeIdx, NodeEconomics, NodeId, SocialNetwork};

pub use estimate::{
    estimate_benefit, estimate_influence, estimate_profit, live_edge, marginal_profit_gain,
    replicate_seed, Estimate,
};
pub use samples::{Coverage, LiveSamples, SampleScratch, SamplingMode, EXACT_EDGE_CAP};

/// An ordered seed set with its cost and the budget it was bought under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSelection {
    pub nodes: Vec<NodeId>,
    pub total_cost: f64,
    pub budget: f64,
}

impl SeedSelection {
    pub fn empty(budget: f64) -> Self {
        SeedSelection {
            nodes: Vec::new(),
            total_cost: 0.0,
            budget,
        }
    }

    /// Validates distinctness and `total_cost <= budget`.
    pub fn from_nodes(nodes: Vec<NodeId>, econ: &NodeEconomics, budget: f64) -> Result<Self> {
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seed set contains a repeated node".into()));
        }
        if let Some(u) = nodes.iter().find(|u| u.index() >= econ.len()) {
            return Err(Error::Config(format!(
                "seed {u} is not a node of the network"
            )));
        }
        let total_cost = econ.set_cost(&nodes);
        if total_cost > budget + budget_slack(budget) {
            return Err(Error::Config(format!(
                "seed cost {total_cost} exceeds budget {budget}"
            )));
        }
        Ok(SeedSelection {
            nodes,
            total_cost,
            budget,
        })
    }

    pub(crate) fn push(&mut self, u: NodeId, cost: f64) {
        self.nodes.push(u);
        self.total_cost += cost;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.nodes.contains(&u)
    }

    /// Unspent budget, never negative.
    pub fn remaining(&self) -> f64 {
        (self.budget - self.total_cost).max(0.0)
    }
}

/// Tolerance for budget comparisons on sums of real costs.
pub(crate) fn budget_slack(budget: f64) -> f64 {
    1e-9 * budget.abs().max(1.0)
}

/// The state of a diffusion after `timestep` rounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialObservation {
    /// A_Y, ascending.
    pub already_active: Vec<NodeId>,
    /// R_Y, ascending: nodes activated in round `timestep` exactly.
    pub recently_active: Vec<NodeId>,
    /// Attempted edges that failed, ascending.
    pub failed_edges: Vec<EdgeIdx>,
    /// Attempted edges that succeeded, ascending.
    pub live_edges: Vec<EdgeIdx>,
    pub timestep: usize,
    /// Rounds in `1..=timestep` that activated at least one node.
    pub rounds: usize,
}

impl PartialObservation {
    pub fn active_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for u in &self.already_active {
            mask[u.index()] = true;
        }
        mask
    }

    pub fn tried_mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for &e in self.failed_edges.iter().chain(&self.live_edges) {
            mask[e] = true;
        }
        mask
    }

    pub fn is_quiescent(&self) -> bool {
        self.recently_active.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffusionOutcome {
    /// Every active node at quiescence, ascending; includes the seeds.
    pub activated: Vec<NodeId>,
    pub rounds: usize,
    pub newly_active_per_round: Vec<Vec<NodeId>>,
    /// Edges attempted by this run, in attempt order.
    pub attempted: Vec<EdgeIdx>,
}

/// Runs IC rounds from `frontier` until quiescence or `max_rounds`.
///
/// `active` must already mark the frontier. `live(e)` is asked once per
/// attempted edge; `skip(e)` suppresses an attempt entirely. Returns the nodes
/// activated in each round that activated anything.
pub(crate) fn cascade(
    net: &SocialNetwork,
    active: &mut [bool],
    mut frontier: Vec<NodeId>,
    max_rounds: usize,
    skip: impl Fn(EdgeIdx) -> bool,
    mut live: impl FnMut(EdgeIdx) -> bool,
    mut record: impl FnMut(EdgeIdx, bool),
) -> Vec<Vec<NodeId>> {
    frontier.sort_unstable();
    let mut rounds = Vec::new();
    while !frontier.is_empty() && rounds.len() < max_rounds {
        let mut next = Vec::new();
        for &u in &frontier {
            for &e in net.out_edges(u) {
                let e = e as EdgeIdx;
                let v = net.edge(e).target;
                if active[v.index()] || skip(e) {
                    continue;
                }
                let ok = live(e);
                record(e, ok);
                if ok {
                    active[v.index()] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        rounds.push(next.clone());
        frontier = next;
        assert!(
            rounds.len() <= net.node_count(),
            "cascade exceeded n rounds"
        );
    }
    rounds
}

fn dedup_seeds(net: &SocialNetwork, seeds: &[NodeId], active: &mut [bool]) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(seeds.len());
    for &s in seeds {
        assert!(s.index() < net.node_count(), "seed {s} outside the network");
        if !active[s.index()] {
            active[s.index()] = true;
            out.push(s);
        }
    }
    out.sort_unstable();
    out
}

fn collect_active(active: &[bool]) -> Vec<NodeId> {
    active
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(i, _)| NodeId::from(i))
        .collect()
}

/// Full IC diffusion from `seeds`, drawing one uniform per attempted edge.
pub fn simulate_ic<R: Rng + ?Sized>(
    network: &SocialNetwork,
    seeds: &[NodeId],
    rng: &mut R,
) -> DiffusionOutcome {
    let mut active = vec![false; network.node_count()];
    let frontier = dedup_seeds(network, seeds, &mut active);
    let mut attempted = Vec::new();
    let rounds = cascade(
        network,
        &mut active,
        frontier,
        usize::MAX,
        |_| false,
        |e| rng.random::<f64>() < network.prob(e),
        |e, _| attempted.push(e),
    );
    DiffusionOutcome {
        activated: collect_active(&active),
        rounds: rounds.len(),
        newly_active_per_round: rounds,
        attempted,
    }
}

/// Runs at most `d` rounds from `seeds` and records what was observed.
pub fn simulate_to_timestep<R: Rng + ?Sized>(
    network: &SocialNetwork,
    seeds: &[NodeId],
    d: usize,
    rng: &mut R,
) -> PartialObservation {
    observe_with(network, seeds, d, |e| rng.random::<f64>() < network.prob(e))
}

/// [`simulate_to_timestep`] with edge outcomes supplied by `live`.
pub(crate) fn observe_with(
    network: &SocialNetwork,
    seeds: &[NodeId],
    d: usize,
    live: impl FnMut(EdgeIdx) -> bool,
) -> PartialObservation {
    let mut active = vec![false; network.node_count()];
    let frontier = dedup_seeds(network, seeds, &mut active);
    let mut failed = Vec::new();
    let mut succeeded = Vec::new();
    let rounds = cascade(
        network,
        &mut active,
        frontier.clone(),
        d,
        |_| false,
        live,
        |e, ok| {
            if ok {
                succeeded.push(e)
            } else {
                failed.push(e)
            }
        },
    );
    let recently_active = if d == 0 {
        frontier
    } else if rounds.len() == d {
        rounds.last().cloned().unwrap_or_default()
    } else {
        Vec::new()
    };
    failed.sort_unstable();
    succeeded.sort_unstable();
    PartialObservation {
        already_active: collect_active(&active),
        recently_active,
        failed_edges: failed,
        live_edges: succeeded,
        timestep: d,
        rounds: rounds.len(),
    }
}

/// Resumes the diffusion behind `observation` with additional seeds.
///
/// The frontier is R_Y plus the extra seeds that are not yet active; already
/// attempted edges are never attempted again.
pub fn continue_diffusion<R: Rng + ?Sized>(
    network: &SocialNetwork,
    observation: &PartialObservation,
    extra_seeds: &[NodeId],
    rng: &mut R,
) -> DiffusionOutcome {
    continue_with(
        network,
        observation,
        extra_seeds,
        |e| rng.random::<f64>() < network.prob(e),
        |_, _| {},
    )
}

pub(crate) fn continue_with(
    network: &SocialNetwork,
    observation: &PartialObservation,
    extra_seeds: &[NodeId],
    live: impl FnMut(EdgeIdx) -> bool,
    mut record: impl FnMut(EdgeIdx, bool),
) -> DiffusionOutcome {
    let mut active = observation.active_mask(network.node_count());
    let tried = observation.tried_mask(network.edge_count());
    let mut frontier = dedup_seeds(network, extra_seeds, &mut active);
    frontier.extend_from_slice(&observation.recently_active);
    let mut attempted = Vec::new();
    let rounds = cascade(
        network,
        &mut active,
        frontier,
        usize::MAX,
        |e| tried[e],
        live,
        |e, ok| {
            attempted.push(e);
            record(e, ok)
        },
    );
    DiffusionOutcome {
        activated: collect_active(&active),
        rounds: rounds.len(),
        newly_active_per_round: rounds,
        attempted,
    }
}
