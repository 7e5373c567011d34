//! The two-phase protocol and its single-phase counterpart.
//!
//! Phase one buys S₁ under B₁ and lets it spread for `timestep` rounds.
//! Phase two sees the partial observation, buys S₂ among the still inactive
//! nodes under B₂ plus whatever phase one left unspent, and the diffusion
//! runs to quiescence without retrying any attempted edge.
//!
//! Replication `r` realizes its edges with the coins of
//! `derive(world_seed, [r, "world"])`. Single-phase runs with the same world
//! seed see the same worlds, which makes the two modes directly comparable.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    budget_slack, cascade, continue_with, live_edge, observe_with, Estimate, PartialObservation,
    SeedSelection,
};
use crate::error::{Error, Result};
use crate::graph::{NodeEconomics, NodeId, ResidualView, SocialNetwork};
use crate::oracle::PhaseBudgets;
use crate::rng;
use crate::selection::{select, AlgorithmChoice, Estimator, SelectionContext, SelectionStats};

/// How phase-two seeds are chosen across replications.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTwoMode {
    /// Re-select S₂ for every observed Y.
    #[default]
    PerReplication,
    /// Select S₂ once, on the observation of replication 0, and reuse it;
    /// nodes already active in a later replication are not bought.
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseConfig {
    pub total_budget: f64,
    /// B₁ / B.
    pub split_ratio: f64,
    pub timestep: usize,
    pub algorithm: AlgorithmChoice,
    pub estimator: Estimator,
    pub replications: usize,
    /// Seed of the selection substreams.
    pub master_seed: u64,
    /// Seed of the realized worlds.
    pub world_seed: u64,
    pub phase_two: PhaseTwoMode,
}

impl TwoPhaseConfig {
    pub fn new(
        total_budget: f64,
        split_ratio: f64,
        timestep: usize,
        algorithm: AlgorithmChoice,
    ) -> Self {
        TwoPhaseConfig {
            total_budget,
            split_ratio,
            timestep,
            algorithm,
            estimator: Estimator::default(),
            replications: 50,
            master_seed: 0,
            world_seed: 0,
            phase_two: PhaseTwoMode::PerReplication,
        }
    }

    /// Sets both the selection and the world seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.world_seed = seed;
        self
    }

    pub fn budgets(&self) -> PhaseBudgets {
        PhaseBudgets::split(self.total_budget, self.split_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if !(self.total_budget >= 0.0 && self.total_budget.is_finite()) {
            return Err(Error::Config(format!(
                "budget must be non-negative, got {}",
                self.total_budget
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        self.algorithm.validate()
    }
}

/// Sizes of a partial observation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSummary {
    pub already_active: usize,
    pub recently_active: usize,
    pub failed_edges: usize,
    pub live_edges: usize,
}

impl From<&PartialObservation> for ObservationSummary {
    fn from(obs: &PartialObservation) -> Self {
        ObservationSummary {
            already_active: obs.already_active.len(),
            recently_active: obs.recently_active.len(),
            failed_edges: obs.failed_edges.len(),
            live_edges: obs.live_edges.len(),
        }
    }
}

/// One replication of the two-phase protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub profit: f64,
    pub observation: ObservationSummary,
    pub s2: SeedSelection,
    pub final_active: usize,
    pub rounds_phase1: usize,
    pub rounds_total: usize,
    /// Edges attempted in either phase, each counted once.
    pub attempts: usize,
}

/// Seconds spent per stage; per-replication stages are summed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub phase_one_selection: f64,
    pub phase_two_selection: f64,
    pub diffusion: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseResult {
    pub budgets: PhaseBudgets,
    pub s1: SeedSelection,
    pub s1_stats: SelectionStats,
    pub realized_profit: Estimate,
    /// Same algorithm with the full budget in one phase, same worlds.
    pub single_phase: Option<SinglePhaseResult>,
    pub replications: Vec<Replication>,
    pub phase_two: PhaseTwoMode,
    pub wall_times: StageTimes,
}

impl TwoPhaseResult {
    pub fn last(&self) -> &Replication {
        self.replications.last().expect("at least one replication")
    }

    pub fn mean_seed_count(&self) -> f64 {
        let total: usize = self.replications.iter().map(|r| r.s2.len()).sum();
        self.s1.len() as f64 + total as f64 / self.replications.len() as f64
    }

    pub fn mean_rounds(&self) -> f64 {
        self.replications
            .iter()
            .map(|r| r.rounds_total as f64)
            .sum::<f64>()
            / self.replications.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePhaseResult {
    pub selection: SeedSelection,
    pub stats: SelectionStats,
    pub profit: Estimate,
    pub mean_rounds: f64,
    pub wall_time: f64,
}

fn world(world_seed: u64, r: usize) -> u64 {
    rng::derive(world_seed, &[r as u64, rng::tag("world")])
}

fn check_inputs(network: &SocialNetwork, econ: &NodeEconomics) -> Result<()> {
    network.require_probabilities()?;
    econ.check_against(network)
}

/// One selection under the full budget, diffused in each of `replications`
/// worlds.
#[allow(clippy::too_many_arguments)]
pub fn run_single_phase(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    budget: f64,
    algorithm: AlgorithmChoice,
    estimator: Estimator,
    replications: usize,
    master_seed: u64,
    world_seed: u64,
) -> Result<SinglePhaseResult> {
    check_inputs(network, econ)?;
    if replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let start = Instant::now();
    let ctx = SelectionContext::new(ResidualView::full(network), econ, budget)
        .with_estimator(estimator)
        .with_seed(rng::derive(master_seed, &[rng::tag("single-select")]));
    let chosen = select(&ctx, algorithm)?;
    let seeds = &chosen.selection.nodes;
    let cost = chosen.selection.total_cost;
    let runs: Vec<(f64, usize)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let w = world(world_seed, r);
            let mut active = vec![false; network.node_count()];
            let mut frontier = Vec::with_capacity(seeds.len());
            for &s in seeds {
                if !active[s.index()] {
                    active[s.index()] = true;
                    frontier.push(s);
                }
            }
            let rounds = cascade(
                network,
                &mut active,
                frontier,
                usize::MAX,
                |_| false,
                |e| live_edge(network, w, e),
                |_, _| {},
            );
            let benefit: f64 = active
                .iter()
                .enumerate()
                .filter(|(_, &a)| a)
                .map(|(i, _)| econ.benefit(NodeId::from(i)))
                .sum();
            (benefit - cost, rounds.len())
        })
        .collect();
    let profits: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mean_rounds = runs.iter().map(|r| r.1 as f64).sum::<f64>() / replications as f64;
    Ok(SinglePhaseResult {
        selection: chosen.selection,
        stats: chosen.stats,
        profit: Estimate::from_values(&profits),
        mean_rounds,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs the two-phase protocol; with `with_single`, also the single-phase
/// baseline under the same worlds.
pub fn run_two_phase(
    network: &SocialNetwork,
    econ: &NodeEconomics,
    config: &TwoPhaseConfig,
    with_single: bool,
) -> Result<TwoPhaseResult> {
    config.validate()?;
    check_inputs(network, econ)?;
    let start = Instant::now();
    let budgets = config.budgets();
    let seed = config.master_seed;

    let ctx1 = SelectionContext::new(ResidualView::full(network), econ, budgets.phase_one)
        .with_estimator(config.estimator)
        .with_seed(rng::derive(seed, &[rng::tag("phase1-select")]));
    let first = select(&ctx1, config.algorithm)?;
    let s1 = first.selection;
    let phase_one_selection = start.elapsed().as_secs_f64();
    let budget2 = budgets.carried(s1.total_cost);

    let observe = |r: usize| {
        let w = world(config.world_seed, r);
        observe_with(network, &s1.nodes, config.timestep, |e| {
            live_edge(network, w, e)
        })
    };
    let choose_s2 = |obs: &PartialObservation, select_seed: u64| -> Result<SeedSelection> {
        let ctx = SelectionContext::new(
            ResidualView::new(network, obs.already_active.iter().copied()),
            econ,
            budget2,
        )
        .with_estimator(config.estimator)
        .with_seed(select_seed)
        .with_evidence(
            obs.recently_active.clone(),
            obs.tried_mask(network.edge_count()),
        );
        Ok(select(&ctx, config.algorithm)?.selection)
    };
    let frozen = match config.phase_two {
        PhaseTwoMode::PerReplication => None,
        PhaseTwoMode::Frozen => Some(choose_s2(
            &observe(0),
            rng::derive(seed, &[rng::tag("phase2-select")]),
        )?),
    };

    let reps: Vec<(Replication, f64, f64)> = (0..config.replications)
        .into_par_iter()
        .map(|r| -> Result<(Replication, f64, f64)> {
            let t0 = Instant::now();
            let obs = observe(r);
            let t1 = Instant::now();
            let s2 = match &frozen {
                None => choose_s2(
                    &obs,
                    rng::derive(seed, &[r as u64, rng::tag("phase2-select")]),
                )?,
                Some(f) => {
                    let active = obs.active_mask(network.node_count());
                    let nodes: Vec<NodeId> = f
                        .nodes
                        .iter()
                        .copied()
                        .filter(|u| !active[u.index()])
                        .collect();
                    SeedSelection::from_nodes(nodes, econ, budget2)?
                }
            };
            let t2 = Instant::now();
            debug_assert!(s2
                .nodes
                .iter()
                .all(|u| obs.already_active.binary_search(u).is_err()));
            assert!(s2.total_cost <= budget2 + budget_slack(budgets.total()));
            let w = world(config.world_seed, r);
            let outcome = continue_with(
                network,
                &obs,
                &s2.nodes,
                |e| live_edge(network, w, e),
                |_, _| {},
            );
            let attempts = obs.failed_edges.len() + obs.live_edges.len() + outcome.attempted.len();
            let benefit = econ.set_benefit(&outcome.activated);
            let rep = Replication {
                profit: benefit - s1.total_cost - s2.total_cost,
                observation: ObservationSummary::from(&obs),
                final_active: outcome.activated.len(),
                rounds_phase1: obs.rounds,
                rounds_total: obs.rounds + outcome.rounds,
                attempts,
                s2,
            };
            let diffusion = (t1 - t0).as_secs_f64() + t2.elapsed().as_secs_f64();
            Ok((rep, (t2 - t1).as_secs_f64(), diffusion))
        })
        .collect::<Result<_>>()?;

    let profits: Vec<f64> = reps.iter().map(|r| r.0.profit).collect();
    let mut wall_times = StageTimes {
        phase_one_selection,
        phase_two_selection: reps.iter().map(|r| r.1).sum(),
        diffusion: reps.iter().map(|r| r.2).sum(),
        total: 0.0,
    };
    wall_times.total = start.elapsed().as_secs_f64();
    let single_phase = if with_single {
        Some(run_single_phase(
            network,
            econ,
            config.total_budget,
            config.algorithm,
            config.estimator,
            config.replications,
            seed,
            config.world_seed,
        )?)
    } else {
        None
    };
    Ok(TwoPhaseResult {
        budgets,
        s1,
        s1_stats: first.stats,
        realized_profit: Estimate::from_values(&profits),
        single_phase,
        replications: reps.into_iter().map(|r| r.0).collect(),
        phase_two: config.phase_two,
        wall_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_two_phase_objective, figure3a};

    #[test]
    fn split_must_be_proper() {
        let inst = figure3a();
        for ratio in [0.0, 1.0, 1.5] {
            let cfg = TwoPhaseConfig::new(3.0, ratio, 1, AlgorithmChoice::HighDegree);
            assert!(run_two_phase(&inst.network, &inst.econ, &cfg, false).is_err());
        }
    }

    #[test]
    fn zero_budget_single_phase_is_zero() {
        let inst = figure3a();
        let out = run_single_phase(
            &inst.network,
            &inst.econ,
            0.0,
            AlgorithmChoice::SimpleGreedy,
            Estimator::Exact,
            10,
            1,
            1,
        )
        .unwrap();
        assert!(out.selection.is_empty());
        assert_eq!(out.profit.mean, 0.0);
    }

    #[test]
    fn isolated_nodes_profit_is_deterministic() {
        let g =
            SocialNetwork::from_weighted_edges(3, std::iter::empty::<(u32, u32, f64)>()).unwrap();
        let e = NodeEconomics::new(vec![1.0, 2.0, 4.0], vec![3.0, 5.0, 1.0]).unwrap();
        let out = run_single_phase(
            &g,
            &e,
            10.0,
            AlgorithmChoice::SimpleGreedy,
            Estimator::Exact,
            5,
            0,
            0,
        )
        .unwrap();
        assert_eq!(out.profit.mean, 5.0);
        assert_eq!(out.profit.stderr, 0.0);
    }

    #[test]
    fn tiny_split_defers_everything() {
        // B₁ below every cost: S₁ = ∅ and phase two gets the whole budget.
        let inst = figure3a();
        let cfg = TwoPhaseConfig {
            replications: 20,
            ..TwoPhaseConfig::new(3.0, 0.1, 2, AlgorithmChoice::SimpleGreedy)
        }
        .with_seed(3);
        let cfg = TwoPhaseConfig {
            estimator: Estimator::Exact,
            ..cfg
        };
        let out = run_two_phase(&inst.network, &inst.econ, &cfg, true).unwrap();
        assert!(out.s1.is_empty());
        for rep in &out.replications {
            assert_eq!(rep.observation.already_active, 0);
            assert!(rep.s2.total_cost <= 3.0 + 1e-9);
        }
        let single = out.single_phase.clone().unwrap();
        assert_eq!(out.last().s2.nodes, single.selection.nodes);
        assert!((out.realized_profit.mean - single.profit.mean).abs() < 1e-12);
    }

    #[test]
    fn exact_estimator_matches_oracle_objective() {
        let inst = figure3a();
        let cfg = TwoPhaseConfig {
            estimator: Estimator::Exact,
            replications: 100_000,
            ..TwoPhaseConfig::new(3.0, 2.0 / 3.0, 1, AlgorithmChoice::SimpleGreedy)
        }
        .with_seed(11);
        let out = run_two_phase(&inst.network, &inst.econ, &cfg, false).unwrap();
        let exact =
            exact_two_phase_objective(&inst.network, &inst.econ, &out.s1.nodes, 1, out.budgets)
                .unwrap();
        let est = out.realized_profit;
        assert!(
            (est.mean - exact.value).abs() <= 3.0 * est.stderr,
            "S1 {:?}: simulated {} ± {}, exact {}",
            out.s1.nodes,
            est.mean,
            est.stderr,
            exact.value
        );
    }
}
