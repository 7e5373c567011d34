use std::io::Cursor;
use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{contract_violations, Case};
use tppm::diffusion::{continue_diffusion, estimate_profit, simulate_ic, simulate_to_timestep};
use tppm::graph::{
    assign_weights, parse_edge_list, AssignmentSpec, IngestOptions, Weighting, TRIVALENCY,
};
use tppm::oracle::{exact_two_phase_objective, live_graph_probability, LiveGraph, PhaseBudgets};
use tppm::selection::{select, AlgorithmChoice, Estimator, SelectionContext};
use tppm::two_phase::{run_two_phase, TwoPhaseConfig};
use tppm::{NodeId, ResidualView, SocialNetwork};

fn seeds_from(mask: u16, n: usize) -> Vec<NodeId> {
    (0..n as u32)
        .filter(|i| mask >> i & 1 == 1)
        .map(NodeId)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_contracts(seed in any::<u64>()) {
        let violations = contract_violations(&Case::random(seed), 200);
        prop_assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn cascade_outcome_is_consistent(seed in any::<u64>(), mask in any::<u16>()) {
        let case = Case::random(seed);
        let net = &case.network;
        let seeds = seeds_from(mask, net.node_count());
        let out = simulate_ic(net, &seeds, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(out.rounds, out.newly_active_per_round.len());
        prop_assert!(out.newly_active_per_round.last().is_none_or(|r| !r.is_empty()));
        let mut union: Vec<NodeId> = seeds.clone();
        union.extend(out.newly_active_per_round.iter().flatten());
        union.sort_unstable();
        union.dedup();
        prop_assert_eq!(&union, &out.activated);
        let mut attempted = out.attempted.clone();
        attempted.sort_unstable();
        attempted.dedup();
        prop_assert_eq!(attempted.len(), out.attempted.len());
        for e in attempted {
            prop_assert!(out.activated.contains(&net.edge(e).source));
        }
    }

    #[test]
    fn observation_invariants(seed in any::<u64>(), mask in any::<u16>(), d in 0usize..4) {
        let case = Case::random(seed);
        let net = &case.network;
        let seeds = seeds_from(mask, net.node_count());
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let obs = simulate_to_timestep(net, &seeds, d, &mut r);
        prop_assert!(obs.recently_active.iter().all(|u| obs.already_active.contains(u)));
        prop_assert!(seeds.iter().all(|u| obs.already_active.contains(u)));
        for &e in obs.failed_edges.iter().chain(&obs.live_edges) {
            prop_assert!(obs.already_active.contains(&net.edge(e).source));
        }
        prop_assert!(obs.failed_edges.iter().all(|e| !obs.live_edges.contains(e)));
        if d == 0 {
            prop_assert_eq!(&obs.recently_active, &seeds);
            prop_assert!(obs.failed_edges.is_empty() && obs.live_edges.is_empty());
        }

        let out = continue_diffusion(net, &obs, &[], &mut r);
        prop_assert!(obs.already_active.iter().all(|u| out.activated.contains(u)));
        let tried = obs.tried_mask(net.edge_count());
        prop_assert!(out.attempted.iter().all(|&e| !tried[e]));
    }

    #[test]
    fn estimate_shape(seed in any::<u64>(), mask in any::<u16>(), samples in 1usize..200) {
        let case = Case::random(seed);
        let seeds = seeds_from(mask, case.network.node_count());
        let est = estimate_profit(&case.network, &case.econ, &seeds, samples, seed);
        prop_assert!(est.stderr >= 0.0);
        prop_assert_eq!(est.samples, samples);
        prop_assert_eq!(est, estimate_profit(&case.network, &case.econ, &seeds, samples, seed));
    }

    #[test]
    fn oracle_tables_are_distributions(seed in any::<u64>(), mask in any::<u16>()) {
        let case = Case::random(seed);
        prop_assume!(case.network.edge_count() <= 10 && case.network.node_count() <= 7);
        let net = &case.network;
        let total: f64 = (0..1u64 << net.edge_count()).map(|m| live_graph_probability(net, LiveGraph::new(m))).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let s1 = seeds_from(mask, net.node_count());
        let budgets = PhaseBudgets::split(case.budget, case.split);
        let eval = exact_two_phase_objective(net, &case.econ, &s1, case.timestep, budgets).unwrap();
        prop_assert!((eval.value - eval.grouped_value).abs() < 1e-9);
        let p: f64 = eval.groups.iter().map(|g| g.probability).sum();
        prop_assert!((p - 1.0).abs() < 1e-12);
        for g in &eval.groups {
            prop_assert!(g.s2.iter().all(|u| !g.key.already_active.contains(u)));
            prop_assert!(case.econ.set_cost(&g.s2) <= eval.phase_two_budget + 1e-9);
        }
    }

    #[test]
    fn zero_timestep_collapses_to_two_batches(seed in any::<u64>()) {
        let case = Case::random(seed);
        let config = TwoPhaseConfig::new(case.budget, case.split, 0, AlgorithmChoice::SimpleGreedy).with_seed(seed);
        let config = TwoPhaseConfig { estimator: Estimator::MonteCarlo { samples: 100 }, replications: 3, ..config };
        let res = run_two_phase(&case.network, &case.econ, &config, false).unwrap();
        for rep in &res.replications {
            prop_assert_eq!(rep.rounds_phase1, 0);
            prop_assert_eq!(rep.observation.already_active, res.s1.len());
            prop_assert!(rep.s2.nodes.iter().all(|u| !res.s1.contains(*u)));
            prop_assert!(res.s1.total_cost + rep.s2.total_cost <= case.budget + 1e-9);
        }
    }

    #[test]
    fn stochastic_greedy_with_full_sample_is_simple_greedy(seed in any::<u64>()) {
        let case = Case::random(seed);
        let ctx = SelectionContext::new(ResidualView::full(&case.network), &case.econ, case.budget)
            .with_estimator(Estimator::MonteCarlo { samples: 100 })
            .with_seed(seed);
        let sg = select(&ctx, AlgorithmChoice::SimpleGreedy).unwrap();
        let stg = select(&ctx, AlgorithmChoice::StochasticGreedy { epsilon: 1e-9 }).unwrap();
        prop_assert_eq!(sg.selection, stg.selection);
        prop_assert_eq!(sg.trace, stg.trace);
    }

    #[test]
    fn symmetrized_ingest_is_symmetric(pairs in prop::collection::vec((0u64..12, 0u64..12), 0..40)) {
        let text: String = std::iter::once("0 1\n".to_string()).chain(pairs.iter().map(|(a, b)| format!("{a} {b}\n"))).collect();
        let options = IngestOptions { symmetrize: true, ..Default::default() };
        let net = parse_edge_list(Cursor::new(text), Path::new("generated"), options).unwrap().network;
        let mut seen = std::collections::HashSet::new();
        for e in net.edges() {
            prop_assert_ne!(e.source, e.target);
            prop_assert!(seen.insert((e.source, e.target)));
            prop_assert!(net.find_edge(e.target, e.source).is_some());
        }
    }

    #[test]
    fn trivalency_draws_from_the_set(seed in any::<u64>(), n in 2usize..20) {
        let pairs: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
        let net = SocialNetwork::from_edges(n, pairs).unwrap();
        let spec = AssignmentSpec { weighting: Weighting::Trivalency, master_seed: seed, ..Default::default() };
        let net = assign_weights(net, &spec).unwrap();
        prop_assert!(net.probabilities().unwrap().iter().all(|p| TRIVALENCY.contains(p)));
    }
}
