//! Fixtures and contract checks shared by the property tests and the
//! acceptance suite.

#[cfg(test)]
mod properties;

use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tppm::diffusion::{continue_diffusion, simulate_to_timestep};
use tppm::graph::{
    assign_economics, assign_weights, ingest_edge_list, AssignmentSpec, IngestOptions, InstanceMeta,
};
use tppm::oracle::random_small_instance;
use tppm::selection::{select, AlgorithmChoice, Estimator, SelectionContext};
use tppm::two_phase::{run_two_phase, TwoPhaseConfig};
use tppm::{Instance, NodeEconomics, NodeId, ResidualView, SocialNetwork};

pub const LM_SEED: u64 = 2024;

/// The Les Misérables co-appearance graph, symmetrized, with trivalency
/// probabilities and default cost / benefit intervals.
pub fn lesmis() -> Instance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/lesmis.txt");
    let ingested = ingest_edge_list(
        &path,
        IngestOptions {
            symmetrize: true,
            ..Default::default()
        },
    )
    .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let spec = AssignmentSpec {
        master_seed: LM_SEED,
        ..Default::default()
    };
    let network = assign_weights(ingested.network, &spec).unwrap();
    let economics = assign_economics(&network, &spec).unwrap();
    let meta = InstanceMeta {
        name: Some("lm".into()),
        seed: Some(LM_SEED),
        scheme: Some("trivalency".into()),
        labels: Some(ingested.labels),
    };
    Instance::new(network, economics, meta).unwrap()
}

pub fn roster() -> Vec<AlgorithmChoice> {
    vec![
        AlgorithmChoice::SimpleGreedy,
        AlgorithmChoice::DoubleGreedy,
        AlgorithmChoice::StochasticGreedy { epsilon: 0.3 },
        AlgorithmChoice::HighDegree,
        AlgorithmChoice::SingleDiscount,
        AlgorithmChoice::DegreeDiscount { p: None },
        AlgorithmChoice::HighClusteringCoefficient,
        AlgorithmChoice::Random,
    ]
}

/// A random contract-test case.
#[derive(Clone, Debug)]
pub struct Case {
    pub seed: u64,
    pub network: SocialNetwork,
    pub econ: NodeEconomics,
    pub budget: f64,
    pub split: f64,
    pub timestep: usize,
}

impl Case {
    pub fn random(seed: u64) -> Case {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let n = r.random_range(3..=9usize);
        let m = r.random_range(0..=(n * (n - 1)).min(14));
        let (network, econ) = random_small_instance(seed, n, m, (1.0, 5.0), (0.0, 10.0));
        Case {
            seed,
            network,
            econ,
            budget: r.random_range(0.0..15.0),
            split: r.random_range(0.05..0.95),
            timestep: r.random_range(0..=3),
        }
    }
}

fn slack(b: f64) -> f64 {
    1e-9 * b.abs().max(1.0)
}

/// Checks the selection and diffusion contracts on one case and returns a
/// description of every violation.
pub fn contract_violations(case: &Case, samples: usize) -> Vec<String> {
    let mut bad = Vec::new();
    let net = &case.network;
    let econ = &case.econ;
    let estimator = Estimator::MonteCarlo { samples };
    let c_min = econ.min_cost().unwrap();
    let b1 = case.budget * case.split;

    let mut s1 = Vec::new();
    for algo in roster() {
        let ctx = SelectionContext::new(ResidualView::full(net), econ, b1)
            .with_estimator(estimator)
            .with_seed(case.seed);
        let out = match select(&ctx, algo) {
            Ok(out) => out,
            Err(e) => {
                bad.push(format!("{algo} phase one: {e}"));
                continue;
            }
        };
        check_selection(
            &mut bad,
            &format!("{algo} phase one"),
            &out.selection.nodes,
            econ,
            b1,
            &[],
        );
        check_counts(&mut bad, algo, &out.stats, b1, c_min, net.node_count());
        if algo == AlgorithmChoice::SimpleGreedy {
            s1 = out.selection.nodes.clone();
        }
    }

    let mut r = ChaCha8Rng::seed_from_u64(case.seed ^ 0x5eed);
    let obs = simulate_to_timestep(net, &s1, case.timestep, &mut r);
    let b2 = case.budget - econ.set_cost(&s1);
    let view = ResidualView::new(net, obs.already_active.iter().copied());
    let candidates = net.node_count() - obs.already_active.len();
    for algo in roster() {
        let ctx = SelectionContext::new(view.clone(), econ, b2.max(0.0))
            .with_estimator(estimator)
            .with_seed(case.seed)
            .with_evidence(
                obs.recently_active.clone(),
                obs.tried_mask(net.edge_count()),
            );
        let out = match select(&ctx, algo) {
            Ok(out) => out,
            Err(e) => {
                bad.push(format!("{algo} phase two: {e}"));
                continue;
            }
        };
        let label = format!("{algo} phase two");
        check_selection(
            &mut bad,
            &label,
            &out.selection.nodes,
            econ,
            b2.max(0.0),
            &obs.already_active,
        );
        check_counts(&mut bad, algo, &out.stats, b2.max(0.0), c_min, candidates);

        let outcome = continue_diffusion(net, &obs, &out.selection.nodes, &mut r);
        let mut tried = obs.tried_mask(net.edge_count());
        for &e in &outcome.attempted {
            if std::mem::replace(&mut tried[e], true) {
                bad.push(format!("{label}: edge {e} attempted twice"));
            }
        }
    }

    let config = TwoPhaseConfig::new(
        case.budget,
        case.split,
        case.timestep,
        AlgorithmChoice::SimpleGreedy,
    )
    .with_seed(case.seed);
    let config = TwoPhaseConfig {
        estimator,
        replications: 4,
        ..config
    };
    match run_two_phase(net, econ, &config, false) {
        Ok(res) => {
            let spent1 = res.s1.total_cost;
            if spent1 > res.budgets.phase_one + slack(res.budgets.phase_one) {
                bad.push(format!(
                    "two-phase: C(S1) = {spent1} over B1 = {}",
                    res.budgets.phase_one
                ));
            }
            let carried = res.budgets.carried(spent1);
            for rep in &res.replications {
                if rep.s2.total_cost > carried + slack(carried) {
                    bad.push(format!(
                        "two-phase: C(S2) = {} over carried {carried}",
                        rep.s2.total_cost
                    ));
                }
                if rep.attempts > net.edge_count() {
                    bad.push(format!(
                        "two-phase: {} attempts on {} edges",
                        rep.attempts,
                        net.edge_count()
                    ));
                }
            }
        }
        Err(e) => bad.push(format!("two-phase: {e}")),
    }
    bad
}

fn check_selection(
    bad: &mut Vec<String>,
    label: &str,
    nodes: &[NodeId],
    econ: &NodeEconomics,
    budget: f64,
    excluded: &[NodeId],
) {
    let cost = econ.set_cost(nodes);
    if cost > budget + slack(budget) {
        bad.push(format!("{label}: cost {cost} over budget {budget}"));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != nodes.len() {
        bad.push(format!("{label}: repeated node in {nodes:?}"));
    }
    if let Some(u) = nodes.iter().find(|u| excluded.contains(u)) {
        bad.push(format!("{label}: picked already active node {}", u.0));
    }
}

fn check_counts(
    bad: &mut Vec<String>,
    algo: AlgorithmChoice,
    stats: &tppm::selection::SelectionStats,
    budget: f64,
    c_min: f64,
    candidates: usize,
) {
    match algo {
        AlgorithmChoice::SimpleGreedy => {
            let bound = (budget / c_min).ceil() as usize;
            if stats.iterations > bound {
                bad.push(format!(
                    "SG: {} iterations, bound {bound}",
                    stats.iterations
                ));
            }
        }
        AlgorithmChoice::DoubleGreedy if stats.pair_evaluations != candidates => {
            bad.push(format!(
                "DG: {} pair evaluations for {candidates} candidates",
                stats.pair_evaluations
            ));
        }
        _ => {}
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    }
}
