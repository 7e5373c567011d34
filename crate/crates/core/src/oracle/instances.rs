//! The small worked-example networks, and random instances of the same size.

use rand::seq::SliceRandom;
use rand::Rng;

use super::PhaseBudgets;
use crate::graph::{NodeEconomics, NodeId, SocialNetwork};
use crate::rng;

/// A reference network with economics and the setting it is evaluated in.
#[derive(Clone, Debug)]
pub struct PaperInstance {
    pub name: &'static str,
    pub network: SocialNetwork,
    pub econ: NodeEconomics,
    /// `u1`, `u2`, ... for node 0, 1, ...
    pub labels: Vec<String>,
    pub timestep: usize,
    pub budgets: PhaseBudgets,
    /// The phase-one set the example is worked for.
    pub s1: Vec<NodeId>,
}

impl PaperInstance {
    /// Node id of label `u<k>`.
    pub fn node(&self, label: &str) -> NodeId {
        NodeId::from(
            self.labels
                .iter()
                .position(|l| l == label)
                .unwrap_or_else(|| panic!("no node {label}")),
        )
    }

    /// Node ids of a list of labels.
    pub fn nodes(&self, labels: &[&str]) -> Vec<NodeId> {
        labels.iter().map(|l| self.node(l)).collect()
    }

    /// Edge index of `u<a>u<b>`.
    pub fn edge(&self, source: &str, target: &str) -> usize {
        self.network
            .find_edge(self.node(source), self.node(target))
            .unwrap_or_else(|| panic!("no edge {source}{target}"))
    }

    pub fn with_budgets(mut self, phase_one: f64, total: f64) -> Self {
        self.budgets = PhaseBudgets {
            phase_one,
            phase_two: total - phase_one,
        };
        self
    }
}

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

/// Six nodes, five edges; probabilities solved from the live-graph table.
///
/// Only part of the economics is pinned by the table; this uses
/// b = (1, 1, 1, 1, 2, 1) and C = (1, 1, 2, 2, 2, 2).
pub fn figure1() -> PaperInstance {
    let network = SocialNetwork::from_weighted_edges(
        6,
        [
            (0, 1, 0.4),
            (0, 2, 0.5),
            (1, 3, 0.2),
            (1, 4, 0.9),
            (2, 5, 0.6),
        ],
    )
    .expect("valid network");
    let econ = NodeEconomics::new(
        vec![1.0, 1.0, 2.0, 2.0, 2.0, 2.0],
        vec![1.0, 1.0, 1.0, 1.0, 2.0, 1.0],
    )
    .expect("valid economics");
    PaperInstance {
        name: "figure1",
        network,
        econ,
        labels: labels(6),
        timestep: 1,
        budgets: PhaseBudgets {
            phase_one: 2.0,
            phase_two: 3.0,
        },
        s1: vec![NodeId(0)],
    }
}

/// The four-node chain-and-fork shared by the sign and monotonicity examples.
fn fork() -> SocialNetwork {
    SocialNetwork::from_weighted_edges(4, [(0, 1, 0.6), (1, 2, 0.7), (1, 3, 0.9)])
        .expect("valid network")
}

fn fork_instance(
    name: &'static str,
    cost: [f64; 4],
    benefit: [f64; 4],
    budgets: PhaseBudgets,
) -> PaperInstance {
    PaperInstance {
        name,
        network: fork(),
        econ: NodeEconomics::new(cost.to_vec(), benefit.to_vec()).expect("valid economics"),
        labels: labels(4),
        timestep: 1,
        budgets,
        s1: vec![NodeId(0)],
    }
}

/// Positive-objective example. Only b(u1) + b(u2) = 11 is pinned; b(u2) = 6.
pub fn figure2a() -> PaperInstance {
    fork_instance(
        "figure2a",
        [3.0, 1.0, 1.0, 1.0],
        [5.0, 6.0, 4.0, 2.0],
        PhaseBudgets {
            phase_one: 3.0,
            phase_two: 1.0,
        },
    )
}

/// Negative-objective example.
pub fn figure2b() -> PaperInstance {
    fork_instance(
        "figure2b",
        [3.0, 1.0, 1.0, 1.0],
        [2.0, 1.0, 0.0, 1.0],
        PhaseBudgets {
            phase_one: 3.0,
            phase_two: 1.0,
        },
    )
}

/// Monotonicity / modularity example with B₁ = 2, B = 3. Only
/// b(u1) + b(u2) = 3 is pinned; b(u1) = 2.
pub fn figure3a() -> PaperInstance {
    fork_instance(
        "figure3a",
        [2.0, 1.0, 1.0, 1.0],
        [2.0, 1.0, 10.0, 1.0],
        PhaseBudgets {
            phase_one: 2.0,
            phase_two: 1.0,
        },
    )
}

/// A random network with `n` nodes and `m` distinct edges, probabilities in
/// [0.05, 1] and economics drawn from the given intervals.
pub fn random_small_instance(
    seed: u64,
    n: usize,
    m: usize,
    cost: (f64, f64),
    benefit: (f64, f64),
) -> (SocialNetwork, NodeEconomics) {
    let mut r = rng::stream(seed, &[rng::tag("small-instance")]);
    let mut pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|a| (0..n as u32).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(&mut r);
    pairs.truncate(m);
    let edges: Vec<(u32, u32, f64)> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, r.random_range(0.05..=1.0)))
        .collect();
    let network = SocialNetwork::from_weighted_edges(n, edges).expect("valid random network");
    let mut draw = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..n)
            .map(|_| {
                if lo == hi {
                    lo
                } else {
                    r.random_range(lo..=hi)
                }
            })
            .collect()
    };
    let c = draw(cost);
    let b = draw(benefit);
    (network, NodeEconomics::new(c, b).expect("valid economics"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_two_phase_objective;

    fn f(inst: &PaperInstance, labels: &[&str]) -> f64 {
        let eval = exact_two_phase_objective(
            &inst.network,
            &inst.econ,
            &inst.nodes(labels),
            inst.timestep,
            inst.budgets,
        )
        .unwrap();
        assert!((eval.value - eval.grouped_value).abs() < 1e-12);
        eval.value
    }

    // Reference values from an independent per-observation enumeration.
    #[test]
    fn objective_matches_reference_enumeration() {
        let t4 = figure3a();
        assert!((f(&t4, &["u1"]) - 10.14).abs() < 1e-9);
        assert!((f(&t4, &["u1", "u3"]) - 10.14).abs() < 1e-9);
        assert!((f(&t4, &["u1", "u4"]) - 4.8).abs() < 1e-9);
        let t5 = figure3a().with_budgets(3.0, 4.0);
        assert!((f(&t5, &["u3"]) - 10.14).abs() < 1e-9);
        assert!((f(&t5, &["u1", "u2"]) - 10.6).abs() < 1e-9);
        assert!((f(&t5, &["u1", "u2", "u4"]) - 7.0).abs() < 1e-9);
        assert!((f(&t5, &["u1"]) - 10.5).abs() < 1e-9);
        assert!((f(&t5, &[]) - 10.14).abs() < 1e-9);
        assert!((f(&figure2a(), &["u1"]) - 12.32).abs() < 1e-9);
        assert!((f(&figure2b(), &["u1"]) - 0.5).abs() < 1e-9);
        assert!((f(&figure2b(), &["u3"]) + 0.1).abs() < 1e-9);
        assert!((f(&figure1(), &["u1"]) - 3.2).abs() < 1e-9);
    }

    #[test]
    fn labels_resolve() {
        let inst = figure1();
        assert_eq!(inst.node("u3"), NodeId(2));
        assert_eq!(inst.edge("u2", "u5"), 3);
    }

    #[test]
    fn random_instances_have_requested_shape() {
        let (g, e) = random_small_instance(3, 4, 3, (50.0, 100.0), (800.0, 1000.0));
        assert_eq!((g.node_count(), g.edge_count()), (4, 3));
        assert!(e.costs().iter().all(|c| (50.0..=100.0).contains(c)));
    }
}
