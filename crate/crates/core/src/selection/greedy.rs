//! Simple, stochastic and double greedy on a live-sample snapshot.

use log::debug;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Selected, SelectionContext, SelectionStats, TraceStep};
use crate::diffusion::{Coverage, SampleScratch, SeedSelection};
use crate::error::Result;
use crate::graph::NodeId;
use crate::rng;

const RATIO_TOL: f64 = 1e-12;

/// `a` beats `b` by more than the comparison tolerance.
#[inline]
fn beats(a: f64, b: f64) -> bool {
    a > b + RATIO_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Ratio-greedy: repeatedly buys the affordable candidate with the largest
/// (φ(S ∪ {u}) − φ(S)) / C(u), stopping once that gain is not positive.
/// Ties go to the lower id.
pub fn simple_greedy(ctx: &SelectionContext<'_>) -> Result<Selected> {
    ratio_greedy(ctx, None)
}

/// Simple greedy evaluating each round only a uniform sample of
/// `stochastic_sample_size` candidates.
pub fn stochastic_greedy(ctx: &SelectionContext<'_>, epsilon: f64) -> Result<Selected> {
    let candidates = ctx.view.node_count();
    let k = match ctx
        .view
        .nodes()
        .map(|u| ctx.econ.cost(u))
        .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1))
    {
        (_, 0) => 1,
        (sum, count) => ((ctx.budget / (sum / count as f64)).floor() as usize).max(1),
    };
    let size = stochastic_sample_size(candidates, k, epsilon);
    let rng = rng::stream(ctx.master_seed, &[rng::tag("stochastic-greedy")]);
    ratio_greedy(ctx, Some((size, rng)))
}

/// ceil((n / k) · ln(1 / ε)), at least 1.
pub fn stochastic_sample_size(n: usize, k: usize, epsilon: f64) -> usize {
    let s = (n as f64 / k.max(1) as f64) * (1.0 / epsilon).ln();
    (s.ceil() as usize).max(1)
}

fn ratio_greedy(
    ctx: &SelectionContext<'_>,
    mut sampler: Option<(usize, ChaCha8Rng)>,
) -> Result<Selected> {
    let samples = ctx.samples()?;
    let mut cov = Coverage::new(&samples, ctx.econ);
    let n = samples.node_count();
    let mut stats = SelectionStats {
        sample_size: sampler.as_ref().map(|s| s.0),
        replicates: ctx.estimator.samples(),
        ..Default::default()
    };
    let mut sel = SeedSelection::empty(ctx.budget);
    let mut trace = Vec::new();
    let mut candidates: Vec<NodeId> = ctx.view.nodes().collect();

    loop {
        let remaining = ctx.budget - sel.total_cost;
        let before = candidates.len();
        candidates.retain(|&u| ctx.affordable(ctx.econ.cost(u), remaining));
        if candidates.len() < before {
            debug!(
                "greedy: {} candidates no longer fit {remaining}",
                before - candidates.len()
            );
            stats.skipped_unaffordable += before - candidates.len();
        }
        if candidates.is_empty() {
            break;
        }
        let pool: Vec<usize> = match sampler.as_mut() {
            Some((size, rng)) if *size < candidates.len() => {
                let mut idx = index::sample(rng, candidates.len(), *size).into_vec();
                idx.sort_unstable();
                idx
            }
            _ => (0..candidates.len()).collect(),
        };
        stats.iterations += 1;
        stats.gain_evaluations += pool.len();
        let gains: Vec<f64> = pool
            .par_iter()
            .map_init(
                || SampleScratch::new(n),
                |scratch, &i| cov.gain_of(candidates[i], scratch),
            )
            .collect();

        let mut best: Option<(usize, f64, f64)> = None;
        for (&i, &g) in pool.iter().zip(&gains) {
            let c = ctx.econ.cost(candidates[i]);
            let ratio = (g - c) / c;
            if best.is_none_or(|(_, r, _)| beats(ratio, r)) {
                best = Some((i, ratio, g - c));
            }
        }
        let (i, ratio, marginal) = best.expect("non-empty pool");
        let u = candidates[i];
        if marginal <= 0.0 {
            trace.push(TraceStep {
                node: u,
                ratio,
                ratio_minus: None,
                added: false,
            });
            break;
        }
        cov.add(u);
        sel.push(u, ctx.econ.cost(u));
        trace.push(TraceStep {
            node: u,
            ratio,
            ratio_minus: None,
            added: true,
        });
        candidates.remove(i);
    }
    Ok(Selected {
        selection: sel,
        stats,
        trace,
        upper: None,
    })
}

/// Double greedy over the candidates in ascending id order.
///
/// S grows from ∅ and T shrinks from all candidates. With
/// r⁺ = (φ(S ∪ {u}) − φ(S)) / C(u) and r⁻ = −(φ(T ∖ {u}) − φ(T)) / C(u),
/// `u` joins S when r⁺ ≥ r⁻ and it is affordable, otherwise it leaves T.
pub fn double_greedy(ctx: &SelectionContext<'_>) -> Result<Selected> {
    let samples = ctx.samples()?;
    let n = samples.node_count();
    let candidates: Vec<NodeId> = ctx.view.nodes().collect();
    let mut lower = Coverage::new(&samples, ctx.econ);
    let mut upper = lower.clone();
    let mut in_upper = vec![false; n];
    for &u in &candidates {
        upper.add(u);
        in_upper[u.index()] = true;
    }
    let mut scratch = SampleScratch::new(n);
    let mut stats = SelectionStats {
        replicates: ctx.estimator.samples(),
        ..Default::default()
    };
    let mut sel = SeedSelection::empty(ctx.budget);
    let mut trace = Vec::with_capacity(candidates.len());

    for &u in &candidates {
        let c = ctx.econ.cost(u);
        let gain = lower.gain_of(u, &mut scratch);
        let loss = upper.loss_of(u, &in_upper, &mut scratch);
        stats.iterations += 1;
        stats.pair_evaluations += 1;
        stats.gain_evaluations += 2;
        let r_plus = (gain - c) / c;
        let r_minus = (loss - c) / c;
        let keep = !beats(r_minus, r_plus);
        let fits = ctx.affordable(c, ctx.budget - sel.total_cost);
        if keep && fits {
            lower.add(u);
            sel.push(u, c);
        } else {
            if keep {
                stats.skipped_unaffordable += 1;
            }
            upper.remove(u, &in_upper, &mut scratch);
            in_upper[u.index()] = false;
        }
        trace.push(TraceStep {
            node: u,
            ratio: r_plus,
            ratio_minus: Some(r_minus),
            added: keep && fits,
        });
    }
    let upper_set: Vec<NodeId> = candidates
        .into_iter()
        .filter(|u| in_upper[u.index()])
        .collect();
    debug_assert!(sel.nodes.iter().all(|u| in_upper[u.index()]));
    Ok(Selected {
        selection: sel,
        stats,
        trace,
        upper: Some(upper_set),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeEconomics, ResidualView, SocialNetwork};
    use crate::oracle::exact_profit;
    use crate::oracle::figure3a;
    use crate::selection::{select, AlgorithmChoice, Estimator};

    fn isolated(cost: Vec<f64>, benefit: Vec<f64>) -> (SocialNetwork, NodeEconomics) {
        let n = cost.len();
        let g =
            SocialNetwork::from_weighted_edges(n, std::iter::empty::<(u32, u32, f64)>()).unwrap();
        (g, NodeEconomics::new(cost, benefit).unwrap())
    }

    #[test]
    fn isolated_nodes_picked_by_ratio() {
        let (g, e) = isolated(vec![1.0, 1.0], vec![4.0, 6.0]);
        let ctx = SelectionContext::new(ResidualView::full(&g), &e, 10.0)
            .with_estimator(Estimator::Exact);
        let out = simple_greedy(&ctx).unwrap();
        assert_eq!(out.selection.nodes, vec![NodeId(1), NodeId(0)]);
    }

    #[test]
    fn unprofitable_nodes_are_never_bought() {
        let (g, e) = isolated(vec![5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0]);
        let ctx = SelectionContext::new(ResidualView::full(&g), &e, 100.0)
            .with_estimator(Estimator::Exact);
        assert!(simple_greedy(&ctx).unwrap().selection.is_empty());
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(stochastic_sample_size(100, 10, 0.1), 24);
        assert_eq!(stochastic_sample_size(5, 10, 0.9), 1);
    }

    #[test]
    fn simple_greedy_follows_exact_ratios() {
        // Replay the greedy rule with brute-force exact profits.
        let inst = figure3a();
        let budget = 3.0;
        let ctx = SelectionContext::new(ResidualView::full(&inst.network), &inst.econ, budget)
            .with_estimator(Estimator::Exact);
        let got = simple_greedy(&ctx).unwrap().selection.nodes;

        let mut s: Vec<NodeId> = Vec::new();
        let mut spent = 0.0;
        loop {
            let base = exact_profit(&inst.network, &inst.econ, &s).unwrap();
            let mut best: Option<(NodeId, f64, f64)> = None;
            for u in inst.network.nodes().filter(|u| !s.contains(u)) {
                let c = inst.econ.cost(u);
                if c > budget - spent + 1e-9 {
                    continue;
                }
                let mut t = s.clone();
                t.push(u);
                let gain = exact_profit(&inst.network, &inst.econ, &t).unwrap() - base;
                if best.is_none_or(|(_, r, _)| gain / c > r + 1e-12) {
                    best = Some((u, gain / c, gain));
                }
            }
            match best {
                Some((u, _, gain)) if gain > 0.0 => {
                    spent += inst.econ.cost(u);
                    s.push(u);
                }
                _ => break,
            }
        }
        assert_eq!(got, s);
    }

    #[test]
    fn stochastic_greedy_degenerates_to_simple() {
        let inst = figure3a();
        let ctx = SelectionContext::new(ResidualView::full(&inst.network), &inst.econ, 3.0)
            .with_estimator(Estimator::MonteCarlo { samples: 2000 })
            .with_seed(9);
        let sg = select(&ctx, AlgorithmChoice::SimpleGreedy).unwrap();
        let stg = select(&ctx, AlgorithmChoice::StochasticGreedy { epsilon: 1e-6 }).unwrap();
        assert_eq!(sg.selection, stg.selection);
        assert_eq!(sg.trace, stg.trace);
    }

    #[test]
    fn double_greedy_isolated_and_zero_budget() {
        let (g, e) = isolated(vec![1.0], vec![3.0]);
        let ctx =
            SelectionContext::new(ResidualView::full(&g), &e, 1.0).with_estimator(Estimator::Exact);
        let out = double_greedy(&ctx).unwrap();
        assert_eq!(out.selection.nodes, vec![NodeId(0)]);
        assert!(out.trace[0].ratio > out.trace[0].ratio_minus.unwrap() - 1e-12);

        let inst = figure3a();
        let ctx = SelectionContext::new(ResidualView::full(&inst.network), &inst.econ, 0.0)
            .with_estimator(Estimator::Exact);
        let out = double_greedy(&ctx).unwrap();
        assert!(out.selection.is_empty());
        assert_eq!(out.stats.pair_evaluations, 4);
        assert_eq!(out.upper, Some(vec![]));
    }

    #[test]
    fn double_greedy_trace_is_reproducible() {
        let inst = figure3a();
        let ctx = SelectionContext::new(ResidualView::full(&inst.network), &inst.econ, 3.0)
            .with_estimator(Estimator::Exact);
        let a = double_greedy(&ctx).unwrap();
        let b = double_greedy(&ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.trace.iter().map(|t| t.node).collect::<Vec<_>>(),
            inst.network.nodes().collect::<Vec<_>>()
        );
        for step in &a.trace {
            assert!(step.ratio >= step.ratio_minus.unwrap() - 1e-9);
        }
    }
}
