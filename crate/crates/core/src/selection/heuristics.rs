//! Degree, clustering and random baselines.

use std::cmp::Ordering;

use rand::seq::SliceRandom;

use super::{buy_in_order, Selected, SelectionContext, SelectionStats};
use crate::diffusion::SeedSelection;
use crate::graph::{NodeId, ResidualView};
use crate::rng;

/// Candidates by out-degree, highest first, ties to the lower id.
pub fn high_degree(ctx: &SelectionContext<'_>) -> Selected {
    let mut order: Vec<NodeId> = ctx.view.nodes().collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(ctx.view.out_degree(u)), u));
    let (sel, skipped) = buy_in_order(ctx, order);
    Selected::plain(
        sel,
        SelectionStats {
            skipped_unaffordable: skipped,
            ..Default::default()
        },
    )
}

/// Repeatedly takes the node of largest score, then lets `update` adjust
/// the scores; unaffordable picks are skipped for good.
fn discounting(
    ctx: &SelectionContext<'_>,
    mut score: Vec<f64>,
    mut update: impl FnMut(NodeId, &mut Vec<f64>),
) -> (SeedSelection, usize) {
    let mut open: Vec<NodeId> = ctx.view.nodes().collect();
    let mut sel = SeedSelection::empty(ctx.budget);
    let mut skipped = 0;
    while !open.is_empty() {
        let (i, _) = open
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &u)| {
                if score[u.index()] > best.1 {
                    (i, score[u.index()])
                } else {
                    best
                }
            });
        let u = open.remove(i);
        let c = ctx.econ.cost(u);
        if !ctx.affordable(c, ctx.budget - sel.total_cost) {
            skipped += 1;
            continue;
        }
        sel.push(u, c);
        update(u, &mut score);
    }
    (sel, skipped)
}

fn out_degrees(view: &ResidualView<'_>) -> Vec<f64> {
    (0..view.network().node_count())
        .map(|i| view.out_degree(NodeId::from(i)) as f64)
        .collect()
}

/// Highest effective degree first; each pick lowers its out-neighbours'
/// effective degree by one.
pub fn single_discount(ctx: &SelectionContext<'_>) -> Selected {
    let net = ctx.view.network();
    let (sel, skipped) = discounting(ctx, out_degrees(&ctx.view), |u, score| {
        for e in ctx.view.out_edges(u) {
            score[net.edge(e).target.index()] -= 1.0;
        }
    });
    Selected::plain(
        sel,
        SelectionStats {
            skipped_unaffordable: skipped,
            ..Default::default()
        },
    )
}

/// dd_v = d_v − 2 t_v − (d_v − t_v) t_v p, with t_v the number of selected
/// in-neighbours of v.
pub fn degree_discount(ctx: &SelectionContext<'_>, p: Option<f64>) -> Selected {
    let p = p.or_else(|| ctx.view.mean_probability()).unwrap_or(1.0);
    let net = ctx.view.network();
    let degree = out_degrees(&ctx.view);
    let mut t = vec![0.0; degree.len()];
    let (sel, skipped) = discounting(ctx, degree.clone(), |u, score| {
        for e in ctx.view.out_edges(u) {
            let v = net.edge(e).target.index();
            t[v] += 1.0;
            score[v] = degree_discount_score(degree[v], t[v], p);
        }
    });
    Selected::plain(
        sel,
        SelectionStats {
            skipped_unaffordable: skipped,
            discount_p: Some(p),
            ..Default::default()
        },
    )
}

#[inline]
pub(crate) fn degree_discount_score(d: f64, t: f64, p: f64) -> f64 {
    d - 2.0 * t - (d - t) * t * p
}

/// Local clustering coefficients of the undirected simple graph underlying
/// the view; 0 for hidden nodes and nodes with fewer than two neighbours.
pub fn clustering_coefficients(view: &ResidualView<'_>) -> (Vec<f64>, Vec<usize>) {
    let net = view.network();
    let n = net.node_count();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for e in view.edges() {
        let edge = net.edge(e);
        if edge.source != edge.target {
            adj[edge.source.index()].push(edge.target.0);
            adj[edge.target.index()].push(edge.source.0);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let cc = (0..n)
        .map(|v| {
            let k = adj[v].len();
            if k < 2 {
                return 0.0;
            }
            let links: usize = adj[v]
                .iter()
                .map(|&a| sorted_overlap(&adj[a as usize], &adj[v]))
                .sum();
            // Each neighbour pair is counted from both ends.
            links as f64 / (k * (k - 1)) as f64
        })
        .collect();
    let degree = adj.iter().map(Vec::len).collect();
    (cc, degree)
}

fn sorted_overlap(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Candidates by clustering coefficient, then undirected degree, both
/// descending, then id.
pub fn high_clustering_coefficient(ctx: &SelectionContext<'_>) -> Selected {
    let (cc, degree) = clustering_coefficients(&ctx.view);
    let mut order: Vec<NodeId> = ctx.view.nodes().collect();
    order.sort_by(|&a, &b| {
        cc[b.index()]
            .total_cmp(&cc[a.index()])
            .then(degree[b.index()].cmp(&degree[a.index()]))
            .then(a.cmp(&b))
    });
    let (sel, skipped) = buy_in_order(ctx, order);
    Selected::plain(
        sel,
        SelectionStats {
            skipped_unaffordable: skipped,
            ..Default::default()
        },
    )
}

/// Uniformly random order, buying whatever still fits.
pub fn random_selection(ctx: &SelectionContext<'_>) -> Selected {
    let mut order: Vec<NodeId> = ctx.view.nodes().collect();
    order.shuffle(&mut rng::stream(
        ctx.master_seed,
        &[rng::tag("random-selection")],
    ));
    let (sel, skipped) = buy_in_order(ctx, order);
    Selected::plain(
        sel,
        SelectionStats {
            skipped_unaffordable: skipped,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeEconomics, SocialNetwork};

    fn unit_costs(n: usize) -> NodeEconomics {
        NodeEconomics::new(vec![1.0; n], vec![1.0; n]).unwrap()
    }

    fn ctx<'a>(g: &'a SocialNetwork, e: &'a NodeEconomics, budget: f64) -> SelectionContext<'a> {
        SelectionContext::new(ResidualView::full(g), e, budget)
    }

    fn ids(s: &Selected) -> Vec<u32> {
        s.selection.nodes.iter().map(|u| u.0).collect()
    }

    #[test]
    fn high_degree_star_and_ties() {
        let g = SocialNetwork::from_edges(5, [(3, 0), (3, 1), (3, 2), (0, 1), (4, 2)]).unwrap();
        let e = unit_costs(5);
        assert_eq!(ids(&high_degree(&ctx(&g, &e, 3.0))), vec![3, 0, 4]);
        assert!(high_degree(&ctx(&g, &e, 0.0)).selection.is_empty());
    }

    #[test]
    fn unaffordable_nodes_are_skipped() {
        let g = SocialNetwork::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let e = NodeEconomics::new(vec![5.0, 1.0, 1.0], vec![1.0; 3]).unwrap();
        let out = high_degree(&ctx(&g, &e, 2.0));
        assert_eq!(ids(&out), vec![1, 2]);
        assert_eq!(out.stats.skipped_unaffordable, 1);
    }

    #[test]
    fn single_discount_diverges_from_high_degree() {
        // Three hubs of degree 3; 0 points at 1, so picking 0 demotes 1 below 4.
        let g = SocialNetwork::from_edges(
            6,
            [
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 4),
                (1, 5),
                (1, 3),
                (4, 5),
                (4, 2),
                (4, 3),
            ],
        )
        .unwrap();
        let e = unit_costs(6);
        assert_eq!(ids(&high_degree(&ctx(&g, &e, 2.0))), vec![0, 1]);
        assert_eq!(ids(&single_discount(&ctx(&g, &e, 2.0))), vec![0, 4]);
    }

    #[test]
    fn degree_discount_formula() {
        assert_eq!(degree_discount_score(5.0, 0.0, 0.3), 5.0);
        assert!((degree_discount_score(2.0, 1.0, 0.1) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn degree_discount_on_triangle_is_deterministic() {
        let g =
            SocialNetwork::from_weighted_edges(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)]).unwrap();
        let e = unit_costs(3);
        let a = degree_discount(&ctx(&g, &e, 2.0), None);
        assert_eq!(ids(&a), vec![0, 2]);
        assert_eq!(a.stats.discount_p, Some(0.5));
        assert_eq!(a, degree_discount(&ctx(&g, &e, 2.0), None));
    }

    #[test]
    fn clustering_values() {
        let g = SocialNetwork::from_edges(4, [(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let (cc, _) = clustering_coefficients(&ResidualView::full(&g));
        assert_eq!(cc[0], 1.0);
        assert_eq!(cc[1], 1.0);
        assert!((cc[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cc[3], 0.0);

        let k4 =
            SocialNetwork::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let e = unit_costs(4);
        assert_eq!(
            ids(&high_clustering_coefficient(&ctx(&k4, &e, 4.0))),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn random_selection_cases() {
        let g = SocialNetwork::from_edges(6, [(0, 1)]).unwrap();
        let e = NodeEconomics::new(vec![2.0; 6], vec![1.0; 6]).unwrap();
        assert!(random_selection(&ctx(&g, &e, 1.0)).selection.is_empty());
        let all = random_selection(&ctx(&g, &e, 12.0).with_seed(4));
        let mut sorted = ids(&all);
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(all, random_selection(&ctx(&g, &e, 12.0).with_seed(4)));
    }
}
