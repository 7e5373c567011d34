use super::{EdgeIdx, NodeId, SocialNetwork};

/// A network with a set of nodes (and every edge touching them) hidden.
///
/// Phase-two selection runs on the view that excludes the already active
/// nodes. The underlying network is borrowed, never copied.
#[derive(Clone, Debug)]
pub struct ResidualView<'a> {
    net: &'a SocialNetwork,
    excluded: Vec<bool>,
    n_excluded: usize,
}

impl<'a> ResidualView<'a> {
    /// View exposing the whole network.
    pub fn full(net: &'a SocialNetwork) -> Self {
        ResidualView {
            net,
            excluded: vec![false; net.node_count()],
            n_excluded: 0,
        }
    }

    /// View hiding `excluded`. Ids outside the network are ignored.
    pub fn new(net: &'a SocialNetwork, excluded: impl IntoIterator<Item = NodeId>) -> Self {
        let mut view = Self::full(net);
        for u in excluded {
            if u.index() < view.excluded.len() && !view.excluded[u.index()] {
                view.excluded[u.index()] = true;
                view.n_excluded += 1;
            }
        }
        view
    }

    #[inline]
    pub fn network(&self) -> &'a SocialNetwork {
        self.net
    }

    #[inline]
    pub fn contains(&self, u: NodeId) -> bool {
        !self.excluded[u.index()]
    }

    #[inline]
    pub fn is_excluded(&self, u: NodeId) -> bool {
        self.excluded[u.index()]
    }

    pub fn excluded_mask(&self) -> &[bool] {
        &self.excluded
    }

    pub fn node_count(&self) -> usize {
        self.net.node_count() - self.n_excluded
    }

    /// Surviving nodes, ascending.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.net.nodes().filter(move |&u| self.contains(u))
    }

    #[inline]
    fn edge_visible(&self, e: EdgeIdx) -> bool {
        let edge = self.net.edge(e);
        self.contains(edge.source) && self.contains(edge.target)
    }

    /// Visible edge indices.
    pub fn edges(&self) -> impl Iterator<Item = EdgeIdx> + '_ {
        (0..self.net.edge_count()).filter(move |&e| self.edge_visible(e))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Visible outgoing edges of `u`; empty when `u` itself is hidden.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = EdgeIdx> + '_ {
        let edges: &[u32] = if self.contains(u) {
            self.net.out_edges(u)
        } else {
            &[]
        };
        edges
            .iter()
            .map(|&e| e as EdgeIdx)
            .filter(move |&e| self.contains(self.net.edge(e).target))
    }

    pub fn in_edges(&self, u: NodeId) -> impl Iterator<Item = EdgeIdx> + '_ {
        let edges: &[u32] = if self.contains(u) {
            self.net.in_edges(u)
        } else {
            &[]
        };
        edges
            .iter()
            .map(|&e| e as EdgeIdx)
            .filter(move |&e| self.contains(self.net.edge(e).source))
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_edges(u).count()
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_edges(u).count()
    }

    /// Mean probability over visible edges; `None` if there are none or the
    /// network is unweighted.
    pub fn mean_probability(&self) -> Option<f64> {
        let probs = self.net.probabilities()?;
        let (sum, count) = self
            .edges()
            .fold((0.0, 0usize), |(s, c), e| (s + probs[e], c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> SocialNetwork {
        SocialNetwork::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn empty_exclusion_is_identity() {
        let g = path();
        let v = ResidualView::full(&g);
        assert_eq!(v.node_count(), 3);
        assert_eq!(v.edge_count(), 2);
        assert_eq!(v.out_degree(NodeId(0)), 1);
    }

    #[test]
    fn excluding_everything_is_empty() {
        let g = path();
        let v = ResidualView::new(&g, g.nodes());
        assert_eq!(v.node_count(), 0);
        assert_eq!(v.edge_count(), 0);
        assert_eq!(v.nodes().count(), 0);
    }

    #[test]
    fn both_endpoint_rule() {
        let g = path();
        let v = ResidualView::new(&g, [NodeId(1)]);
        assert_eq!(v.nodes().collect::<Vec<_>>(), vec![NodeId(0), NodeId(2)]);
        assert_eq!(v.edge_count(), 0);
        assert_eq!(v.out_degree(NodeId(0)), 0);
        assert_eq!(v.in_degree(NodeId(2)), 0);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn duplicate_exclusions_counted_once() {
        let g = path();
        let v = ResidualView::new(&g, [NodeId(2), NodeId(2)]);
        assert_eq!(v.node_count(), 2);
    }
}
