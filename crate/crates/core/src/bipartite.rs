//! Node–attribute bipartite graph.
//!
//! The U side holds the graph nodes, the L side one node per distinct
//! attribute, and (u, l) is an edge exactly when node u carries attribute l.
//! For traversal both sides share one id space: U nodes keep their ids and
//! attribute l becomes `u_count + l`.

use crate::graph::AttributedGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    u_adj: Vec<Vec<usize>>,
    l_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BipartiteGraph {
    pub fn from_graph(g: &AttributedGraph) -> Self {
        let mut l_adj = vec![Vec::new(); g.attr_count()];
        let mut u_adj = Vec::with_capacity(g.node_count());
        let mut edge_count = 0;
        for v in 0..g.node_count() {
            let attrs = g.attributes(v).to_vec();
            for &a in &attrs {
                l_adj[a].push(v);
            }
            edge_count += attrs.len();
            u_adj.push(attrs);
        }
        Self { u_adj, l_adj, edge_count }
    }

    pub fn u_count(&self) -> usize {
        self.u_adj.len()
    }

    pub fn l_count(&self) -> usize {
        self.l_adj.len()
    }

    /// |E_B|.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Attributes of graph node `u`.
    pub fn u_neighbors(&self, u: usize) -> &[usize] {
        &self.u_adj[u]
    }

    /// Graph nodes carrying attribute `l`.
    pub fn l_neighbors(&self, l: usize) -> &[usize] {
        &self.l_adj[l]
    }

    pub fn u_degree(&self, u: usize) -> usize {
        self.u_adj[u].len()
    }

    pub fn l_degree(&self, l: usize) -> usize {
        self.l_adj[l].len()
    }

    /// Size of the shared id space, |U| + |L|.
    pub fn total_nodes(&self) -> usize {
        self.u_count() + self.l_count()
    }

    /// Shared-space id of attribute `l`.
    pub fn l_node(&self, l: usize) -> usize {
        self.u_count() + l
    }

    /// Neighbours of a shared-space id, themselves in shared-space ids.
    pub fn unified_neighbors(&self, x: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        let offset = self.u_count();
        if x < offset {
            Box::new(self.u_adj[x].iter().map(move |&l| l + offset))
        } else {
            Box::new(self.l_adj[x - offset].iter().copied())
        }
    }
}

/// Builds the node–attribute bipartite graph of `g`.
pub fn build_bipartite(g: &AttributedGraph) -> BipartiteGraph {
    BipartiteGraph::from_graph(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn attribute_free_graph_has_empty_l_side() {
        let g = AttributedGraph::ingest(["a b"], []).unwrap();
        let bg = build_bipartite(&g);
        assert_eq!(bg.u_count(), 2);
        assert_eq!(bg.l_count(), 0);
        assert_eq!(bg.edge_count(), 0);
    }

    #[test]
    fn single_node_with_three_attributes() {
        let g = AttributedGraph::ingest([], ["v\tx,y,z"]).unwrap();
        let bg = build_bipartite(&g);
        assert_eq!(bg.edge_count(), 3);
        assert_eq!(bg.u_degree(0), 3);
        let unified: Vec<usize> = bg.unified_neighbors(bg.l_node(1)).collect();
        assert_eq!(unified, vec![0]);
    }

    proptest! {
        #[test]
        fn incidence_round_trips(attrs in prop::collection::vec(prop::collection::btree_set(0usize..6, 0..4), 1..12)) {
            let sets: Vec<Vec<usize>> = attrs.iter().map(|s| s.iter().copied().collect()).collect();
            let g = AttributedGraph::from_edges(sets.len(), &[], &sets, 6).unwrap();
            let bg = build_bipartite(&g);
            let u_sum: usize = (0..bg.u_count()).map(|u| bg.u_degree(u)).sum();
            let l_sum: usize = (0..bg.l_count()).map(|l| bg.l_degree(l)).sum();
            prop_assert_eq!(u_sum, bg.edge_count());
            prop_assert_eq!(l_sum, bg.edge_count());
            // rebuild every attribute set from the L side
            let mut rebuilt = vec![Vec::new(); bg.u_count()];
            for l in 0..bg.l_count() {
                for &u in bg.l_neighbors(l) {
                    rebuilt[u].push(l);
                }
            }
            for (u, set) in rebuilt.iter_mut().enumerate() {
                set.sort_unstable();
                prop_assert_eq!(&set[..], g.attributes(u));
            }
        }
    }
}
