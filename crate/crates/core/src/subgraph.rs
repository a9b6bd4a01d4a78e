use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Induced subgraph with local ids `0..n` ordered by ascending global id.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSubgraph {
    global: Vec<usize>,
    local: HashMap<usize, usize>,
    adjacency: Vec<Vec<usize>>,
    attributes: Vec<Vec<usize>>,
    edge_count: usize,
}

impl CandidateSubgraph {
    pub fn node_count(&self) -> usize {
        self.global.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Local neighbours of local node `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Global attribute ids of local node `v`.
    pub fn attributes(&self, v: usize) -> &[usize] {
        &self.attributes[v]
    }

    pub fn to_global(&self, v: usize) -> usize {
        self.global[v]
    }

    pub fn to_local(&self, global: usize) -> Option<usize> {
        self.local.get(&global).copied()
    }

    /// Global ids, ascending.
    pub fn global_ids(&self) -> &[usize] {
        &self.global
    }

    /// Sum of the members' degrees in the host graph.
    pub fn host_degree_sum(&self, host: &AttributedGraph) -> usize {
        self.global.iter().map(|&v| host.degree(v)).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }
}

/// Keeps exactly the edges of `g` with both endpoints in `nodes`.
pub fn induced_subgraph(g: &AttributedGraph, nodes: &[usize]) -> Result<CandidateSubgraph> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let mut global = nodes.to_vec();
    for &v in &global {
        g.check_node(v)?;
    }
    global.sort_unstable();
    global.dedup();
    let local: HashMap<usize, usize> = global.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut edge_count = 0;
    let adjacency: Vec<Vec<usize>> = global
        .iter()
        .map(|&v| {
            // host lists are sorted and local order follows global order,
            // so the mapped list stays sorted
            let list: Vec<usize> = g.neighbors(v).iter().filter_map(|u| local.get(u).copied()).collect();
            edge_count += list.len();
            list
        })
        .collect();
    let attributes = global.iter().map(|&v| g.attributes(v).to_vec()).collect();
    Ok(CandidateSubgraph { global, local, adjacency, attributes, edge_count: edge_count / 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_node_set_is_an_error() {
        let g = AttributedGraph::ingest(["a b"], []).unwrap();
        assert!(matches!(induced_subgraph(&g, &[]), Err(Error::EmptyNodeSet)));
    }

    #[test]
    fn two_disconnected_nodes_have_no_edges() {
        let g = AttributedGraph::ingest(["a b", "b c"], []).unwrap();
        let sub = induced_subgraph(&g, &[0, 2]).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 0);
    }

    #[test]
    fn whole_node_set_reproduces_the_graph() {
        let g = AttributedGraph::ingest(["a b", "b c", "c a", "c d"], ["d\tx,y"]).unwrap();
        let all: Vec<usize> = (0..g.node_count()).rev().collect();
        let sub = induced_subgraph(&g, &all).unwrap();
        assert_eq!(sub.edge_count(), g.edge_count());
        for v in 0..g.node_count() {
            assert_eq!(sub.to_global(v), v);
            assert_eq!(sub.neighbors(v), g.neighbors(v));
            assert_eq!(sub.attributes(v), g.attributes(v));
        }
    }
}
