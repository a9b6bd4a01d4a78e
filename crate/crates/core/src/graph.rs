//! Attributed graph storage, ingestion and neighbourhood queries.
//!
//! Nodes and attributes are addressed by dense ids assigned in
//! first-appearance order while reading the input files. The graph is
//! simple and undirected: self-loops and repeated edges are dropped during
//! ingestion, and every edge is stored in both endpoint lists.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Immutable undirected graph with a set of attribute ids per node.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    adjacency: Vec<Vec<usize>>,
    attributes: Vec<Vec<usize>>,
    node_tokens: Vec<String>,
    node_index: HashMap<String, usize>,
    attr_tokens: Vec<String>,
    attr_index: HashMap<String, usize>,
    edge_count: usize,
}

#[derive(Default)]
struct Builder {
    adjacency: Vec<Vec<usize>>,
    attributes: Vec<Vec<usize>>,
    node_tokens: Vec<String>,
    node_index: HashMap<String, usize>,
    attr_tokens: Vec<String>,
    attr_index: HashMap<String, usize>,
}

impl Builder {
    fn node(&mut self, token: &str) -> usize {
        if let Some(&id) = self.node_index.get(token) {
            return id;
        }
        let id = self.node_tokens.len();
        self.node_tokens.push(token.to_owned());
        self.node_index.insert(token.to_owned(), id);
        self.adjacency.push(Vec::new());
        self.attributes.push(Vec::new());
        id
    }

    fn attr(&mut self, token: &str) -> usize {
        if let Some(&id) = self.attr_index.get(token) {
            return id;
        }
        let id = self.attr_tokens.len();
        self.attr_tokens.push(token.to_owned());
        self.attr_index.insert(token.to_owned(), id);
        id
    }

    fn finish(mut self) -> AttributedGraph {
        let mut doubled = 0;
        for list in &mut self.adjacency {
            list.sort_unstable();
            list.dedup();
            doubled += list.len();
        }
        for set in &mut self.attributes {
            set.sort_unstable();
            set.dedup();
        }
        AttributedGraph {
            adjacency: self.adjacency,
            attributes: self.attributes,
            node_tokens: self.node_tokens,
            node_index: self.node_index,
            attr_tokens: self.attr_tokens,
            attr_index: self.attr_index,
            edge_count: doubled / 2,
        }
    }
}

fn is_blank_or_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

impl AttributedGraph {
    /// Parses an edge list and an attribute list.
    ///
    /// Edge lines hold exactly two whitespace-separated node tokens. Attribute
    /// lines are `node<TAB>attr1,attr2,...`; a node that only appears there is
    /// added as an isolated node. Blank lines and lines starting with `#` are
    /// skipped in both inputs.
    pub fn ingest<'a, E, A>(edge_lines: E, attr_lines: A) -> Result<Self>
    where
        E: IntoIterator<Item = &'a str>,
        A: IntoIterator<Item = &'a str>,
    {
        let mut b = Builder::default();
        for (i, line) in edge_lines.into_iter().enumerate() {
            if is_blank_or_comment(line) {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (u, v) = match (parts.next(), parts.next(), parts.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("edge line must hold two node tokens: {line:?}"),
                    })
                }
            };
            let u = b.node(u);
            let v = b.node(v);
            if u != v {
                b.adjacency[u].push(v);
                b.adjacency[v].push(u);
            }
        }
        for (i, line) in attr_lines.into_iter().enumerate() {
            if is_blank_or_comment(line) {
                continue;
            }
            let Some((node, attrs)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("attribute line must be node<TAB>attrs: {line:?}"),
                });
            };
            let node = node.trim();
            if node.is_empty() || node.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("bad node token in attribute line: {line:?}"),
                });
            }
            let v = b.node(node);
            for attr in attrs.split(',').map(str::trim).filter(|a| !a.is_empty()) {
                let a = b.attr(attr);
                b.attributes[v].push(a);
            }
        }
        Ok(b.finish())
    }

    /// Reads the edge file and, when given, the attribute file.
    pub fn from_files(edges: &Path, attrs: Option<&Path>) -> Result<Self> {
        let edge_text = fs::read_to_string(edges)?;
        let attr_text = match attrs {
            Some(p) => fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::ingest(edge_text.lines(), attr_text.lines())
    }

    /// Builds a graph over nodes `0..n` named by their decimal index.
    ///
    /// Attributes are given as ids and named `a<id>`; `attr_count` fixes the
    /// vocabulary size so unused ids still exist.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], attrs: &[Vec<usize>], attr_count: usize) -> Result<Self> {
        let mut b = Builder::default();
        for v in 0..n {
            b.node(&v.to_string());
        }
        for a in 0..attr_count {
            b.attr(&format!("a{a}"));
        }
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::UnknownNode(u));
            }
            if v >= n {
                return Err(Error::UnknownNode(v));
            }
            if u != v {
                b.adjacency[u].push(v);
                b.adjacency[v].push(u);
            }
        }
        for (v, set) in attrs.iter().enumerate().take(n) {
            for &a in set {
                if a >= attr_count {
                    return Err(Error::InvalidArgument(format!("attribute id {a} out of range {attr_count}")));
                }
                b.attributes[v].push(a);
            }
        }
        Ok(b.finish())
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of distinct attributes, |F^d|.
    pub fn attr_count(&self) -> usize {
        self.attr_tokens.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(u).is_some_and(|list| list.binary_search(&v).is_ok())
    }

    /// Sorted attribute ids of `v`.
    pub fn attributes(&self, v: usize) -> &[usize] {
        &self.attributes[v]
    }

    pub fn node_token(&self, v: usize) -> &str {
        &self.node_tokens[v]
    }

    pub fn node_id(&self, token: &str) -> Option<usize> {
        self.node_index.get(token).copied()
    }

    pub fn attr_token(&self, a: usize) -> &str {
        &self.attr_tokens[a]
    }

    pub fn attr_id(&self, token: &str) -> Option<usize> {
        self.attr_index.get(token).copied()
    }

    /// Resolves node tokens, failing on the first unknown one.
    pub fn node_ids<'a, I: IntoIterator<Item = &'a str>>(&self, tokens: I) -> Result<Vec<usize>> {
        tokens.into_iter().map(|t| self.node_id(t).ok_or_else(|| Error::UnknownToken(t.to_owned()))).collect()
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    /// All nodes within `k` hops of any seed, seeds included, ascending.
    pub fn k_hop_frontier(&self, seeds: &[usize], k: usize) -> Result<Vec<usize>> {
        let n = self.node_count();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &s in seeds {
            self.check_node(s)?;
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            if dist[v] == k {
                continue;
            }
            for &u in &self.adjacency[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        Ok((0..n).filter(|&v| dist[v] != usize::MAX).collect())
    }

    /// Iterates over all undirected edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }
}

/// Counts that every modularity variant is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommunityStats {
    pub size: usize,
    /// |E_C|: edges with both endpoints in the community.
    pub internal_edges: usize,
    /// d_C: sum of host-graph degrees of the members.
    pub degree_sum: usize,
}

/// A node set of a host graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Community {
    members: Vec<usize>,
}

impl Community {
    /// Validates the ids against `g`; duplicates are collapsed.
    pub fn new(g: &AttributedGraph, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        for &v in &members {
            g.check_node(v)?;
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn stats(&self, g: &AttributedGraph) -> CommunityStats {
        community_stats(g, &self.members)
    }
}

/// Exact integer counts for a set of distinct node ids.
pub fn community_stats(g: &AttributedGraph, members: &[usize]) -> CommunityStats {
    let mut inside = vec![false; g.node_count()];
    for &v in members {
        inside[v] = true;
    }
    let mut degree_sum = 0;
    let mut doubled = 0;
    for &v in members {
        degree_sum += g.degree(v);
        doubled += g.neighbors(v).iter().filter(|&&u| inside[u]).count();
    }
    CommunityStats { size: members.len(), internal_edges: doubled / 2, degree_sum }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_edges_are_dropped() {
        let g = AttributedGraph::ingest(["a b", "b c", "a b"], []).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn self_loop_is_dropped() {
        let g = AttributedGraph::ingest(["a a"], []).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn reversed_duplicate_is_dropped() {
        let g = AttributedGraph::ingest(["a b", "b a"], []).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn ids_follow_first_appearance() {
        let g = AttributedGraph::ingest(["# header", "x y", "", "z x"], ["w\tp,q", "x\tq"]).unwrap();
        assert_eq!(g.node_id("x"), Some(0));
        assert_eq!(g.node_id("y"), Some(1));
        assert_eq!(g.node_id("z"), Some(2));
        assert_eq!(g.node_id("w"), Some(3));
        assert_eq!(g.degree(3), 0);
        assert_eq!(g.attr_id("p"), Some(0));
        assert_eq!(g.attributes(0), &[1]);
    }

    #[test]
    fn malformed_edge_line_reports_line_number() {
        let err = AttributedGraph::ingest(["a b", "a b c"], []).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let err = AttributedGraph::ingest(["lonely"], []).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn attribute_line_without_tab_is_rejected() {
        let err = AttributedGraph::ingest(["a b"], ["a\tDB", "b DB"]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn k_hop_zero_is_the_seed_set() {
        let g = AttributedGraph::ingest(["a b", "b c"], []).unwrap();
        assert_eq!(g.k_hop_frontier(&[2, 0], 0).unwrap(), vec![0, 2]);
        assert!(matches!(g.k_hop_frontier(&[9], 1), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn community_counts_on_path() {
        let g = AttributedGraph::ingest(["a b", "b c"], []).unwrap();
        let c = Community::new(&g, [1, 0, 0]).unwrap();
        assert_eq!(c.members(), &[0, 1]);
        assert_eq!(c.stats(&g), CommunityStats { size: 2, internal_edges: 1, degree_sum: 3 });
    }
}
