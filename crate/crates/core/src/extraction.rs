//! Adaptive candidate subgraph extraction.
//!
//! Two branches grow hop balls around the query. The structure branch grows
//! over the graph from the query nodes and scores each ball with density
//! sketch modularity; the attribute branch grows over the node–attribute
//! graph from the query attributes and scores with bipartite modularity.
//! A ball is merged into the selection whenever its score strictly beats
//! every earlier ball of the same branch. The candidate is the subgraph
//! induced by the query nodes plus both selections.

use log::warn;

use crate::bipartite::BipartiteGraph;
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::graph::CommunityStats;
use crate::modularity::{dsm_from_stats, ModularityParams};
use crate::query::Query;
use crate::subgraph::{induced_subgraph, CandidateSubgraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    pub params: ModularityParams,
    /// Hop cap applied to both branches.
    pub max_hops: Option<usize>,
    /// Additional cap for the attribute branch.
    pub attr_max_hops: Option<usize>,
}

impl ExtractionConfig {
    pub const DEFAULT_ATTR_MAX_HOPS: usize = 2;

    pub fn new(tau: f64) -> Result<Self> {
        Ok(Self { params: ModularityParams::new(tau)?, ..Self::default() })
    }

    pub fn validate(&self) -> Result<()> {
        for cap in [self.max_hops, self.attr_max_hops].into_iter().flatten() {
            if cap == 0 {
                return Err(Error::InvalidArgument("hop caps must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn attr_cap(&self) -> Option<usize> {
        match (self.max_hops, self.attr_max_hops) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { params: ModularityParams::default(), max_hops: None, attr_max_hops: Some(Self::DEFAULT_ATTR_MAX_HOPS) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Structure,
    Attribute,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Structure => "structure",
            Branch::Attribute => "attribute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub branch: Branch,
    pub hop: usize,
    pub modularity: f64,
}

/// Selection made by one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    /// Selected graph nodes, ascending.
    pub nodes: Vec<usize>,
    /// Hop of the last strictly improving ball; 0 when no ball improved.
    pub best_hop: usize,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub candidate: CandidateSubgraph,
    pub structure_nodes: Vec<usize>,
    pub attribute_nodes: Vec<usize>,
    pub best_struct_hop: usize,
    pub best_attr_hop: usize,
    pub trace: Vec<TracePoint>,
}

/// Structure-based pruning.
pub fn structure_prune(g: &AttributedGraph, query_nodes: &[usize], cfg: &ExtractionConfig) -> Result<BranchOutcome> {
    if query_nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let n = g.node_count();
    let mut in_ball = vec![false; n];
    let mut selected = vec![false; n];
    let mut frontier = Vec::new();
    let mut stats = CommunityStats { size: 0, internal_edges: 0, degree_sum: 0 };
    let add = |v: usize, in_ball: &mut Vec<bool>, stats: &mut CommunityStats| {
        stats.internal_edges += g.neighbors(v).iter().filter(|&&u| in_ball[u]).count();
        stats.degree_sum += g.degree(v);
        stats.size += 1;
        in_ball[v] = true;
    };
    for &v in query_nodes {
        g.check_node(v)?;
        if !in_ball[v] {
            add(v, &mut in_ball, &mut stats);
            selected[v] = true;
            frontier.push(v);
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_hop = 0;
    let mut trace = Vec::new();
    let mut hop = 0;
    while stats.size < n && cfg.max_hops.is_none_or(|cap| hop < cap) {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in g.neighbors(v) {
                if !in_ball[u] {
                    add(u, &mut in_ball, &mut stats);
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        hop += 1;
        frontier = next;
        let value = dsm_from_stats(&stats, g.edge_count(), cfg.params.tau());
        trace.push(TracePoint { branch: Branch::Structure, hop, modularity: value });
        if value > best {
            best = value;
            best_hop = hop;
            for (v, &inside) in in_ball.iter().enumerate() {
                if inside {
                    selected[v] = true;
                }
            }
        }
    }
    Ok(BranchOutcome { nodes: (0..n).filter(|&v| selected[v]).collect(), best_hop, trace })
}

/// Attribute-based pruning over the node–attribute graph.
///
/// Returns only graph nodes. Unknown attribute ids are skipped with a warning.
pub fn attribute_prune(bg: &BipartiteGraph, query_attrs: &[usize], cfg: &ExtractionConfig) -> BranchOutcome {
    let empty = BranchOutcome { nodes: Vec::new(), best_hop: 0, trace: Vec::new() };
    let mut seeds: Vec<usize> = Vec::new();
    for &l in query_attrs {
        if l < bg.l_count() {
            seeds.push(l);
        } else {
            warn!("query attribute id {l} is not in the vocabulary; skipped");
        }
    }
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return empty;
    }

    let u_count = bg.u_count();
    let total = bg.total_nodes();
    let m = bg.edge_count() as f64;
    let mut in_ball = vec![false; total];
    let mut selected = vec![false; u_count];
    let (mut internal, mut d_u, mut d_l, mut size) = (0usize, 0usize, 0usize, 0usize);
    let mut add = |x: usize, in_ball: &mut Vec<bool>| {
        internal += bg.unified_neighbors(x).filter(|&y| in_ball[y]).count();
        if x < u_count {
            d_u += bg.u_degree(x);
        } else {
            d_l += bg.l_degree(x - u_count);
        }
        size += 1;
        in_ball[x] = true;
        (internal, d_u, d_l, size)
    };
    let mut frontier = Vec::new();
    let mut counts = (0, 0, 0, 0);
    for &l in &seeds {
        let x = bg.l_node(l);
        counts = add(x, &mut in_ball);
        frontier.push(x);
    }

    let cap = cfg.attr_cap();
    let mut best = f64::NEG_INFINITY;
    let mut best_hop = 0;
    let mut trace = Vec::new();
    let mut hop = 0;
    while counts.3 < total && cap.is_none_or(|c| hop < c) {
        let mut next = Vec::new();
        for &x in &frontier {
            for y in bg.unified_neighbors(x) {
                if !in_ball[y] {
                    counts = add(y, &mut in_ball);
                    next.push(y);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        hop += 1;
        frontier = next;
        let (internal, d_u, d_l, _) = counts;
        let value = (2.0 * internal as f64 - (d_u as f64) * (d_l as f64) / m) / m;
        trace.push(TracePoint { branch: Branch::Attribute, hop, modularity: value });
        if value > best {
            best = value;
            best_hop = hop;
            for (u, flag) in selected.iter_mut().enumerate() {
                *flag |= in_ball[u];
            }
        }
    }
    BranchOutcome { nodes: (0..u_count).filter(|&u| selected[u]).collect(), best_hop, trace }
}

/// Runs both branches and induces the candidate subgraph.
pub fn extract(
    g: &AttributedGraph,
    bg: &BipartiteGraph,
    query: &Query,
    cfg: &ExtractionConfig,
) -> Result<ExtractionResult> {
    cfg.validate()?;
    let structure = structure_prune(g, &query.nodes, cfg)?;
    let attribute = attribute_prune(bg, &query.attrs, cfg);
    let mut nodes = query.nodes.clone();
    nodes.extend_from_slice(&structure.nodes);
    nodes.extend_from_slice(&attribute.nodes);
    nodes.sort_unstable();
    nodes.dedup();
    let candidate = induced_subgraph(g, &nodes)?;
    let mut trace = structure.trace;
    trace.extend(attribute.trace);
    Ok(ExtractionResult {
        candidate,
        structure_nodes: structure.nodes,
        attribute_nodes: attribute.nodes,
        best_struct_hop: structure.best_hop,
        best_attr_hop: attribute.best_hop,
        trace,
    })
}
