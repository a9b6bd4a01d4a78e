//! From node scores to a connected community.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::eval::metrics::pair_scores;
use crate::subgraph::CandidateSubgraph;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    grid: Vec<f64>,
}

impl ThresholdPolicy {
    pub fn new(grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("threshold grid is empty".into()));
        }
        if grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("threshold grid must be strictly ascending inside (0, 1)".into()));
        }
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
}

impl Default for ThresholdPolicy {
    /// 0.05, 0.10, ..., 0.95.
    fn default() -> Self {
        Self { grid: (1..20).map(|i| i as f64 / 20.0).collect() }
    }
}

/// Nodes scoring above `threshold` that are reachable from a query node
/// through above-threshold nodes, plus the query nodes themselves.
///
/// Works on local ids and returns them ascending.
pub fn constrained_bfs_local(
    sub: &CandidateSubgraph,
    scores: &[f64],
    query_local: &[usize],
    threshold: f64,
) -> Vec<usize> {
    let n = sub.node_count();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &q in query_local {
        if !seen[q] {
            seen[q] = true;
            queue.push_back(q);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in sub.neighbors(v) {
            if !seen[u] && scores[u] > threshold {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

/// [`constrained_bfs_local`] over global ids.
pub fn constrained_bfs(
    sub: &CandidateSubgraph,
    scores: &[f64],
    query_nodes: &[usize],
    threshold: f64,
) -> Result<Vec<usize>> {
    if scores.len() != sub.node_count() {
        return Err(Error::Shape { op: "constrained_bfs", lhs: (sub.node_count(), 1), rhs: (scores.len(), 1) });
    }
    let local =
        query_nodes.iter().map(|&v| sub.to_local(v).ok_or(Error::UnknownNode(v))).collect::<Result<Vec<_>>>()?;
    Ok(constrained_bfs_local(sub, scores, &local, threshold).into_iter().map(|v| sub.to_global(v)).collect())
}

/// One validation query with its scores.
#[derive(Debug, Clone, Copy)]
pub struct ScoredQuery<'a> {
    pub sub: &'a CandidateSubgraph,
    pub scores: &'a [f64],
    pub query_local: &'a [usize],
    /// Ground truth in global ids, ascending.
    pub truth: &'a [usize],
}

/// Grid threshold with the best mean per-query F1; ties go to the lowest.
///
/// Returns the threshold and its mean F1.
pub fn select_threshold(cases: &[ScoredQuery<'_>], policy: &ThresholdPolicy) -> Result<(f64, f64)> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("threshold selection needs validation queries".into()));
    }
    let mut best = (policy.grid[0], f64::NEG_INFINITY);
    for &t in &policy.grid {
        let mut total = 0.0;
        for case in cases {
            let mut pred: Vec<usize> = constrained_bfs_local(case.sub, case.scores, case.query_local, t)
                .into_iter()
                .map(|v| case.sub.to_global(v))
                .collect();
            pred.sort_unstable();
            total += pair_scores(case.truth, &pred).f1;
        }
        let mean = total / cases.len() as f64;
        if mean > best.1 {
            best = (t, mean);
        }
    }
    Ok(best)
}
