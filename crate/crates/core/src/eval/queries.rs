use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::query::{AttrMode, Query};

/// Query nodes are drawn from the target community, at most this many.
pub const MAX_QUERY_NODES: usize = 3;
/// Community-frequent attributes considered by AFC.
pub const AFC_POOL: usize = 5;
/// Cap on AFN query attributes.
pub const AFN_CAP: usize = 3;

/// A query paired with its ground-truth community.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledQuery {
    pub query: Query,
    /// Ground truth, ascending global ids.
    pub truth: Vec<usize>,
}

/// The `AFC_POOL` most frequent attributes among `members`, ties by id.
pub fn frequent_attributes(g: &AttributedGraph, members: &[usize]) -> Vec<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &v in members {
        for &a in g.attributes(v) {
            *counts.entry(a).or_default() += 1;
        }
    }
    let mut ranked: Vec<(usize, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.into_iter().take(AFC_POOL).map(|(a, _)| a).collect()
}

fn query_attributes<R: Rng + ?Sized>(
    g: &AttributedGraph,
    community: &[usize],
    nodes: &[usize],
    mode: AttrMode,
    rng: &mut R,
) -> (Vec<usize>, AttrMode) {
    match mode {
        AttrMode::Empty | AttrMode::Manual => (Vec::new(), AttrMode::Empty),
        AttrMode::FromCommunity => {
            let pool = frequent_attributes(g, community);
            match pool.choose(rng) {
                Some(&a) => (vec![a], AttrMode::FromCommunity),
                None => {
                    warn!("community has no attributes; query falls back to an empty attribute set");
                    (Vec::new(), AttrMode::Empty)
                }
            }
        }
        AttrMode::FromNodes => {
            let union: Vec<usize> = nodes
                .iter()
                .flat_map(|&v| g.attributes(v).iter().copied())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let attrs = if union.len() > AFN_CAP {
                let mut picked: Vec<usize> =
                    index::sample(rng, union.len(), AFN_CAP).into_iter().map(|i| union[i]).collect();
                picked.sort_unstable();
                picked
            } else {
                union
            };
            (attrs, AttrMode::FromNodes)
        }
    }
}

/// `count` queries over the communities listed in `pool`.
///
/// Each picks a community uniformly, then 1 to 3 of its members uniformly.
pub fn gen_queries<R: Rng + ?Sized>(
    g: &AttributedGraph,
    communities: &[Vec<usize>],
    pool: &[usize],
    count: usize,
    mode: AttrMode,
    rng: &mut R,
) -> Result<Vec<LabeledQuery>> {
    let usable: Vec<usize> = pool.iter().copied().filter(|&c| !communities[c].is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::InvalidArgument("no nonempty community to draw queries from".into()));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let c = &communities[*usable.choose(rng).expect("nonempty")];
        let k = rng.gen_range(1..=MAX_QUERY_NODES.min(c.len()));
        let nodes: Vec<usize> = index::sample(rng, c.len(), k).into_iter().map(|i| c[i]).collect();
        let (attrs, used) = query_attributes(g, c, &nodes, mode, rng);
        let mut truth = c.clone();
        truth.sort_unstable();
        out.push(LabeledQuery { query: Query::new(nodes, attrs).with_mode(used), truth });
    }
    Ok(out)
}

/// One query per line: `nodes<TAB>attrs<TAB>truth`, tokens space- or
/// comma-separated as in the input files; the truth column is optional.
pub fn format_queries(g: &AttributedGraph, queries: &[LabeledQuery]) -> String {
    let mut out = String::new();
    for q in queries {
        let nodes: Vec<&str> = q.query.nodes.iter().map(|&v| g.node_token(v)).collect();
        let attrs: Vec<&str> = q.query.attrs.iter().map(|&a| g.attr_token(a)).collect();
        let truth: Vec<&str> = q.truth.iter().map(|&v| g.node_token(v)).collect();
        writeln!(out, "{}\t{}\t{}", nodes.join(" "), attrs.join(","), truth.join(" ")).expect("string write");
    }
    out
}

/// Parsed query line; unknown attribute tokens are dropped with a warning.
pub fn parse_query_line(g: &AttributedGraph, line: &str, line_no: usize) -> Result<LabeledQuery> {
    let mut cols = line.split('\t');
    let nodes = cols.next().unwrap_or("");
    let nodes = g.node_ids(nodes.split_whitespace())?;
    if nodes.is_empty() {
        return Err(Error::Parse { line: line_no, message: "query nodes required".into() });
    }
    let mut attrs = Vec::new();
    for token in cols.next().unwrap_or("").split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match g.attr_id(token) {
            Some(a) => attrs.push(a),
            None => warn!("line {line_no}: query attribute {token:?} is not in the vocabulary; skipped"),
        }
    }
    let mut truth = g.node_ids(cols.next().unwrap_or("").split_whitespace())?;
    truth.sort_unstable();
    truth.dedup();
    let query = Query::new(nodes, attrs);
    Ok(LabeledQuery { query, truth })
}

pub fn parse_queries<'a, I>(g: &AttributedGraph, lines: I) -> Result<Vec<LabeledQuery>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = Vec::new();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_query_line(g, line, i + 1)?);
    }
    Ok(out)
}
