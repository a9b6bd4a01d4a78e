use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Communities are only split when there are at least this many.
pub const MIN_SPLIT: usize = 10;

/// Reads one community per line as whitespace-separated node tokens.
pub fn parse_communities<'a, I>(g: &AttributedGraph, lines: I) -> Result<Vec<Vec<usize>>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = Vec::new();
    for line in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut c = g.node_ids(t.split_whitespace())?;
        c.sort_unstable();
        c.dedup();
        out.push(c);
    }
    Ok(out)
}

/// Community indices assigned to each role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    /// False when every role shares all communities.
    pub disjoint: bool,
}

/// Splits `count` communities roughly 5:1:4.
pub fn split_communities<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<CommunitySplit> {
    if count == 0 {
        return Err(Error::InvalidArgument("no communities to split".into()));
    }
    let all: Vec<usize> = (0..count).collect();
    if count < MIN_SPLIT {
        warn!("only {count} communities; train, validation and test share all of them");
        return Ok(CommunitySplit { train: all.clone(), val: all.clone(), test: all, disjoint: false });
    }
    let mut order = all;
    order.shuffle(rng);
    let n_train = (count as f64 * 0.5).round() as usize;
    let n_val = ((count as f64 * 0.1).round() as usize).max(1);
    let mut rest = order.split_off(n_train);
    let test = rest.split_off(n_val);
    Ok(CommunitySplit { train: order, val: rest, test, disjoint: true })
}
