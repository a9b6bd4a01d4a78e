use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// How a query's attribute set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttrMode {
    /// No query attributes.
    Empty,
    /// One attribute drawn from the target community's most frequent ones.
    FromCommunity,
    /// Attributes taken from the query nodes themselves.
    FromNodes,
    /// Supplied by hand.
    Manual,
}

impl AttrMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttrMode::Empty => "EmA",
            AttrMode::FromCommunity => "AFC",
            AttrMode::FromNodes => "AFN",
            AttrMode::Manual => "manual",
        }
    }
}

impl fmt::Display for AttrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ema" | "empty" => Ok(AttrMode::Empty),
            "afc" => Ok(AttrMode::FromCommunity),
            "afn" => Ok(AttrMode::FromNodes),
            "manual" => Ok(AttrMode::Manual),
            other => Err(Error::InvalidArgument(format!("unknown attribute mode {other:?}"))),
        }
    }
}

/// Query nodes plus query attributes, both as dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub nodes: Vec<usize>,
    pub attrs: Vec<usize>,
    pub mode: AttrMode,
}

impl Query {
    pub fn new(nodes: impl IntoIterator<Item = usize>, attrs: impl IntoIterator<Item = usize>) -> Self {
        let mut nodes: Vec<usize> = nodes.into_iter().collect();
        let mut attrs: Vec<usize> = attrs.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        attrs.sort_unstable();
        attrs.dedup();
        let mode = if attrs.is_empty() { AttrMode::Empty } else { AttrMode::Manual };
        Self { nodes, attrs, mode }
    }

    pub fn with_mode(mut self, mode: AttrMode) -> Self {
        self.mode = mode;
        self
    }
}
