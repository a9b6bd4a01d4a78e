//! Attributed community search.
//!
//! Candidate extraction narrows a large attributed graph to a subgraph around
//! a query; a trainable scorer then decides which candidate nodes belong to
//! the query's community.

pub mod autodiff;
pub mod bipartite;
pub mod connet;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod fixtures;
pub mod graph;
pub mod modularity;
pub mod persist;
pub mod pipeline;
pub mod query;
pub mod search;
pub mod subgraph;
pub mod synth;

pub use bipartite::{build_bipartite, BipartiteGraph};
pub use error::{Error, Result};
pub use extraction::{extract, ExtractionConfig, ExtractionResult};
pub use graph::{AttributedGraph, Community, CommunityStats};
pub use modularity::ModularityParams;
pub use query::{AttrMode, Query};
pub use subgraph::{induced_subgraph, CandidateSubgraph};
