//! Community splits, query generation and quality metrics.

pub mod metrics;
pub mod queries;
pub mod split;

pub use metrics::{avg_degree, cpj, f1_suite, jaccard, pair_scores, PrecisionRecall};
pub use queries::{format_queries, gen_queries, parse_queries, LabeledQuery};
pub use split::{parse_communities, split_communities, CommunitySplit};
