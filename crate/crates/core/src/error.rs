use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("unknown node token {0:?}")]
    UnknownToken(String),

    #[error("empty node set")]
    EmptyNodeSet,

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("graph has {nodes} nodes; brute-force enumeration is limited to {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
