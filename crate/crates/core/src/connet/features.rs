use std::rc::Rc;

use crate::autodiff::Matrix;
use crate::error::{Error, Result};
use crate::query::Query;
use crate::subgraph::CandidateSubgraph;

/// Initial inputs of one (candidate, query) pair.
///
/// The structure-branch node input is the candidate-local identity and is not
/// stored; the query vectors are padded with zeros to `struct_width`.
#[derive(Debug, Clone)]
pub struct Features {
    /// Candidate size.
    pub n: usize,
    /// 1×struct_width, bit i set when local node i is a query node.
    pub query_nodes: Matrix,
    /// 1×struct_width, bit i set when local node i carries a query attribute.
    pub query_attrs: Matrix,
    /// n×attr_width multi-hot of node attributes.
    pub node_attrs: Matrix,
    pub adjacency: Rc<Vec<Vec<usize>>>,
    /// Dense 0/1 adjacency, n×n.
    pub adjacency_dense: Matrix,
    /// Local ids of the query nodes.
    pub query_local: Vec<usize>,
}

pub fn init_features(
    sub: &CandidateSubgraph,
    query: &Query,
    struct_width: usize,
    attr_width: usize,
) -> Result<Features> {
    let n = sub.node_count();
    if n > struct_width {
        return Err(Error::TooLarge { nodes: n, limit: struct_width });
    }
    let mut query_local = Vec::with_capacity(query.nodes.len());
    let mut query_nodes = Matrix::zeros(1, struct_width);
    for &v in &query.nodes {
        let local = sub.to_local(v).ok_or(Error::UnknownNode(v))?;
        query_nodes.set(0, local, 1.0);
        query_local.push(local);
    }
    let mut query_attrs = Matrix::zeros(1, struct_width);
    let mut node_attrs = Matrix::zeros(n, attr_width);
    let mut adjacency = Vec::with_capacity(n);
    let mut adjacency_dense = Matrix::zeros(n, n);
    for v in 0..n {
        let attrs = sub.attributes(v);
        for &a in attrs {
            if a >= attr_width {
                return Err(Error::InvalidArgument(format!(
                    "attribute id {a} exceeds the model's attribute width {attr_width}"
                )));
            }
            node_attrs.set(v, a, 1.0);
        }
        if attrs.iter().any(|a| query.attrs.binary_search(a).is_ok()) {
            query_attrs.set(0, v, 1.0);
        }
        for &u in sub.neighbors(v) {
            adjacency_dense.set(v, u, 1.0);
        }
        adjacency.push(sub.neighbors(v).to_vec());
    }
    Ok(Features {
        n,
        query_nodes,
        query_attrs,
        node_attrs,
        adjacency: Rc::new(adjacency),
        adjacency_dense,
        query_local,
    })
}

impl Features {
    /// Row weights averaging the query nodes.
    pub fn query_node_pool(&self) -> Matrix {
        pool_weights(&self.query_nodes, self.n)
    }

    /// Row weights averaging the nodes that carry a query attribute, or all
    /// nodes when none does.
    pub fn query_attr_pool(&self) -> Matrix {
        pool_weights(&self.query_attrs, self.n)
    }
}

fn pool_weights(bits: &Matrix, n: usize) -> Matrix {
    let hits = bits.data()[..n].iter().filter(|&&b| b > 0.0).count();
    let mut w = Matrix::zeros(1, n);
    for i in 0..n {
        let value = if hits == 0 { 1.0 / n as f64 } else { bits.get(0, i) / hits as f64 };
        w.set(0, i, value);
    }
    w
}
