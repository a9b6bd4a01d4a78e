//! Reverse-mode differentiation over dense matrices.
//!
//! Parameters live in a [`ParamStore`] as shared matrices; a [`Tape`] copies
//! the handle when a parameter is read, so updating the store while a tape is
//! alive leaves the tape's recorded values untouched.

use std::rc::Rc;

use rand::Rng;

use super::matrix::{gemm, Matrix};
use crate::error::{Error, Result};

const BCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Rc<Matrix>>,
    grads: Vec<Matrix>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.names.push(name.into());
        self.grads.push(Matrix::zeros(value.rows(), value.cols()));
        self.values.push(Rc::new(value));
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    /// Copy-on-write access; tapes holding the old value keep it.
    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        Rc::make_mut(&mut self.values[id.0])
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    /// Adds a backward pass's gradients to the stored ones.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (id, g) in &grads.entries {
            self.grads[id.0].add_assign(g);
        }
    }

    /// Adds `g` to one parameter's stored gradient.
    pub fn accumulate_raw(&mut self, id: ParamId, g: &Matrix) {
        self.grads[id.0].add_assign(g);
    }

    pub fn param_count(&self) -> usize {
        self.values.iter().map(|v| v.rows() * v.cols()).sum()
    }
}

/// Gradients of one backward pass, keyed by parameter.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    entries: Vec<(ParamId, Matrix)>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.entries.iter().find(|(p, _)| *p == id).map(|(_, g)| g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulScalar(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    BroadcastRows(Var),
    Sum(Var),
    Frobenius(Var),
    SliceRows(Var, usize),
    Transpose(Var),
    Mask(Var, Matrix),
    Aggregate(Var, Rc<Vec<Vec<usize>>>),
    BceSum(Var, Matrix),
}

#[derive(Debug)]
struct Node {
    value: Rc<Matrix>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> Error {
    Error::Shape { op, lhs: a.shape(), rhs: b.shape() }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.push_rc(Rc::new(value), op)
    }

    fn push_rc(&mut self, value: Rc<Matrix>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.value(v).data()[0]
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Same value as `v`, cut off from the gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = Rc::clone(&self.nodes[v.0].value);
        self.push_rc(value, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let value = Rc::clone(&store.values[id.0]);
        self.push_rc(value, Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err(op, x, y));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds the 1×d row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(b));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(shape_err("add_row", x, r));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (o, b) in out.row_mut(i).iter_mut().zip(r.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::Scale(a, k))
    }

    /// `s * a` for a 1×1 variable `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let sv = self.value(s);
        if sv.shape() != (1, 1) {
            return Err(shape_err("mul_scalar", self.value(a), sv));
        }
        let k = sv.data()[0];
        let out = self.value(a).map(|x| x * k);
        Ok(self.push(out, Op::MulScalar(a, s)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        self.push(out, Op::SoftmaxRows(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = self.value(
            *parts.first().ok_or_else(|| Error::InvalidArgument("concat_cols needs at least one input".into()))?,
        );
        let rows = first.rows();
        let mut cols = 0;
        for &p in parts {
            let m = self.value(p);
            if m.rows() != rows {
                return Err(shape_err("concat_cols", first, m));
            }
            cols += m.cols();
        }
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(i);
                out.row_mut(i)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Repeats the 1×d row `a` into an n×d matrix.
    pub fn broadcast_rows(&mut self, a: Var, n: usize) -> Result<Var> {
        let r = self.value(a);
        if r.rows() != 1 {
            return Err(Error::Shape { op: "broadcast_rows", lhs: r.shape(), rhs: (n, r.cols()) });
        }
        let mut out = Matrix::zeros(n, r.cols());
        for i in 0..n {
            out.row_mut(i).copy_from_slice(r.data());
        }
        Ok(self.push(out, Op::BroadcastRows(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Matrix::scalar(s), Op::Sum(a))
    }

    pub fn frobenius_norm(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().map(|x| x * x).sum::<f64>().sqrt();
        self.push(Matrix::scalar(s), Op::Frobenius(a))
    }

    /// Rows `start..start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let x = self.value(a);
        if start + len > x.rows() {
            return Err(Error::Shape { op: "slice_rows", lhs: x.shape(), rhs: (start + len, x.cols()) });
        }
        let c = x.cols();
        let out = Matrix::from_vec(len, c, x.data()[start * c..(start + len) * c].to_vec())?;
        Ok(self.push(out, Op::SliceRows(a, start)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    /// Inverted dropout; identity when not training or when `rate` is 0.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, training: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let (r, c) = self.value(a).shape();
        let mask: Vec<f64> = (0..r * c).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect();
        let mask = Matrix::from_vec(r, c, mask)?;
        let out = self.value(a).zip_map(&mask, |x, m| x * m);
        Ok(self.push(out, Op::Mask(a, mask)))
    }

    /// Row v of the result is the sum of rows `adjacency[v]` of `a`.
    ///
    /// `adjacency` must be symmetric.
    pub fn aggregate(&mut self, a: Var, adjacency: Rc<Vec<Vec<usize>>>) -> Result<Var> {
        let x = self.value(a);
        if adjacency.len() != x.rows() {
            return Err(Error::Shape { op: "aggregate", lhs: x.shape(), rhs: (adjacency.len(), adjacency.len()) });
        }
        let out = neighbour_sum(x, &adjacency);
        Ok(self.push(out, Op::Aggregate(a, adjacency)))
    }

    /// Summed binary cross-entropy of `scores` against 0/1 `target`.
    pub fn bce_sum(&mut self, scores: Var, target: Matrix) -> Result<Var> {
        let s = self.value(scores);
        if s.shape() != target.shape() {
            return Err(shape_err("bce_sum", s, &target));
        }
        let total = s
            .data()
            .iter()
            .zip(target.data())
            .map(|(&p, &t)| {
                let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            })
            .sum();
        Ok(self.push(Matrix::scalar(total), Op::BceSum(scores, target)))
    }

    /// Gradients of the 1×1 `loss` with respect to every parameter read.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::Shape { op: "backward", lhs: lv.shape(), rhs: (1, 1) });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Matrix::scalar(1.0));
        let mut out = Gradients::default();
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => match out.entries.iter_mut().find(|(p, _)| p == id) {
                    Some((_, acc)) => acc.add_assign(&g),
                    None => out.entries.push((*id, g)),
                },
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut ga = Matrix::zeros(av.rows(), av.cols());
                    gemm(&g, false, bv, true, &mut ga, 0.0);
                    let mut gb = Matrix::zeros(bv.rows(), bv.cols());
                    gemm(av, true, &g, false, &mut gb, 0.0);
                    add_grad(&mut grads, *a, ga);
                    add_grad(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    add_grad(&mut grads, *b, g.clone());
                    add_grad(&mut grads, *a, g);
                }
                Op::AddRow(a, b) => {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (acc, x) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *acc += x;
                        }
                    }
                    add_grad(&mut grads, *b, gb);
                    add_grad(&mut grads, *a, g);
                }
                Op::Sub(a, b) => {
                    add_grad(&mut grads, *b, g.map(|x| -x));
                    add_grad(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    add_grad(&mut grads, *a, ga);
                    add_grad(&mut grads, *b, gb);
                }
                Op::Scale(a, k) => add_grad(&mut grads, *a, g.map(|x| x * k)),
                Op::MulScalar(a, s) => {
                    let k = self.scalar_value(*s);
                    let gs: f64 = g.data().iter().zip(self.value(*a).data()).map(|(x, y)| x * y).sum();
                    add_grad(&mut grads, *s, Matrix::scalar(gs));
                    add_grad(&mut grads, *a, g.map(|x| x * k));
                }
                Op::Relu(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| if y > 0.0 { x } else { 0.0 });
                    add_grad(&mut grads, *a, ga);
                }
                Op::Sigmoid(a) => {
                    let ga = g.zip_map(&node.value, |x, y| x * y * (1.0 - y));
                    add_grad(&mut grads, *a, ga);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut ga = Matrix::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(x, p)| x * p).sum();
                        for ((o, x), p) in ga.row_mut(r).iter_mut().zip(g.row(r)).zip(y.row(r)) {
                            *o = p * (x - dot);
                        }
                    }
                    add_grad(&mut grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.value(p).cols();
                        let mut gp = Matrix::zeros(g.rows(), c);
                        for r in 0..g.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + c]);
                        }
                        offset += c;
                        add_grad(&mut grads, p, gp);
                    }
                }
                Op::BroadcastRows(a) => {
                    let mut ga = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (acc, x) in ga.data_mut().iter_mut().zip(g.row(r)) {
                            *acc += x;
                        }
                    }
                    add_grad(&mut grads, *a, ga);
                }
                Op::Sum(a) => {
                    let (r, c) = self.value(*a).shape();
                    add_grad(&mut grads, *a, Matrix::filled(r, c, g.data()[0]));
                }
                Op::Frobenius(a) => {
                    let norm = node.value.data()[0];
                    let x = self.value(*a);
                    let ga = if norm > 0.0 {
                        let k = g.data()[0] / norm;
                        x.map(|v| v * k)
                    } else {
                        Matrix::zeros(x.rows(), x.cols())
                    };
                    add_grad(&mut grads, *a, ga);
                }
                Op::SliceRows(a, start) => {
                    let (r, c) = self.value(*a).shape();
                    let mut ga = Matrix::zeros(r, c);
                    ga.data_mut()[start * c..start * c + g.data().len()].copy_from_slice(g.data());
                    add_grad(&mut grads, *a, ga);
                }
                Op::Transpose(a) => add_grad(&mut grads, *a, g.transpose()),
                Op::Mask(a, mask) => add_grad(&mut grads, *a, g.zip_map(mask, |x, m| x * m)),
                Op::Aggregate(a, adjacency) => add_grad(&mut grads, *a, neighbour_sum(&g, adjacency)),
                Op::BceSum(s, target) => {
                    let k = g.data()[0];
                    let ga = self.value(*s).zip_map(target, |p, t| {
                        if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
                            0.0
                        } else {
                            k * (-t / p + (1.0 - t) / (1.0 - p))
                        }
                    });
                    add_grad(&mut grads, *s, ga);
                }
            }
        }
        Ok(out)
    }
}

fn add_grad(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot => *slot = Some(g),
    }
}

fn neighbour_sum(x: &Matrix, adjacency: &[Vec<usize>]) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for (v, nbrs) in adjacency.iter().enumerate() {
        let row = out.row_mut(v);
        for &u in nbrs {
            for (o, s) in row.iter_mut().zip(x.row(u)) {
                *o += s;
            }
        }
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Clamps every entry of the given parameters into `[-c, c]`.
pub fn clip_weights(store: &mut ParamStore, ids: &[ParamId], c: f64) {
    for &id in ids {
        for x in store.value_mut(id).data_mut() {
            *x = x.clamp(-c, c);
        }
    }
}
