use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::Features;
use crate::autodiff::{Matrix, ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub latent_dim: usize,
    pub layers: usize,
    /// Largest candidate the model accepts; width of the structure inputs.
    pub struct_width: usize,
    /// Size of the attribute vocabulary.
    pub attr_width: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_owned()));
        if self.latent_dim == 0 {
            return bad("latent_dim must be at least 1");
        }
        if self.layers == 0 {
            return bad("layers must be at least 1");
        }
        if self.struct_width == 0 {
            return bad("struct_width must be at least 1");
        }
        if self.attr_width == 0 {
            return bad("attr_width must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

impl Linear {
    fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = store.add(format!("{name}.w"), Matrix::xavier(fan_in, fan_out, rng));
        let b = store.add(format!("{name}.b"), Matrix::zeros(1, fan_out));
        Self { w, b }
    }

    fn apply(&self, t: &mut Tape, s: &ParamStore, x: Var) -> Result<Var> {
        let w = t.param(s, self.w);
        let b = t.param(s, self.b);
        let y = t.matmul(x, w)?;
        t.add_row(y, b)
    }
}

/// Linear → ReLU → Linear.
#[derive(Debug, Clone, Copy)]
struct Mlp {
    l1: Linear,
    l2: Linear,
}

impl Mlp {
    fn new(store: &mut ParamStore, name: &str, dims: [usize; 3], rng: &mut ChaCha8Rng) -> Self {
        Self {
            l1: Linear::new(store, &format!("{name}.l1"), dims[0], dims[1], rng),
            l2: Linear::new(store, &format!("{name}.l2"), dims[1], dims[2], rng),
        }
    }

    fn apply(&self, t: &mut Tape, s: &ParamStore, x: Var) -> Result<Var> {
        let h = self.l1.apply(t, s, x)?;
        self.finish(t, s, h)
    }

    /// Second half, given the first layer's pre-activation.
    fn finish(&self, t: &mut Tape, s: &ParamStore, pre: Var) -> Result<Var> {
        let h = t.relu(pre);
        self.l2.apply(t, s, h)
    }
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    gin: Mlp,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    eps: ParamId,
    s: Branch,
    a: Branch,
}

/// Node input of one branch at one layer.
#[derive(Debug, Clone, Copy)]
enum NodeInput {
    /// Candidate-local identity, implicitly padded to `struct_width` columns.
    Identity,
    Dense(Var),
}

/// `(1 + ε) h_v + Σ_{u ∈ N(v)} h_u` for every row.
fn gin_combine(t: &mut Tape, x: Var, eps: Var, f: &Features) -> Result<Var> {
    let scaled = t.mul_scalar(x, eps)?;
    let own = t.add(x, scaled)?;
    let nbrs = t.aggregate(x, f.adjacency.clone())?;
    t.add(own, nbrs)
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOutput {
    /// n×1 community scores in (0, 1).
    pub scores: Var,
    /// n×4d, the concatenation of `hs` and `ha`.
    pub h: Var,
    /// n×2d structure representation.
    pub hs: Var,
    /// n×2d attribute representation.
    pub ha: Var,
}

/// Dual-branch cross-attention + GIN encoder with a node scorer and a critic.
#[derive(Debug, Clone)]
pub struct ConNet {
    config: ModelConfig,
    store: ParamStore,
    layers: Vec<Layer>,
    passing: Vec<(Mlp, Mlp)>,
    head: Mlp,
    critic: Mlp,
    critic_ids: Vec<ParamId>,
    threshold: f64,
}

impl ConNet {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let d = config.latent_dim;
        let mut layers = Vec::with_capacity(config.layers);
        let mut passing = Vec::new();
        for k in 0..config.layers {
            let (q_in, s_in, a_in) =
                if k == 0 { (config.struct_width, config.struct_width, config.attr_width) } else { (d, d, d) };
            let eps = store.add(format!("layer{k}.eps"), Matrix::zeros(1, 1));
            let branch = |tag: &str, g_in: usize, store: &mut ParamStore, rng: &mut ChaCha8Rng| Branch {
                wq: store.add(format!("layer{k}.{tag}.wq"), Matrix::xavier(q_in, d, rng)),
                wk: store.add(format!("layer{k}.{tag}.wk"), Matrix::xavier(g_in, d, rng)),
                wv: store.add(format!("layer{k}.{tag}.wv"), Matrix::xavier(g_in, d, rng)),
                gin: Mlp::new(store, &format!("layer{k}.{tag}.gin"), [g_in, d, d], rng),
            };
            let s = branch("s", s_in, &mut store, &mut rng);
            let a = branch("a", a_in, &mut store, &mut rng);
            layers.push(Layer { eps, s, a });
            if k + 1 < config.layers {
                let vq = Mlp::new(&mut store, &format!("pass{k}.vq"), [4 * d, d, d], &mut rng);
                let fq = Mlp::new(&mut store, &format!("pass{k}.fq"), [4 * d, d, d], &mut rng);
                passing.push((vq, fq));
            }
        }
        let head = Mlp::new(&mut store, "head", [4 * d, d, 1], &mut rng);
        let first_critic = store.len();
        let critic = Mlp::new(&mut store, "critic", [2 * d, d, 1], &mut rng);
        let critic_ids = (first_critic..store.len()).map(|i| store.ids().nth(i).expect("id")).collect();
        Ok(Self { config, store, layers, passing, head, critic, critic_ids, threshold: 0.5 })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Score cut-off used when materializing communities.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
    }

    pub fn critic_ids(&self) -> &[ParamId] {
        &self.critic_ids
    }

    /// Every parameter outside the critic.
    pub fn encoder_ids(&self) -> Vec<ParamId> {
        self.store.ids().filter(|id| !self.critic_ids.contains(id)).collect()
    }

    fn project(&self, t: &mut Tape, input: NodeInput, w: ParamId, n: usize) -> Result<Var> {
        let wv = t.param(&self.store, w);
        match input {
            NodeInput::Identity => t.slice_rows(wv, 0, n),
            NodeInput::Dense(x) => t.matmul(x, wv),
        }
    }

    /// Cross-attention of a 1×d query row over the node rows, `softmax(q kᵀ/√d) v`.
    fn attend(&self, t: &mut Tape, query: Var, input: NodeInput, b: &Branch, n: usize) -> Result<Var> {
        let wq = t.param(&self.store, b.wq);
        let xq = t.matmul(query, wq)?;
        let xk = self.project(t, input, b.wk, n)?;
        let xv = self.project(t, input, b.wv, n)?;
        let xkt = t.transpose(xk);
        let logits = t.matmul(xq, xkt)?;
        let logits = t.scale(logits, 1.0 / (self.config.latent_dim as f64).sqrt());
        let att = t.softmax_rows(logits);
        t.matmul(att, xv)
    }

    /// `MLP((1 + ε) h_v + Σ_{u ∈ N(v)} h_u)`.
    fn gin(&self, t: &mut Tape, input: NodeInput, b: &Branch, eps: Var, f: &Features) -> Result<Var> {
        match input {
            NodeInput::Dense(x) => {
                let pre = gin_combine(t, x, eps, f)?;
                b.gin.apply(t, &self.store, pre)
            }
            NodeInput::Identity => {
                // the first linear map commutes with the aggregation
                let p = self.project(t, input, b.gin.l1.w, f.n)?;
                let pre = gin_combine(t, p, eps, f)?;
                let bias = t.param(&self.store, b.gin.l1.b);
                let pre = t.add_row(pre, bias)?;
                b.gin.finish(t, &self.store, pre)
            }
        }
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        t: &mut Tape,
        f: &Features,
        training: bool,
        rng: &mut R,
    ) -> Result<ForwardOutput> {
        let n = f.n;
        let rate = self.config.dropout;
        let mut vq = t.constant(f.query_nodes.clone());
        let mut fq = t.constant(f.query_attrs.clone());
        let mut hs_in = NodeInput::Identity;
        let mut ha_in = NodeInput::Dense(t.constant(f.node_attrs.clone()));
        let node_pool = t.constant(f.query_node_pool());
        let attr_pool = t.constant(f.query_attr_pool());
        let mut out = None;
        for (k, layer) in self.layers.iter().enumerate() {
            let eps = t.param(&self.store, layer.eps);

            let vq_next = self.attend(t, vq, hs_in, &layer.s, n)?;
            let hs = self.gin(t, hs_in, &layer.s, eps, f)?;
            let hs = t.dropout(hs, rate, training, rng)?;

            let fq_next = self.attend(t, fq, ha_in, &layer.a, n)?;
            let ha = self.gin(t, ha_in, &layer.a, eps, f)?;
            let ha = t.dropout(ha, rate, training, rng)?;

            let vq_rows = t.broadcast_rows(vq_next, n)?;
            let fq_rows = t.broadcast_rows(fq_next, n)?;
            let hs_cat = t.concat_cols(&[vq_rows, hs])?;
            let ha_cat = t.concat_cols(&[fq_rows, ha])?;
            let h = t.concat_cols(&[hs_cat, ha_cat])?;

            if let Some((vq_mlp, fq_mlp)) = self.passing.get(k) {
                let pooled = t.matmul(node_pool, h)?;
                vq = vq_mlp.apply(t, &self.store, pooled)?;
                let pooled = t.matmul(attr_pool, h)?;
                fq = fq_mlp.apply(t, &self.store, pooled)?;
            }
            hs_in = NodeInput::Dense(hs);
            ha_in = NodeInput::Dense(ha);
            out = Some((h, hs_cat, ha_cat));
        }
        let (h, hs, ha) = out.expect("at least one layer");
        let logits = self.head.apply(t, &self.store, h)?;
        let scores = t.sigmoid(logits);
        Ok(ForwardOutput { scores, h, hs, ha })
    }

    /// Eval-mode scores for every candidate node.
    pub fn predict(&self, f: &Features) -> Result<Vec<f64>> {
        let mut t = Tape::new();
        let mut unused = rand::rngs::mock::StepRng::new(0, 0);
        let out = self.forward(&mut t, f, false, &mut unused)?;
        Ok(t.value(out.scores).data().to_vec())
    }

    /// Row-wise critic values, n×1.
    pub fn critic(&self, t: &mut Tape, x: Var) -> Result<Var> {
        self.critic.apply(t, &self.store, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connet::features::init_features;
    use crate::graph::AttributedGraph;
    use crate::query::Query;
    use crate::subgraph::induced_subgraph;

    pub(crate) fn small_config(d: usize, width: usize) -> ModelConfig {
        ModelConfig { latent_dim: d, layers: 2, struct_width: width, attr_width: 3, dropout: 0.45, seed: 7 }
    }

    fn path_features(width: usize) -> Features {
        let g = AttributedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], &[vec![0], vec![1], vec![0, 2], vec![]], 3)
            .unwrap();
        let sub = induced_subgraph(&g, &[0, 1, 2, 3]).unwrap();
        init_features(&sub, &Query::new([1], [0]), width, 3).unwrap()
    }

    #[test]
    fn scores_are_probabilities_and_eval_is_repeatable() {
        let model = ConNet::new(small_config(8, 6)).unwrap();
        let f = path_features(6);
        let a = model.predict(&f).unwrap();
        let b = model.predict(&f).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|&s| s > 0.0 && s < 1.0));
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zeroed_head_scores_one_half() {
        let mut model = ConNet::new(small_config(8, 6)).unwrap();
        for name in ["head.l2.w", "head.l2.b"] {
            let id = model.store().find(name).unwrap();
            model.store_mut().value_mut(id).fill(0.0);
        }
        let scores = model.predict(&path_features(6)).unwrap();
        assert!(scores.iter().all(|&s| s == 0.5));
    }

    #[test]
    fn identity_shortcut_matches_explicit_identity_input() {
        let model = ConNet::new(small_config(5, 4)).unwrap();
        let f = path_features(4);
        let layer = &model.layers[0];
        let mut t = Tape::new();
        let eps = t.param(&model.store, layer.eps);
        let fast = model.gin(&mut t, NodeInput::Identity, &layer.s, eps, &f).unwrap();
        let eye = t.constant(Matrix::identity(4));
        let slow = model.gin(&mut t, NodeInput::Dense(eye), &layer.s, eps, &f).unwrap();
        let q = t.constant(f.query_nodes.clone());
        let fast_att = model.attend(&mut t, q, NodeInput::Identity, &layer.s, 4).unwrap();
        let slow_att = model.attend(&mut t, q, NodeInput::Dense(eye), &layer.s, 4).unwrap();
        for (x, y) in [(fast, slow), (fast_att, slow_att)] {
            for (a, b) in t.value(x).data().iter().zip(t.value(y).data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_node_attention_returns_its_value_row() {
        let model = ConNet::new(ModelConfig { struct_width: 1, ..small_config(4, 1) }).unwrap();
        let layer = &model.layers[0];
        let mut t = Tape::new();
        let q = t.constant(Matrix::scalar(1.0));
        let out = model.attend(&mut t, q, NodeInput::Identity, &layer.s, 1).unwrap();
        assert_eq!(t.value(out).data(), model.store.value(layer.s.wv).row(0));
    }

    #[test]
    fn equal_logits_average_the_value_rows() {
        let model = ConNet::new(small_config(4, 4)).unwrap();
        let layer = &model.layers[0];
        let mut t = Tape::new();
        // a zero query makes every logit zero
        let q = t.constant(Matrix::zeros(1, 4));
        let out = model.attend(&mut t, q, NodeInput::Identity, &layer.s, 3).unwrap();
        let wv = model.store.value(layer.s.wv);
        for c in 0..4 {
            let mean = (0..3).map(|r| wv.get(r, c)).sum::<f64>() / 3.0;
            assert!((t.value(out).get(0, c) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn gin_aggregation_adds_neighbours_to_the_self_term() {
        let edgeless = AttributedGraph::from_edges(3, &[], &[vec![], vec![], vec![]], 3).unwrap();
        let single = AttributedGraph::from_edges(3, &[(0, 1)], &[vec![], vec![], vec![]], 3).unwrap();
        let rows = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0], vec![7.0, 11.0]]).unwrap();
        let run = |g: &AttributedGraph, eps: f64| {
            let sub = induced_subgraph(g, &[0, 1, 2]).unwrap();
            let f = init_features(&sub, &Query::new([0], []), 3, 3).unwrap();
            let mut t = Tape::new();
            let x = t.constant(rows.clone());
            let e = t.constant(Matrix::scalar(eps));
            let out = gin_combine(&mut t, x, e, &f).unwrap();
            t.value(out).clone()
        };
        assert_eq!(run(&edgeless, 0.0), rows);
        assert_eq!(run(&single, 0.0).data(), &[4.0, 7.0, 4.0, 7.0, 7.0, 11.0]);
        assert_eq!(run(&edgeless, 0.5).data(), &[1.5, 3.0, 4.5, 7.5, 10.5, 16.5]);
    }

    #[test]
    fn oversized_candidates_are_rejected_and_configs_validated() {
        assert!(ConNet::new(ModelConfig { layers: 0, ..small_config(4, 4) }).is_err());
        assert!(ConNet::new(ModelConfig { dropout: 1.0, ..small_config(4, 4) }).is_err());
    }

    #[test]
    fn critic_parameters_are_separate() {
        let model = ConNet::new(small_config(4, 4)).unwrap();
        assert_eq!(model.critic_ids().len(), 4);
        assert!(model.critic_ids().iter().all(|id| model.store().name(*id).starts_with("critic")));
        assert_eq!(model.encoder_ids().len() + 4, model.store().len());
    }
}
