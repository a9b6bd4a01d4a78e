use super::model::ConNet;
use crate::autodiff::{Matrix, Tape, Var};
use crate::error::{Error, Result};

/// Coefficients of the composite objective and the critic's clip box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub clip: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.1, clip: 0.01 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must lie in [0, 1]; got {} and {}",
                self.alpha, self.beta
            )));
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return Err(Error::InvalidArgument(format!("clip must be positive; got {}", self.clip)));
        }
        Ok(())
    }
}

/// Summed binary cross-entropy; scores are clamped to [1e-12, 1 - 1e-12].
pub fn bce_loss(t: &mut Tape, scores: Var, truth: &Matrix) -> Result<Var> {
    t.bce_sum(scores, truth.clone())
}

/// `‖A − H Hᵀ‖_F`.
pub fn local_consistency_loss(t: &mut Tape, h: Var, adjacency: &Matrix) -> Result<Var> {
    let ht = t.transpose(h);
    let hh = t.matmul(h, ht)?;
    let a = t.constant(adjacency.clone());
    let diff = t.sub(a, hh)?;
    Ok(t.frobenius_norm(diff))
}

/// `Σ_v f(h_v^a) − Σ_u f(h_u^s)` under the model's critic.
pub fn wasserstein_loss(t: &mut Tape, model: &ConNet, hs: Var, ha: Var) -> Result<Var> {
    let (rs, ra) = (t.value(hs).shape(), t.value(ha).shape());
    if rs != ra {
        return Err(Error::Shape { op: "wasserstein_loss", lhs: rs, rhs: ra });
    }
    let fa = model.critic(t, ha)?;
    let fs = model.critic(t, hs)?;
    let sa = t.sum(fa);
    let ss = t.sum(fs);
    t.sub(sa, ss)
}

/// `L_b + α L_w + β L_m`, each term also returned for logging.
#[derive(Debug, Clone, Copy)]
pub struct CompositeLoss {
    pub total: Var,
    pub bce: Var,
    pub wasserstein: Var,
    pub local: Var,
}

pub fn composite_loss(
    t: &mut Tape,
    model: &ConNet,
    out: &super::model::ForwardOutput,
    truth: &Matrix,
    adjacency: &Matrix,
    w: &LossWeights,
) -> Result<CompositeLoss> {
    let bce = bce_loss(t, out.scores, truth)?;
    let wasserstein = wasserstein_loss(t, model, out.hs, out.ha)?;
    let local = local_consistency_loss(t, out.h, adjacency)?;
    let lw = t.scale(wasserstein, w.alpha);
    let lm = t.scale(local, w.beta);
    let total = t.add(bce, lw)?;
    let total = t.add(total, lm)?;
    Ok(CompositeLoss { total, bce, wasserstein, local })
}
