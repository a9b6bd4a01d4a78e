use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{init_features, Features};
use super::loss::{composite_loss, wasserstein_loss, LossWeights};
use super::model::{ConNet, ForwardOutput};
use crate::autodiff::{clip_weights, Adam, LrSchedule, Matrix, Tape};
use crate::error::{Error, Result};
use crate::query::Query;
use crate::search::{select_threshold, ScoredQuery, ThresholdPolicy};
use crate::subgraph::CandidateSubgraph;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Epochs without a validation F1 gain before stopping.
    pub patience: Option<usize>,
    pub weights: LossWeights,
    pub lr: f64,
    pub lr_decay: f64,
    pub decay_epochs: usize,
    pub critic_lr: f64,
    pub seed: u64,
    pub policy: ThresholdPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            patience: Some(30),
            weights: LossWeights::default(),
            lr: 1e-3,
            lr_decay: 0.5,
            decay_epochs: 100,
            critic_lr: 1e-3,
            seed: 0,
            policy: ThresholdPolicy::default(),
        }
    }
}

/// A query, its candidate subgraph and its ground truth.
#[derive(Debug, Clone)]
pub struct Example {
    pub query: Query,
    pub sub: CandidateSubgraph,
    pub features: Features,
    /// n×1 membership of each candidate node.
    pub target: Matrix,
    /// Full ground truth in global ids, ascending; may reach outside `sub`.
    pub truth: Vec<usize>,
}

impl Example {
    pub fn new(
        sub: CandidateSubgraph,
        query: Query,
        truth: &[usize],
        struct_width: usize,
        attr_width: usize,
    ) -> Result<Self> {
        let features = init_features(&sub, &query, struct_width, attr_width)?;
        let mut truth = truth.to_vec();
        truth.sort_unstable();
        truth.dedup();
        let mut target = Matrix::zeros(sub.node_count(), 1);
        for &v in &truth {
            if let Some(local) = sub.to_local(v) {
                target.set(local, 0, 1.0);
            }
        }
        Ok(Self { query, sub, features, target, truth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean composite loss over the epoch's pairs.
    pub loss: f64,
    pub val_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub trace: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub threshold: f64,
    pub val_f1: Option<f64>,
}

/// One critic update on detached representations, followed by clipping.
///
/// The critic ascends the structure–attribute gap.
pub fn critic_step(model: &mut ConNet, adam: &mut Adam, hs: &Matrix, ha: &Matrix, clip: f64) -> Result<f64> {
    let mut t = Tape::new();
    let hs = t.constant(hs.clone());
    let ha = t.constant(ha.clone());
    let gap = wasserstein_loss(&mut t, model, hs, ha)?;
    let ascend = t.scale(gap, -1.0);
    let grads = t.backward(ascend)?;
    let critic_ids = model.critic_ids().to_vec();
    let store = model.store_mut();
    store.zero_grad();
    store.accumulate(&grads);
    adam.step(store);
    clip_weights(store, &critic_ids, clip);
    store.zero_grad();
    Ok(t.scalar_value(gap))
}

fn encoder_step<R: Rng>(
    model: &mut ConNet,
    critic_adam: &mut Adam,
    encoder_adam: &mut Adam,
    ex: &Example,
    weights: &LossWeights,
    rng: &mut R,
) -> Result<f64> {
    let mut t = Tape::new();
    let out: ForwardOutput = model.forward(&mut t, &ex.features, true, rng)?;
    let (hs, ha) = (t.value(out.hs).clone(), t.value(out.ha).clone());
    critic_step(model, critic_adam, &hs, &ha, weights.clip)?;
    let loss = composite_loss(&mut t, model, &out, &ex.target, &ex.features.adjacency_dense, weights)?;
    let grads = t.backward(loss.total)?;
    let store = model.store_mut();
    store.zero_grad();
    store.accumulate(&grads);
    encoder_adam.step(store);
    store.zero_grad();
    Ok(t.scalar_value(loss.total))
}

/// Threshold and mean F1 of the current model on `val`.
pub fn validate(model: &ConNet, val: &[Example], policy: &ThresholdPolicy) -> Result<(f64, f64)> {
    let scores = val.iter().map(|ex| model.predict(&ex.features)).collect::<Result<Vec<_>>>()?;
    let cases: Vec<ScoredQuery<'_>> = val
        .iter()
        .zip(&scores)
        .map(|(ex, s)| ScoredQuery { sub: &ex.sub, scores: s, query_local: &ex.features.query_local, truth: &ex.truth })
        .collect();
    select_threshold(&cases, policy)
}

/// Adversarial training with early stopping on validation F1.
///
/// The best parameters and their threshold are kept in `model`.
pub fn train(model: &mut ConNet, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    cfg.weights.validate()?;
    let interval = cfg.decay_epochs.max(1).saturating_mul(train.len());
    let encoder_ids = model.encoder_ids();
    let critic_ids = model.critic_ids().to_vec();
    let mut encoder_adam = Adam::new(model.store(), encoder_ids, LrSchedule::new(cfg.lr, cfg.lr_decay, interval)?);
    let mut critic_adam =
        Adam::new(model.store(), critic_ids.clone(), LrSchedule::new(cfg.critic_lr, cfg.lr_decay, interval)?);
    clip_weights(model.store_mut(), &critic_ids, cfg.weights.clip);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, f64, crate::autodiff::ParamStore)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            total += encoder_step(model, &mut critic_adam, &mut encoder_adam, &train[i], &cfg.weights, &mut rng)?;
        }
        let loss = total / train.len() as f64;
        let val_f1 = if val.is_empty() {
            None
        } else {
            let (threshold, f1) = validate(model, val, &cfg.policy)?;
            if best.as_ref().is_none_or(|b| f1 > b.0) {
                best = Some((f1, epoch, threshold, model.store().clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
            Some(f1)
        };
        debug!("epoch {epoch}: loss {loss:.6} val_f1 {val_f1:?}");
        trace.push(EpochRecord { epoch, loss, val_f1 });
        if cfg.patience.is_some_and(|p| since_best >= p) {
            info!("early stop after epoch {epoch}");
            break;
        }
    }

    let report = match best {
        Some((f1, best_epoch, threshold, store)) => {
            *model.store_mut() = store;
            model.set_threshold(threshold);
            TrainReport { trace, best_epoch, threshold, val_f1: Some(f1) }
        }
        None => {
            let best_epoch = trace.len();
            TrainReport { trace, best_epoch, threshold: model.threshold(), val_f1: None }
        }
    };
    info!(
        "trained {} epochs, kept epoch {} (threshold {}, val F1 {:?})",
        report.trace.len(),
        report.best_epoch,
        report.threshold,
        report.val_f1
    );
    Ok(report)
}
