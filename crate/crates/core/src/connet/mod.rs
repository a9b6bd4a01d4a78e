//! Consistency-aware scoring network over candidate subgraphs.

mod features;
mod loss;
mod model;
mod train;

pub use features::{init_features, Features};
pub use loss::{bce_loss, composite_loss, local_consistency_loss, wasserstein_loss, CompositeLoss, LossWeights};
pub use model::{ConNet, ForwardOutput, ModelConfig};
pub use train::{critic_step, train, validate, EpochRecord, Example, TrainConfig, TrainReport};
