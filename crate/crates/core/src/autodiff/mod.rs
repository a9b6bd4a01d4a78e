//! Dense reverse-mode automatic differentiation and optimizers.

mod matrix;
mod optim;
mod tape;

pub use matrix::Matrix;
pub use optim::{Adam, LrSchedule};
pub use tape::{clip_weights, sigmoid, Gradients, ParamId, ParamStore, Tape, Var};
