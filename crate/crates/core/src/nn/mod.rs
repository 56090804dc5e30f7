//! Minimal dense-MLP engine: forward, backward, losses, and optimizers.

pub mod activation;
pub mod gradcheck;
pub mod loss;
pub mod matrix;
pub mod mlp;
pub mod optim;

pub use activation::ActivationKind;
pub use gradcheck::{
    finite_diff_check, max_relative_error, numeric_gradients, numeric_gradients_local,
};
pub use loss::{argmax_rows, cross_entropy_loss, mse_loss, LossKind, LossTarget};
pub use matrix::Matrix;
pub use mlp::{init_mlp, DenseLayer, LayerGrads, Mlp, ParamGrads};
pub use optim::{adam_step, sgd_step, OptimizerConfig, OptimizerState};
