//! Fully connected networks with manual backpropagation and Adam.

mod activation;
mod adam;
mod mlp;

pub use activation::{selu, selu_grad, Activation, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamState};
pub use mlp::{init_lecun, init_lecun_scaled, mlp_backward, mlp_forward, DenseLayer, GradTape, LayerGrads, Mlp, MlpGrads};
