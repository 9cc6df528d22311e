//! Dense-network numerical core for fixed-topology networks: matrices,
//! linear layers with reverse-mode gradients, Mish, weighted softmax
//! cross-entropy, Gaussian KL and Adam.

mod activation;
mod adam;
mod dense;
mod loss;
mod matrix;

pub use activation::{mish, mish_backward, mish_derivative, mish_scalar, softplus};
pub use adam::{adam_step, layer_blocks, AdamConfig, AdamState, ParamBlock};
pub use dense::{linear_backward, linear_forward, DenseGrad, DenseLayer, LayerTape, MishMlp, MlpTape};
pub use loss::{gaussian_kl, weighted_softmax_ce, KlOutput};
pub(crate) use loss::grouped_softmax_ce;
pub use matrix::Matrix;
