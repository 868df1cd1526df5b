//! Dense-tensor building blocks with hand-derived gradients.
//!
//! Everything is `f64`. Layers are plain parameter containers with separate
//! forward and backward functions; callers keep whatever they need from the
//! forward pass for the backward pass.

mod adam;
mod gradcheck;
mod layers;
mod loss;

pub use adam::Adam;
pub use gradcheck::{finite_diff_grad, max_relative_error};
pub use layers::{
    dropout_apply, relu, relu_backward, BatchNorm, BatchNormCache, Dense, DenseGrads,
    MaskedDense, MaskedDenseGrads,
};
pub use loss::{l2_penalty, softmax2, softmax2_bce, softmax2_positive};

/// Row-major 2-D tensor (`rows x cols`).
pub type Tensor2 = ndarray::Array2<f64>;
