//! Deterministic numeric core: matrices, seeded randomness, MLPs with
//! explicit backpropagation, SGD and finite-difference gradient checks.

mod classifier;
mod gradcheck;
pub mod loss;
mod matrix;
mod mlp;
mod rng;

pub use classifier::{BinaryClassifier, ClassifierSpec};
pub use gradcheck::{gradcheck, gradcheck_single};
pub use matrix::Matrix;
pub use mlp::{
    mlp_backward, mlp_forward, sgd_step, sigmoid, Activation, ForwardCache, Layer, LayerGrad, MlpGrads, MlpParams,
};
pub use rng::{derive_seed, Rng};
