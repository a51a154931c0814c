//! Fair representation learning with interpolation-enabled disentanglement.

mod config;
mod model;
mod train;

pub use config::{Ablation, Architecture, TrainConfig};
pub use model::{mix, AeGrads, Batch, FriedModel, LossParts, MODEL_FORMAT, MODEL_VERSION};
pub use train::{represent, train, EpochRecord};
