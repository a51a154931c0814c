//! Fair representation learning with interpolation-enabled disentanglement.
//!
//! The crate is organised by subsystem:
//!
//! - [`numkit`]: matrices, seeded RNG, MLPs with hand-written backprop.
//! - [`data`]: CSV ingestion, preprocessing, stratified splits, synthetic generators.
//! - [`fried`]: the disentangling autoencoder with its two adversarial critics.
//! - [`infotheory`]: Chernoff information, KL and conditional MI estimators.
//! - [`fairness`]: demographic parity, downstream evaluation, trade-off sweeps.
//! - [`audit`]: Shapley attribution and indirect-influence auditing.
//! - [`presets`]: named architecture/training presets.

pub mod audit;
pub mod data;
pub mod error;
pub mod fairness;
pub mod fried;
pub mod infotheory;
pub mod numkit;
pub mod presets;

pub use data::Dataset;
pub use error::{Error, Result};
pub use fried::{FriedModel, TrainConfig};
pub use numkit::{Matrix, MlpParams, Rng};
