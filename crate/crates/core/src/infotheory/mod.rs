//! Chernoff information, KL divergence, classifier-based KL / MI / CMI
//! estimation, the separability check and the informativeness score.

mod discrete;
mod estimate;
mod separability;

pub use discrete::{chernoff_information, chernoff_information_grid, kl_discrete, ChernoffResult, DiscreteDistribution};
pub use estimate::{
    cmi_estimate_difference, kl_estimate_classifier, mutual_information, CmiEstimate, KlEstimate, KlEstimatorConfig,
    SampleTriple, CMI_MIN_ROWS,
};
pub use separability::{
    informativeness_from_codes, informativeness_score, quantile, separability_check, InformativenessReport,
    SeparabilityConfig, SeparabilityReport, INFORMATIVENESS_MIN_ROWS,
};
