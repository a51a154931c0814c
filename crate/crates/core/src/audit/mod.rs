//! Auditing: decoder-composed predictors and Shapley attribution of direct
//! and indirect feature influence.

mod blackbox;
mod indirect;
mod shapley;

pub use blackbox::{compose_audit_predictor, BlackBoxModel, TargetSpec};
pub use indirect::{indirect_influence_report, AuditConfig, InfluenceReports};
pub use shapley::{shapley_attribution, AttributionReport, ShapleyConfig, ShapleyMode, EXHAUSTIVE_MAX_FEATURES};
