//! Demographic parity, downstream evaluation and fairness/accuracy trade-offs.

mod downstream;
mod parity;
mod pareto;
mod sweep;

pub use downstream::{
    evaluate_features, evaluate_representation, mean_std, train_downstream_classifier, DownstreamConfig, FoldResult,
    TradeoffPoint,
};
pub use parity::{demographic_parity_difference, group_positive_rates};
pub use pareto::{dominates, pareto_front};
pub use sweep::{
    sweep_tradeoff, write_tradeoff_csv, write_tradeoff_csv_to, EvalConfig, SweepOutcome, TRADEOFF_HEADER,
};
