use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::downstream::{evaluate_representation, DownstreamConfig, TradeoffPoint};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fried::{train, TrainConfig};

/// Downstream protocol applied at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub downstream: DownstreamConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            downstream: DownstreamConfig::default(),
        }
    }
}

/// Result of one grid point; exactly one of `point` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub beta: f64,
    pub lambda: f64,
    pub point: Option<TradeoffPoint>,
    pub error: Option<String>,
}

/// Trains and evaluates one model per `(β, λ)` in lexicographic grid order.
/// Every trial uses `base.seed`; a failing trial is recorded and the sweep
/// continues.
pub fn sweep_tradeoff(
    dataset: &Dataset,
    beta_grid: &[f64],
    lambda_grid: &[f64],
    base: &TrainConfig,
    eval: &EvalConfig,
) -> Result<Vec<SweepOutcome>> {
    if beta_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::config("beta and lambda grids must be non-empty"));
    }
    let grid: Vec<(f64, f64)> = beta_grid
        .iter()
        .flat_map(|&b| lambda_grid.iter().map(move |&l| (b, l)))
        .collect();
    let outcomes = grid
        .par_iter()
        .map(|&(beta, lambda)| {
            let cfg = TrainConfig {
                beta,
                lambda,
                ..base.clone()
            };
            let result = cfg.validate().and_then(|_| {
                let (model, _) = train(dataset, &cfg)?;
                evaluate_representation(&model, dataset, eval.folds, &eval.downstream, cfg.seed)
            });
            match result {
                Ok(mut point) => {
                    point.beta = beta;
                    point.lambda = lambda;
                    SweepOutcome {
                        beta,
                        lambda,
                        point: Some(point),
                        error: None,
                    }
                }
                Err(e) => {
                    log::warn!("sweep point beta={beta} lambda={lambda} failed: {e}");
                    SweepOutcome {
                        beta,
                        lambda,
                        point: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(outcomes)
}

pub const TRADEOFF_HEADER: [&str; 6] = [
    "beta",
    "lambda",
    "delta_dp_mean",
    "delta_dp_std",
    "accuracy_mean",
    "accuracy_std",
];

/// Writes points as CSV to any writer.
pub fn write_tradeoff_csv_to<W: Write>(out: W, points: &[TradeoffPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADEOFF_HEADER)?;
    for p in points {
        w.write_record([
            p.beta.to_string(),
            p.lambda.to_string(),
            p.delta_dp_mean.to_string(),
            p.delta_dp_std.to_string(),
            p.accuracy_mean.to_string(),
            p.accuracy_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tradeoff_csv(path: impl AsRef<Path>, points: &[TradeoffPoint]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_tradeoff_csv_to(file, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FoldResult;

    #[test]
    fn csv_layout() {
        let p = TradeoffPoint::from_folds(
            0.5,
            1.0,
            vec![
                FoldResult {
                    delta_dp: 0.1,
                    accuracy: 0.8,
                },
                FoldResult {
                    delta_dp: 0.3,
                    accuracy: 0.6,
                },
            ],
        );
        let mut buf = Vec::new();
        write_tradeoff_csv_to(&mut buf, &[p]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "beta,lambda,delta_dp_mean,delta_dp_std,accuracy_mean,accuracy_std");
        assert!(lines[1].starts_with("0.5,1,0.2,0.14142135623730"), "{}", lines[1]);
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let ds = crate::data::synth_bias_dataset(20, 0.5, 0.1, 0).unwrap();
        let r = sweep_tradeoff(&ds, &[], &[0.0], &TrainConfig::default(), &EvalConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
