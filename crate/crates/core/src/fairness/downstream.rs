use serde::{Deserialize, Serialize};

use super::parity::demographic_parity_difference;
use crate::data::{complement, kfold, Dataset};
use crate::error::{Error, Result};
use crate::fried::FriedModel;
use crate::numkit::{derive_seed, BinaryClassifier, ClassifierSpec, Matrix};

/// Settings of the downstream label classifier trained on representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DownstreamConfig {
    pub classifier: ClassifierSpec,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierSpec {
                hidden: vec![32, 16],
                epochs: 200,
                learning_rate: 0.01,
                batch_size: 64,
            },
        }
    }
}

/// Trains the downstream classifier on `features` with 0/1 `labels`.
pub fn train_downstream_classifier(
    features: &Matrix,
    labels: &[u8],
    cfg: &DownstreamConfig,
    seed: u64,
) -> Result<BinaryClassifier> {
    BinaryClassifier::fit(features, labels, &cfg.classifier, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub delta_dp: f64,
    pub accuracy: f64,
}

/// One point of a fairness/accuracy trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub beta: f64,
    pub lambda: f64,
    pub delta_dp_mean: f64,
    pub delta_dp_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub folds: Vec<FoldResult>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl TradeoffPoint {
    pub fn from_folds(beta: f64, lambda: f64, folds: Vec<FoldResult>) -> Self {
        let (delta_dp_mean, delta_dp_std) = mean_std(&folds.iter().map(|f| f.delta_dp).collect::<Vec<_>>());
        let (accuracy_mean, accuracy_std) = mean_std(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
        Self {
            beta,
            lambda,
            delta_dp_mean,
            delta_dp_std,
            accuracy_mean,
            accuracy_std,
            folds,
        }
    }
}

/// k-fold downstream evaluation of an arbitrary representation `features`
/// (row-aligned with `dataset`).
pub fn evaluate_features(
    features: &Matrix,
    dataset: &Dataset,
    folds: usize,
    cfg: &DownstreamConfig,
    seed: u64,
) -> Result<Vec<FoldResult>> {
    if features.rows() != dataset.len() {
        return Err(Error::dim("representation rows must match the dataset"));
    }
    let groups = dataset.protected_group();
    let partition = kfold(dataset, folds, derive_seed(seed, 0))?;
    let mut out = Vec::with_capacity(folds);
    for (k, test) in partition.iter().enumerate() {
        let train = complement(dataset.len(), test);
        let y_train: Vec<u8> = train.iter().map(|&i| dataset.y[i]).collect();
        let clf = train_downstream_classifier(
            &features.select_rows(&train),
            &y_train,
            cfg,
            derive_seed(seed, 1 + k as u64),
        )?;
        let x_test = features.select_rows(test);
        let y_test: Vec<u8> = test.iter().map(|&i| dataset.y[i]).collect();
        let g_test: Vec<u8> = test.iter().map(|&i| groups[i]).collect();
        let pred = clf.predict(&x_test)?;
        let hits = pred.iter().zip(&y_test).filter(|(a, b)| a == b).count();
        out.push(FoldResult {
            delta_dp: demographic_parity_difference(&pred, &g_test)?,
            accuracy: hits as f64 / y_test.len() as f64,
        });
    }
    Ok(out)
}

/// Encodes the dataset with `model` and evaluates the downstream classifier
/// on the representation only.
pub fn evaluate_representation(
    model: &FriedModel,
    dataset: &Dataset,
    folds: usize,
    cfg: &DownstreamConfig,
    seed: u64,
) -> Result<TradeoffPoint> {
    let z = model.encode(&dataset.x, &dataset.p)?;
    let results = evaluate_features(&z, dataset, folds, cfg, seed)?;
    Ok(TradeoffPoint::from_folds(model.beta, model.lambda, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
        assert!(mean_std(&[]).0.is_nan());
    }
}
