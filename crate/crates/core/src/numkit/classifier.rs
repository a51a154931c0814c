//! Probabilistic binary classifier: an MLP with a sigmoid output trained on
//! cross-entropy with mini-batch SGD. Inputs are standardized internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::loss::bce_with_logits;
use crate::numkit::mlp::sigmoid;
use crate::numkit::{Activation, Matrix, MlpParams, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden.contains(&0) {
            return Err(Error::config("classifier epochs, batch size and widths must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("classifier learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub net: MlpParams,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl BinaryClassifier {
    /// Trains on `x` with 0/1 `labels`. Both classes must be present.
    pub fn fit(x: &Matrix, labels: &[u8], spec: &ClassifierSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        if x.rows() != labels.len() {
            return Err(Error::dim(format!("{} rows but {} labels", x.rows(), labels.len())));
        }
        if labels.iter().any(|&v| v > 1) {
            return Err(Error::Schema("classifier labels must be 0/1".into()));
        }
        let positives = labels.iter().filter(|&&v| v == 1).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::InsufficientData("classifier labels contain a single class".into()));
        }
        if x.cols() == 0 {
            return Err(Error::dim("classifier needs at least one input column"));
        }
        let means = x.column_means();
        let scales: Vec<f64> = x
            .column_stds()
            .into_iter()
            .map(|s| if s > 1e-12 { s } else { 1.0 })
            .collect();
        let root = Rng::new(seed);
        let mut init_rng = root.fork(1);
        let mut order_rng = root.fork(2);
        let mut dims = vec![x.cols()];
        dims.extend_from_slice(&spec.hidden);
        dims.push(1);
        let net = MlpParams::init(&dims, Activation::Relu, Activation::Identity, &mut init_rng)?;
        let mut clf = Self { net, means, scales };
        let xs = clf.standardize(x)?;
        let y = Matrix::column_vector(&labels.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
        let n = x.rows();
        for epoch in 0..spec.epochs {
            let order = order_rng.permutation(n);
            for chunk in order.chunks(spec.batch_size) {
                let (logits, cache) = clf.net.forward(&xs.select_rows(chunk))?;
                let (_, g) = bce_with_logits(&logits, &y.select_rows(chunk))?;
                let (grads, _) = clf.net.backward(&cache, &g)?;
                clf.net.sgd_step(&grads, spec.learning_rate).map_err(|_| {
                    Error::Divergence(format!("classifier gradient became non-finite at epoch {epoch}"))
                })?;
            }
        }
        Ok(clf)
    }

    fn standardize(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(Error::dim(format!(
                "classifier expects {} columns, got {}",
                self.means.len(),
                x.cols()
            )));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x.get(i, j) - self.means[j]) / self.scales[j]
        }))
    }

    pub fn input_dim(&self) -> usize {
        self.means.len()
    }

    /// Raw logits, one per row.
    pub fn logits(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.net.predict(&self.standardize(x)?)?.into_vec())
    }

    /// `P(label = 1 | x)` per row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.logits(x)?.into_iter().map(sigmoid).collect())
    }

    /// Thresholds probabilities at 0.5.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.logits(x)?.into_iter().map(|z| u8::from(z > 0.0)).collect())
    }

    pub fn accuracy(&self, x: &Matrix, labels: &[u8]) -> Result<f64> {
        if x.rows() != labels.len() || labels.is_empty() {
            return Err(Error::dim("accuracy needs one label per row"));
        }
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ClassifierSpec {
        ClassifierSpec {
            hidden: vec![8],
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
        }
    }

    #[test]
    fn separates_blobs() {
        let mut rng = Rng::new(1);
        let n = 400;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = Matrix::from_fn(n, 2, |i, _| 3.0 * f64::from(labels[i]) + rng.normal() * 0.5);
        let clf = BinaryClassifier::fit(&x, &labels, &spec(), 3).unwrap();
        assert!(clf.accuracy(&x, &labels).unwrap() > 0.95);
        let again = BinaryClassifier::fit(&x, &labels, &spec(), 3).unwrap();
        assert_eq!(clf, again);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::zeros(4, 1);
        assert!(matches!(
            BinaryClassifier::fit(&x, &[1, 1, 1, 1], &spec(), 0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn constant_columns_do_not_break_standardization() {
        let x = Matrix::from_fn(20, 2, |i, j| if j == 0 { 5.0 } else { i as f64 });
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let clf = BinaryClassifier::fit(&x, &labels, &spec(), 0).unwrap();
        assert!(clf.predict_proba(&x).unwrap().iter().all(|p| p.is_finite()));
    }
}
