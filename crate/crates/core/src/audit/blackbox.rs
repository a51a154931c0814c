use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fried::FriedModel;
use crate::numkit::{sigmoid, Matrix};

type PredictFn = dyn Fn(&Matrix) -> Result<Vec<f64>> + Send + Sync;

/// Opaque scoring function over named input columns.
#[derive(Clone)]
pub struct BlackBoxModel {
    predict: Arc<PredictFn>,
    feature_names: Vec<String>,
}

impl fmt::Debug for BlackBoxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxModel")
            .field("feature_names", &self.feature_names)
            .finish_non_exhaustive()
    }
}

impl BlackBoxModel {
    pub fn new<F>(feature_names: Vec<String>, predict: F) -> Self
    where
        F: Fn(&Matrix) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            predict: Arc::new(predict),
            feature_names,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn input_dim(&self) -> usize {
        self.feature_names.len()
    }

    /// One score per row.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "black-box model expects {} columns, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let out = (self.predict)(x)?;
        if out.len() != x.rows() {
            return Err(Error::dim("black-box model must return one score per row"));
        }
        Ok(out)
    }
}

/// Serializable description of an audit target over named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// `bias + Σ w_name · x_name`; columns without a weight are ignored.
    Linear { weights: Vec<(String, f64)>, bias: f64 },
    /// Sigmoid of the linear score.
    Logistic { weights: Vec<(String, f64)>, bias: f64 },
    Constant { value: f64 },
}

impl TargetSpec {
    /// Binds the spec to an input layout.
    pub fn build(&self, feature_names: &[String]) -> Result<BlackBoxModel> {
        let names = feature_names.to_vec();
        let dense = |weights: &[(String, f64)]| -> Result<Vec<f64>> {
            let mut w = vec![0.0; names.len()];
            for (name, v) in weights {
                let j = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::config(format!("target weight names unknown column `{name}`")))?;
                w[j] = *v;
            }
            Ok(w)
        };
        Ok(match self {
            TargetSpec::Linear { weights, bias } => {
                let (w, b) = (dense(weights)?, *bias);
                BlackBoxModel::new(names, move |x| Ok(linear_scores(x, &w, b)))
            }
            TargetSpec::Logistic { weights, bias } => {
                let (w, b) = (dense(weights)?, *bias);
                BlackBoxModel::new(names, move |x| {
                    Ok(linear_scores(x, &w, b).into_iter().map(sigmoid).collect())
                })
            }
            TargetSpec::Constant { value } => {
                let v = *value;
                BlackBoxModel::new(names, move |x| Ok(vec![v; x.rows()]))
            }
        })
    }
}

fn linear_scores(x: &Matrix, w: &[f64], b: f64) -> Vec<f64> {
    (0..x.rows())
        .map(|i| b + x.row(i).iter().zip(w).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// Predictor over `(X', p)`: `target([g(X', p), p])`, with `p` passed
/// through to the target unchanged.
pub fn compose_audit_predictor(model: &FriedModel, target: &BlackBoxModel) -> Result<BlackBoxModel> {
    model.validate()?;
    let (l, f, k) = (model.latent_dim, model.feature_dim, model.protected_dim);
    if target.input_dim() != f + k {
        return Err(Error::dim(format!(
            "target takes {} columns; the decoder yields {f} features plus {k} protected",
            target.input_dim()
        )));
    }
    let mut names: Vec<String> = (0..l).map(|i| format!("z{i}")).collect();
    names.extend(target.feature_names()[f..].iter().cloned());
    let model = model.clone();
    let target = target.clone();
    Ok(BlackBoxModel::new(names, move |input| {
        let z = input.slice_cols(0, l);
        let p = input.slice_cols(l, l + k);
        let xhat = model.decode(&z, &p)?;
        target.predict(&Matrix::hstack(&[&xhat, &p])?)
    }))
}
