//! Scalar losses paired with their gradients.

use crate::error::{Error, Result};
use crate::numkit::mlp::sigmoid;
use crate::numkit::Matrix;

/// Mean squared error over every entry, with dLoss/dPred.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    let diff = pred.sub(target)?;
    let n = diff.as_slice().len().max(1) as f64;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

/// Mean squared error against a per-column constant target.
pub fn mse_to_row(pred: &Matrix, target_row: &[f64]) -> Result<(f64, Matrix)> {
    if target_row.len() != pred.cols() {
        return Err(Error::dim(format!(
            "target row has {} values, prediction has {} columns",
            target_row.len(),
            pred.cols()
        )));
    }
    let target = Matrix::from_fn(pred.rows(), pred.cols(), |_, j| target_row[j]);
    mse(pred, &target)
}

/// Mean binary cross-entropy on logits, with dLoss/dLogit.
pub fn bce_with_logits(logits: &Matrix, labels: &Matrix) -> Result<(f64, Matrix)> {
    if logits.shape() != labels.shape() {
        return Err(Error::dim(format!(
            "logits {:?} vs labels {:?}",
            logits.shape(),
            labels.shape()
        )));
    }
    let n = logits.as_slice().len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.as_slice().len());
    for (&z, &y) in logits.as_slice().iter().zip(labels.as_slice()) {
        // log(1 + e^z) - y z, computed without overflow.
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid(z) - y) / n);
    }
    Ok((loss / n, Matrix::new(logits.rows(), logits.cols(), grad)?))
}
