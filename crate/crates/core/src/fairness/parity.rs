use crate::error::{Error, Result};

/// Positive-prediction rates `(rate_group0, rate_group1)`.
pub fn group_positive_rates(predictions: &[u8], groups: &[u8]) -> Result<(f64, f64)> {
    if predictions.len() != groups.len() {
        return Err(Error::dim(format!(
            "predictions have {} entries, groups {}",
            predictions.len(),
            groups.len()
        )));
    }
    let mut count = [0usize; 2];
    let mut pos = [0usize; 2];
    for (&yhat, &g) in predictions.iter().zip(groups) {
        if yhat > 1 || g > 1 {
            return Err(Error::Schema("predictions and groups must be 0/1".into()));
        }
        count[g as usize] += 1;
        pos[g as usize] += yhat as usize;
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(Error::UndefinedMetric(
            "demographic parity needs both protected groups present".into(),
        ));
    }
    Ok((pos[0] as f64 / count[0] as f64, pos[1] as f64 / count[1] as f64))
}

/// `|P(Ŷ=1 | p=0) − P(Ŷ=1 | p=1)|`.
pub fn demographic_parity_difference(predictions: &[u8], groups: &[u8]) -> Result<f64> {
    let (r0, r1) = group_positive_rates(predictions, groups)?;
    Ok((r0 - r1).abs())
}
