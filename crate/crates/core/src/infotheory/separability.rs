use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{cmi_estimate_difference, mutual_information, KlEstimatorConfig, SampleTriple, CMI_MIN_ROWS};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fried::FriedModel;
use crate::numkit::{derive_seed, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeparabilityConfig {
    pub estimator: KlEstimatorConfig,
    /// Number of row shuffles of the new features forming the null.
    pub permutations: usize,
    /// Null quantile used as the threshold.
    pub quantile: f64,
    /// Lower bound on the threshold.
    pub min_margin: f64,
}

impl Default for SeparabilityConfig {
    fn default() -> Self {
        Self {
            estimator: KlEstimatorConfig::default(),
            permutations: 20,
            quantile: 0.95,
            min_margin: 0.02,
        }
    }
}

impl SeparabilityConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.permutations == 0 {
            return Err(Error::config("permutations must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.quantile) || !(self.min_margin >= 0.0) {
            return Err(Error::config("quantile must lie in [0, 1] and min_margin be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// `Î(X'; Y | X)` on the `p = 0` rows.
    pub cmi: f64,
    pub mi_new_label_old: f64,
    pub mi_new_old: f64,
    /// `max(min_margin, null quantile)`.
    pub tau: f64,
    pub improves: bool,
    /// CMI under each row shuffle of `X'`, in shuffle order.
    pub null: Vec<f64>,
    pub n_rows: usize,
    pub seed: u64,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Tests whether the new features `xprime` add label information beyond `x`
/// within the `p = 0` group: `I(X'; Y | X) > τ`, with `τ` calibrated by
/// shuffling the rows of `X'`.
pub fn separability_check(
    x: &Matrix,
    xprime: &Matrix,
    y: &[u8],
    p: &[u8],
    cfg: &SeparabilityConfig,
    seed: u64,
) -> Result<SeparabilityReport> {
    cfg.validate()?;
    let n = x.rows();
    if xprime.rows() != n || y.len() != n || p.len() != n {
        return Err(Error::dim("x, xprime, y and p must have equal row counts"));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| p[i] == 0).collect();
    if rows.len() < CMI_MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "group p=0 has {} rows, at least {CMI_MIN_ROWS} are needed",
            rows.len()
        )));
    }
    let xs = x.select_rows(&rows);
    let xp = xprime.select_rows(&rows);
    let ys = Matrix::column_vector(&rows.iter().map(|&i| f64::from(y[i])).collect::<Vec<_>>());

    let est_seed = derive_seed(seed, 0);
    let observed = cmi_estimate_difference(&SampleTriple::new(xp.clone(), ys.clone(), xs.clone())?, &cfg.estimator, est_seed)?;

    let null = (0..cfg.permutations)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, 1 + k as u64);
            let perm = Rng::new(s).permutation(rows.len());
            let triple = SampleTriple::new(xp.select_rows(&perm), ys.clone(), xs.clone())?;
            Ok(cmi_estimate_difference(&triple, &cfg.estimator, derive_seed(s, 1))?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let tau = quantile(&null, cfg.quantile).max(cfg.min_margin);
    Ok(SeparabilityReport {
        cmi: observed.value,
        mi_new_label_old: observed.mi_x_yz.value,
        mi_new_old: observed.mi_x_z.value,
        tau,
        improves: observed.value > tau,
        null,
        n_rows: rows.len(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformativenessReport {
    /// Estimated `I(z; x)` in nats.
    pub mutual_information: f64,
    /// `1 − exp(−MI)`, clamped to `[0, 1]`.
    pub score: f64,
    pub n: usize,
}

pub const INFORMATIVENESS_MIN_ROWS: usize = 500;

/// `1 − exp(−Î(z; x))` for the latent code of `model` on `dataset`.
pub fn informativeness_score(
    model: &FriedModel,
    dataset: &Dataset,
    cfg: &KlEstimatorConfig,
    seed: u64,
) -> Result<InformativenessReport> {
    if dataset.len() < INFORMATIVENESS_MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "informativeness needs at least {INFORMATIVENESS_MIN_ROWS} rows, got {}",
            dataset.len()
        )));
    }
    let z = model.encode(&dataset.x, &dataset.p)?;
    informativeness_from_codes(&dataset.x, &z, cfg, seed)
}

/// Same score for an arbitrary code matrix `z` aligned with `x`.
pub fn informativeness_from_codes(
    x: &Matrix,
    z: &Matrix,
    cfg: &KlEstimatorConfig,
    seed: u64,
) -> Result<InformativenessReport> {
    let mi = mutual_information(z, x, cfg, seed)?;
    Ok(InformativenessReport {
        mutual_information: mi.value,
        score: (1.0 - (-mi.value).exp()).clamp(0.0, 1.0),
        n: x.rows(),
    })
}
