use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blackbox::BlackBoxModel;
use crate::error::{Error, Result};
use crate::numkit::{derive_seed, Matrix, Rng};

/// Largest feature count handled by exact subset enumeration in `Auto` mode.
pub const EXHAUSTIVE_MAX_FEATURES: usize = 8;
/// Hard cap for forced exhaustive mode.
const EXHAUSTIVE_HARD_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMode {
    /// Exhaustive up to `EXHAUSTIVE_MAX_FEATURES` features, Monte-Carlo above.
    Auto,
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyConfig {
    /// Permutations per instance in Monte-Carlo mode.
    pub n_samples: usize,
    pub mode: ShapleyMode,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            mode: ShapleyMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub feature_names: Vec<String>,
    /// Mean `|φ_i|` over the audited instances.
    pub mean_abs: Vec<f64>,
    /// `φ`, one row per instance.
    pub values: Matrix,
    /// Expected prediction under the background, per instance.
    pub base_values: Vec<f64>,
    pub predictions: Vec<f64>,
    pub n_samples: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

impl AttributionReport {
    /// Features ordered by decreasing mean `|φ|`; ties keep column order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.mean_abs.len()).collect();
        idx.sort_by(|&a, &b| self.mean_abs[b].total_cmp(&self.mean_abs[a]));
        idx
    }

    /// 1-based rank of the named feature.
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        let j = self.feature_names.iter().position(|n| n == name)?;
        self.ranking().iter().position(|&k| k == j).map(|r| r + 1)
    }

    /// CSV with columns `feature,mean_abs_attribution,rank`, ordered by rank.
    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "mean_abs_attribution", "rank"])?;
        for (r, j) in self.ranking().into_iter().enumerate() {
            w.write_record([
                self.feature_names[j].clone(),
                self.mean_abs[j].to_string(),
                (r + 1).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact Shapley values of one instance by subset enumeration; absent
/// features are imputed from every background row and averaged.
fn exhaustive_instance(predictor: &BlackBoxModel, x: &[f64], background: &Matrix) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    let b = background.rows();
    let subsets = 1usize << d;
    let mut rows = Vec::with_capacity(subsets * b * d);
    for mask in 0..subsets {
        for r in 0..b {
            let bg = background.row(r);
            rows.extend((0..d).map(|j| if mask >> j & 1 == 1 { x[j] } else { bg[j] }));
        }
    }
    let scores = predictor.predict(&Matrix::new(subsets * b, d, rows)?)?;
    let v: Vec<f64> = scores.chunks(b).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let weights: Vec<f64> = (0..d)
        .map(|s| factorial(s) * factorial(d - s - 1) / factorial(d))
        .collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in (0..subsets).filter(|m| m >> i & 1 == 0) {
            let s = mask.count_ones() as usize;
            *p += weights[s] * (v[mask | 1 << i] - v[mask]);
        }
    }
    Ok((phi, v[0]))
}

/// Permutation-sampling estimate: each sample draws an ordering and one
/// background row, then switches features to the instance's values in
/// order, crediting each switch's change in prediction.
fn monte_carlo_instance(
    predictor: &BlackBoxModel,
    x: &[f64],
    background: &Matrix,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    let mut phi = vec![0.0; d];
    let mut base = 0.0;
    const CHUNK: usize = 2048;
    let mut done = 0;
    while done < n_samples {
        let m = CHUNK.min(n_samples - done);
        let mut orders = Vec::with_capacity(m);
        let mut rows = Vec::with_capacity(m * (d + 1) * d);
        for _ in 0..m {
            let order = rng.permutation(d);
            let mut cur = background.row(rng.below(background.rows())).to_vec();
            rows.extend_from_slice(&cur);
            for &j in &order {
                cur[j] = x[j];
                rows.extend_from_slice(&cur);
            }
            orders.push(order);
        }
        let scores = predictor.predict(&Matrix::new(m * (d + 1), d, rows)?)?;
        for (s, order) in orders.iter().enumerate() {
            let f = &scores[s * (d + 1)..(s + 1) * (d + 1)];
            base += f[0];
            for (t, &j) in order.iter().enumerate() {
                phi[j] += f[t + 1] - f[t];
            }
        }
        done += m;
    }
    let n = n_samples as f64;
    Ok((phi.into_iter().map(|v| v / n).collect(), base / n))
}

/// Shapley attributions of `predictor` at every row of `x`, with absent
/// features imputed from `background`.
pub fn shapley_attribution(
    predictor: &BlackBoxModel,
    x: &Matrix,
    background: &Matrix,
    cfg: &ShapleyConfig,
    seed: u64,
) -> Result<AttributionReport> {
    let d = predictor.input_dim();
    if x.cols() != d || background.cols() != d {
        return Err(Error::dim(format!(
            "predictor has {d} inputs; instances have {}, background {}",
            x.cols(),
            background.cols()
        )));
    }
    if background.rows() == 0 {
        return Err(Error::InsufficientData("background set is empty".into()));
    }
    if cfg.n_samples == 0 {
        return Err(Error::config("n_samples must be >= 1"));
    }
    let exhaustive = match cfg.mode {
        ShapleyMode::Auto => d <= EXHAUSTIVE_MAX_FEATURES,
        ShapleyMode::Exhaustive => {
            if d > EXHAUSTIVE_HARD_CAP {
                return Err(Error::config(format!(
                    "exhaustive mode supports at most {EXHAUSTIVE_HARD_CAP} features"
                )));
            }
            true
        }
        ShapleyMode::MonteCarlo => false,
    };
    let per_instance: Vec<(Vec<f64>, f64)> = (0..x.rows())
        .into_par_iter()
        .map(|i| {
            if exhaustive {
                exhaustive_instance(predictor, x.row(i), background)
            } else {
                let mut rng = Rng::new(derive_seed(seed, i as u64));
                monte_carlo_instance(predictor, x.row(i), background, cfg.n_samples, &mut rng)
            }
        })
        .collect::<Result<_>>()?;
    let predictions = predictor.predict(x)?;
    let n = x.rows();
    let values = Matrix::from_fn(n, d, |i, j| per_instance[i].0[j]);
    let mean_abs = (0..d)
        .map(|j| {
            if n == 0 {
                0.0
            } else {
                (0..n).map(|i| values.get(i, j).abs()).sum::<f64>() / n as f64
            }
        })
        .collect();
    Ok(AttributionReport {
        feature_names: predictor.feature_names().to_vec(),
        mean_abs,
        values,
        base_values: per_instance.iter().map(|p| p.1).collect(),
        predictions,
        n_samples: if exhaustive { 0 } else { cfg.n_samples },
        exhaustive,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn linear(w: Vec<f64>) -> BlackBoxModel {
        BlackBoxModel::new(names(w.len()), move |x| {
            Ok((0..x.rows()).map(|i| x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum()).collect())
        })
    }

    #[test]
    fn linear_with_zero_background_is_exact() {
        let f = linear(vec![2.0, -1.0, 0.5]);
        let x = Matrix::from_rows(&[[1.0, 3.0, -2.0]]).unwrap();
        let r = shapley_attribution(&f, &x, &Matrix::zeros(1, 3), &ShapleyConfig::default(), 0).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.values.row(0), &[2.0, -3.0, -1.0]);
    }

    #[test]
    fn symmetric_and_constant_predictors() {
        let f = linear(vec![1.0, 1.0]);
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let r = shapley_attribution(&f, &x, &Matrix::zeros(1, 2), &ShapleyConfig::default(), 0).unwrap();
        assert_eq!(r.values.row(0), &[1.0, 1.0]);

        let c = BlackBoxModel::new(names(3), |x| Ok(vec![4.0; x.rows()]));
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let bg = Matrix::from_rows(&[[0.0, 5.0, 1.0], [2.0, 2.0, 2.0]]).unwrap();
        for mode in [ShapleyMode::Exhaustive, ShapleyMode::MonteCarlo] {
            let cfg = ShapleyConfig { n_samples: 50, mode };
            let r = shapley_attribution(&c, &x, &bg, &cfg, 1).unwrap();
            assert!(r.values.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn interaction_splits_evenly() {
        // f = x0·x1 at (1,1) with zero background: each gets 1/2.
        let f = BlackBoxModel::new(names(2), |x| Ok((0..x.rows()).map(|i| x.get(i, 0) * x.get(i, 1)).collect()));
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let r = shapley_attribution(&f, &x, &Matrix::zeros(1, 2), &ShapleyConfig::default(), 0).unwrap();
        assert_eq!(r.values.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn ranking_and_csv() {
        let f = linear(vec![1.0, 3.0, -2.0]);
        let x = Matrix::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let r = shapley_attribution(&f, &x, &Matrix::zeros(1, 3), &ShapleyConfig::default(), 0).unwrap();
        assert_eq!(r.ranking(), vec![1, 2, 0]);
        assert_eq!(r.rank_of("f2"), Some(2));
        let mut buf = Vec::new();
        r.write_csv_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "feature,mean_abs_attribution,rank\nf1,3,1\nf2,2,2\nf0,1,3\n");
    }

    #[test]
    fn shape_errors() {
        let f = linear(vec![1.0, 1.0]);
        let cfg = ShapleyConfig::default();
        assert!(shapley_attribution(&f, &Matrix::zeros(1, 3), &Matrix::zeros(1, 2), &cfg, 0).is_err());
        assert!(shapley_attribution(&f, &Matrix::zeros(1, 2), &Matrix::zeros(0, 2), &cfg, 0).is_err());
    }

    fn nonlinear(d: usize, w: Vec<f64>) -> BlackBoxModel {
        // Reads every feature except the last.
        BlackBoxModel::new(names(d), move |x| {
            Ok((0..x.rows())
                .map(|i| {
                    let r = x.row(i);
                    let lin: f64 = r[..d - 1].iter().zip(&w).map(|(a, b)| a * b).sum();
                    lin.tanh() + r[0] * r[1 % (d - 1)]
                })
                .collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn efficiency_and_dummy(d in 2usize..7, seed in 0u64..1000) {
            let mut rng = crate::numkit::Rng::new(seed);
            let w: Vec<f64> = (0..d - 1).map(|_| rng.normal()).collect();
            let f = nonlinear(d, w);
            let x = Matrix::from_fn(3, d, |_, _| rng.normal());
            let bg = Matrix::from_fn(7, d, |_, _| rng.normal());
            let r = shapley_attribution(&f, &x, &bg, &ShapleyConfig::default(), seed).unwrap();
            let ebg = f.predict(&bg).unwrap().iter().sum::<f64>() / 7.0;
            for i in 0..3 {
                let total: f64 = r.values.row(i).iter().sum();
                prop_assert!((total - (r.predictions[i] - ebg)).abs() < 1e-6 * d as f64);
                prop_assert!((r.base_values[i] - ebg).abs() < 1e-12);
                prop_assert_eq!(r.values.get(i, d - 1), 0.0);
            }
        }
    }
}
