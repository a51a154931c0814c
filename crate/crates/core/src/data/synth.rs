//! Synthetic generators with known ground truth.
//!
//! `synth_bias` is the tabular workhorse: protected attribute `p`, two
//! p-independent informative features, and one proxy column that leaks `p`.
//! The label is a thresholded score
//!
//! ```text
//! score = (1 - bias) * merit + bias * shift * (2p - 1) + label_noise * eps
//! Y     = 1[score > 0]
//! ```
//!
//! with `merit = (f1 + f2) / sqrt(2)` and `eps ~ N(0, 1)`, so
//! `P(Y = 1 | p = g) = Phi(bias * shift * (2g - 1) / sqrt((1 - bias)^2 + label_noise^2))`.
//! With `bias = 1` and no noise the label equals `p`; with `bias = 0` it is
//! independent of `p`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{standardize_named, Dataset, Preprocessing};
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    /// `P(Y = 1 | group = g)` for g = 0, 1.
    pub positive_rate_by_group: Vec<f64>,
    /// `|rate_0 - rate_1|`: the demographic-parity gap of the true labels.
    pub label_rate_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthBiasSpec {
    pub n: usize,
    pub bias: f64,
    pub label_noise: f64,
    /// Score offset applied per protected group, scaled by `bias`.
    pub protected_shift: f64,
    /// Standard deviation of the noise added to `p` in the proxy column.
    pub proxy_noise: f64,
    /// Extra pure-noise feature columns appended after the proxy.
    pub noise_features: usize,
    pub seed: u64,
}

impl Default for SynthBiasSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            bias: 0.6,
            label_noise: 0.2,
            protected_shift: 0.2,
            proxy_noise: 0.1,
            noise_features: 0,
            seed: 0,
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

impl SynthBiasSpec {
    pub fn truth(&self) -> SynthTruth {
        let spread = ((1.0 - self.bias).powi(2) + self.label_noise.powi(2)).sqrt();
        let offset = self.bias * self.protected_shift;
        let rate = |g: f64| {
            let s = offset * (2.0 * g - 1.0);
            if spread == 0.0 {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                std_normal().cdf(s / spread)
            }
        };
        let (r0, r1) = (rate(0.0), rate(1.0));
        SynthTruth {
            positive_rate_by_group: vec![r0, r1],
            label_rate_gap: (r0 - r1).abs(),
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        if self.n < 10 {
            return Err(Error::config("synth_bias needs n >= 10"));
        }
        if !(0.0..=1.0).contains(&self.bias) || self.label_noise < 0.0 || self.proxy_noise < 0.0 {
            return Err(Error::config("bias must be in [0, 1]; noise levels must be >= 0"));
        }
        let mut rng = Rng::new(self.seed);
        let width = 3 + self.noise_features;
        let mut raw = Matrix::zeros(self.n, width);
        let mut p = Matrix::zeros(self.n, 1);
        let mut y = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let g = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
            let f1 = rng.normal();
            let f2 = rng.normal();
            let proxy = g + self.proxy_noise * rng.normal();
            let eps = rng.normal();
            let merit = (f1 + f2) / std::f64::consts::SQRT_2;
            let score = (1.0 - self.bias) * merit
                + self.bias * self.protected_shift * (2.0 * g - 1.0)
                + self.label_noise * eps;
            let row = raw.row_mut(i);
            row[0] = f1;
            row[1] = f2;
            row[2] = proxy;
            for v in &mut row[3..] {
                *v = rng.normal();
            }
            p.set(i, 0, g);
            y.push(u8::from(score > 0.0));
        }
        let mut names = vec!["informative_1".to_string(), "informative_2".into(), "proxy".into()];
        names.extend((0..self.noise_features).map(|k| format!("noise_{}", k + 1)));
        let (x, columns) = standardize_named(&raw, &names);
        Dataset::new(
            x,
            y,
            p,
            names,
            vec!["protected".into()],
            Preprocessing {
                columns,
                dropped_rows: 0,
                truth: Some(self.truth()),
            },
        )
    }
}

/// Tabular data with a controllable protected-attribute bias (see module docs).
pub fn synth_bias_dataset(n: usize, bias: f64, label_noise: f64, seed: u64) -> Result<Dataset> {
    SynthBiasSpec {
        n,
        bias,
        label_noise,
        seed,
        ..Default::default()
    }
    .generate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DspritesProtected {
    Scale,
    Shape,
    ShapeAndScale,
}

/// Flattened 16×16 sprite images: squares, ellipses and triangles at
/// varying scale and position. The label is whether the sprite sits in the
/// lower half of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DspritesSpec {
    pub n: usize,
    pub protected: DspritesProtected,
    /// Only scales strictly above this value are generated.
    pub min_scale: f64,
    pub pixel_noise: f64,
    pub seed: u64,
}

impl Default for DspritesSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            protected: DspritesProtected::Scale,
            min_scale: 0.7,
            pixel_noise: 0.05,
            seed: 0,
        }
    }
}

pub const SPRITE_SIDE: usize = 16;
const SPRITE_SCALES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn render_sprite(shape: usize, scale: f64, cx: f64, cy: f64, rng: &mut Rng, noise: f64) -> Vec<f64> {
    let r = 5.0 * scale;
    let mut px = Vec::with_capacity(SPRITE_SIDE * SPRITE_SIDE);
    for row in 0..SPRITE_SIDE {
        for col in 0..SPRITE_SIDE {
            let dx = col as f64 + 0.5 - cx;
            let dy = row as f64 + 0.5 - cy;
            // Signed distance-like value: negative inside the shape.
            let d = match shape {
                0 => dx.abs().max(dy.abs()) - r,
                1 => (dx * dx / 1.0 + dy * dy / 0.6).sqrt() - r,
                _ => {
                    let half_width = (dy + r) / 2.0;
                    (dx.abs() - half_width).max(-r - dy).max(dy - r)
                }
            };
            let v = (0.5 - d).clamp(0.0, 1.0) + noise * rng.normal();
            px.push(v);
        }
    }
    px
}

impl DspritesSpec {
    pub fn generate(&self) -> Result<Dataset> {
        if self.n < 10 {
            return Err(Error::config("dsprites stand-in needs n >= 10"));
        }
        let scales: Vec<f64> = SPRITE_SCALES.iter().copied().filter(|&s| s > self.min_scale).collect();
        if scales.is_empty() {
            return Err(Error::config("scale filter removes every scale"));
        }
        let scale_cut = scales.iter().sum::<f64>() / scales.len() as f64;
        let mut rng = Rng::new(self.seed);
        let d = SPRITE_SIDE * SPRITE_SIDE;
        let mut raw = Matrix::zeros(self.n, d);
        let pcols = match self.protected {
            DspritesProtected::ShapeAndScale => 2,
            _ => 1,
        };
        let mut p = Matrix::zeros(self.n, pcols);
        let mut y = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let shape = rng.below(3);
            let scale = scales[rng.below(scales.len())];
            let cx = 5.0 + rng.below(6) as f64 + 0.5;
            let cy = 5.0 + rng.below(6) as f64 + 0.5;
            let img = render_sprite(shape, scale, cx, cy, &mut rng, self.pixel_noise);
            raw.row_mut(i).copy_from_slice(&img);
            let big = f64::from(u8::from(scale >= scale_cut - 1e-9));
            let square = f64::from(u8::from(shape == 0));
            match self.protected {
                DspritesProtected::Scale => p.set(i, 0, big),
                DspritesProtected::Shape => p.set(i, 0, square),
                DspritesProtected::ShapeAndScale => {
                    p.set(i, 0, square);
                    p.set(i, 1, big);
                }
            }
            y.push(u8::from(cy > SPRITE_SIDE as f64 / 2.0));
        }
        let names: Vec<String> = (0..d)
            .map(|k| format!("px_{}_{}", k / SPRITE_SIDE, k % SPRITE_SIDE))
            .collect();
        let (x, columns) = standardize_named(&raw, &names);
        let pnames = match self.protected {
            DspritesProtected::Scale => vec!["scale".to_string()],
            DspritesProtected::Shape => vec!["shape".to_string()],
            DspritesProtected::ShapeAndScale => vec!["shape".to_string(), "scale".to_string()],
        };
        Dataset::new(
            x,
            y,
            p,
            names,
            pnames,
            Preprocessing {
                columns,
                dropped_rows: 0,
                truth: None,
            },
        )
    }
}

pub fn dsprites_synth(spec: &DspritesSpec) -> Result<Dataset> {
    spec.generate()
}

/// Bag-of-words counts with a block of identity tokens that appear more
/// often when `p = 1`, and a block of toxic tokens that appear when `Y = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WikipediaSpec {
    pub n: usize,
    pub vocab: usize,
    pub doc_len: usize,
    pub block: usize,
    /// `P(Y = 1 | p) = 0.25 + bias * p`.
    pub bias: f64,
    pub seed: u64,
}

impl Default for WikipediaSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            vocab: 1000,
            doc_len: 30,
            block: 50,
            bias: 0.15,
            seed: 0,
        }
    }
}

impl WikipediaSpec {
    pub fn generate(&self) -> Result<Dataset> {
        if self.n < 10 || self.vocab < 3 * self.block || self.block == 0 {
            return Err(Error::config("wikipedia stand-in needs n >= 10 and vocab >= 3 * block"));
        }
        if !(0.0..=0.75).contains(&self.bias) {
            return Err(Error::config("wikipedia bias must be in [0, 0.75]"));
        }
        let mut rng = Rng::new(self.seed);
        let general = self.vocab - 2 * self.block;
        // Zipf weights over the general vocabulary.
        let mut cdf = Vec::with_capacity(general);
        let mut acc = 0.0;
        for k in 0..general {
            acc += 1.0 / (k + 1) as f64;
            cdf.push(acc);
        }
        let total = acc;
        let mut raw = Matrix::zeros(self.n, self.vocab);
        let mut p = Matrix::zeros(self.n, 1);
        let mut y = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let g = rng.bernoulli(0.5);
            let toxic = rng.bernoulli(0.25 + self.bias * f64::from(u8::from(g)));
            let row = raw.row_mut(i);
            for _ in 0..self.doc_len {
                let u = rng.uniform();
                let tok = if g && u < 0.15 {
                    rng.below(self.block)
                } else if toxic && u > 0.85 {
                    self.block + rng.below(self.block)
                } else {
                    let t = rng.uniform() * total;
                    2 * self.block + cdf.partition_point(|&c| c < t).min(general - 1)
                };
                row[tok] += 1.0;
            }
            p.set(i, 0, f64::from(u8::from(g)));
            y.push(u8::from(toxic));
        }
        let raw = raw.map(f64::ln_1p);
        let names: Vec<String> = (0..self.vocab).map(|k| format!("tok_{k}")).collect();
        let (x, columns) = standardize_named(&raw, &names);
        let r0 = 0.25;
        let r1 = 0.25 + self.bias;
        Dataset::new(
            x,
            y,
            p,
            names,
            vec!["identity_mention".into()],
            Preprocessing {
                columns,
                dropped_rows: 0,
                truth: Some(SynthTruth {
                    positive_rate_by_group: vec![r0, r1],
                    label_rate_gap: (r1 - r0).abs(),
                }),
            },
        )
    }
}

pub fn wikipedia_synth(spec: &WikipediaSpec) -> Result<Dataset> {
    spec.generate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::demographic_parity_difference;

    #[test]
    fn unbiased_labels_give_near_zero_bayes_gap() {
        let ds = synth_bias_dataset(10_000, 0.0, 0.2, 1).unwrap();
        // Bayes rule on the informative features alone: sign of the merit.
        let yhat: Vec<u8> = (0..ds.len())
            .map(|i| u8::from(ds.x.get(i, 0) + ds.x.get(i, 1) > 0.0))
            .collect();
        let gap = demographic_parity_difference(&yhat, &ds.protected_group()).unwrap();
        assert!(gap < 0.05, "{gap}");
    }

    #[test]
    fn full_bias_without_noise_makes_label_equal_protected() {
        let ds = synth_bias_dataset(500, 1.0, 0.0, 2).unwrap();
        let g = ds.protected_group();
        assert_eq!(ds.y, g);
        assert_eq!(demographic_parity_difference(&ds.y, &g).unwrap(), 1.0);
        assert_eq!(ds.meta.truth.as_ref().unwrap().label_rate_gap, 1.0);
    }

    #[test]
    fn same_seed_same_dataset() {
        assert_eq!(
            synth_bias_dataset(200, 0.4, 0.2, 9).unwrap(),
            synth_bias_dataset(200, 0.4, 0.2, 9).unwrap()
        );
        assert_ne!(
            synth_bias_dataset(200, 0.4, 0.2, 9).unwrap().x,
            synth_bias_dataset(200, 0.4, 0.2, 10).unwrap().x
        );
    }

    #[test]
    fn empirical_group_rates_match_closed_form() {
        for (bias, noise) in [(0.6, 0.2), (0.3, 0.5), (0.9, 0.1)] {
            let n = 20_000;
            let ds = synth_bias_dataset(n, bias, noise, 5).unwrap();
            let truth = ds.meta.truth.clone().unwrap();
            let g = ds.protected_group();
            for grp in 0..2u8 {
                let idx: Vec<usize> = (0..n).filter(|&i| g[i] == grp).collect();
                let rate = idx.iter().filter(|&&i| ds.y[i] == 1).count() as f64 / idx.len() as f64;
                let tol = 2.0 / (n as f64).sqrt();
                assert!(
                    (rate - truth.positive_rate_by_group[grp as usize]).abs() < tol,
                    "bias {bias}: group {grp} rate {rate} vs {}",
                    truth.positive_rate_by_group[grp as usize]
                );
            }
        }
    }

    #[test]
    fn proxy_column_tracks_protected() {
        let ds = synth_bias_dataset(1000, 0.5, 0.2, 3).unwrap();
        let g = ds.protected_group();
        let agree = (0..ds.len())
            .filter(|&i| u8::from(ds.x.get(i, 2) > 0.0) == g[i])
            .count();
        assert!(agree as f64 / 1000.0 > 0.99);
    }

    #[test]
    fn sprites_have_expected_shape_and_protected_columns() {
        let ds = DspritesSpec {
            n: 60,
            protected: DspritesProtected::ShapeAndScale,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert_eq!(ds.feature_dim(), 256);
        assert_eq!(ds.protected_dim(), 2);
        assert!(ds.protected_is_binary());
        assert!(ds.y.contains(&1) && ds.y.contains(&0));
        assert!(DspritesSpec { min_scale: 1.0, ..Default::default() }.generate().is_err());
    }

    #[test]
    fn bag_of_words_rates() {
        let ds = WikipediaSpec {
            n: 4000,
            vocab: 300,
            block: 20,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert_eq!(ds.feature_dim(), 300);
        let g = ds.protected_group();
        let rate = |grp: u8| {
            let idx: Vec<usize> = (0..ds.len()).filter(|&i| g[i] == grp).collect();
            idx.iter().filter(|&&i| ds.y[i] == 1).count() as f64 / idx.len() as f64
        };
        assert!((rate(0) - 0.25).abs() < 0.04);
        assert!((rate(1) - 0.40).abs() < 0.04);
    }
}
