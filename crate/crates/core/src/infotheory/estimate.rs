use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{BinaryClassifier, ClassifierSpec, Matrix, Rng};

/// Settings of the classifier-based KL estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KlEstimatorConfig {
    pub classifier: ClassifierSpec,
    /// Share of each sample set used to train the classifier; the rest is
    /// used to evaluate the plug-in estimate.
    pub train_fraction: f64,
    /// `γ` is clamped to `[clip, 1 − clip]`.
    pub clip: f64,
    /// Sample sets smaller than this are flagged unreliable.
    pub min_reliable: usize,
}

impl Default for KlEstimatorConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierSpec {
                hidden: vec![64, 32],
                epochs: 200,
                learning_rate: 0.01,
                batch_size: 64,
            },
            train_fraction: 0.7,
            clip: 1e-6,
            min_reliable: 20,
        }
    }
}

impl KlEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::config("clip must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    /// Nats; may be negative for finite samples.
    pub value: f64,
    pub n_p: usize,
    pub n_q: usize,
    /// Held-out accuracy of the p-vs-q classifier.
    pub classifier_accuracy: f64,
    pub reliable: bool,
}

fn split_indices(n: usize, fraction: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx = rng.permutation(n);
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let eval = idx.split_off(n_train);
    (idx, eval)
}

/// Plug-in estimate of `KL(P ‖ Q)` from a probabilistic classifier.
///
/// P-samples are labeled 1 and Q-samples 0. With `γ` the classifier's
/// probability of label 1 and `L = γ/(1−γ)` rescaled by the training class
/// ratio, the estimate on held-out points is
/// `mean_P log L − log mean_Q L`.
pub fn kl_estimate_classifier(
    samples_p: &Matrix,
    samples_q: &Matrix,
    cfg: &KlEstimatorConfig,
    seed: u64,
) -> Result<KlEstimate> {
    cfg.validate()?;
    if samples_p.cols() != samples_q.cols() {
        return Err(Error::dim(format!(
            "sample sets have {} and {} columns",
            samples_p.cols(),
            samples_q.cols()
        )));
    }
    let (n_p, n_q) = (samples_p.rows(), samples_q.rows());
    if n_p < 2 || n_q < 2 {
        return Err(Error::InsufficientData("each sample set needs at least two rows".into()));
    }
    let root = Rng::new(seed);
    let (tr_p, ev_p) = split_indices(n_p, cfg.train_fraction, &mut root.fork(1));
    let (tr_q, ev_q) = split_indices(n_q, cfg.train_fraction, &mut root.fork(2));

    let x_train = Matrix::vstack(&[&samples_p.select_rows(&tr_p), &samples_q.select_rows(&tr_q)])?;
    let mut labels = vec![1u8; tr_p.len()];
    labels.extend(std::iter::repeat_n(0u8, tr_q.len()));
    let clf = BinaryClassifier::fit(&x_train, &labels, &cfg.classifier, root.fork(3).seed())?;

    // Odds are scaled by the training prior n_p/n_q; undo that.
    let prior = (tr_q.len() as f64 / tr_p.len() as f64).ln();
    let lo = cfg.clip.ln() - (-cfg.clip).ln_1p();
    let log_ratio = |z: f64| z.clamp(lo, -lo) + prior;

    let logit_p = clf.logits(&samples_p.select_rows(&ev_p))?;
    let logit_q = clf.logits(&samples_q.select_rows(&ev_q))?;
    let first = logit_p.iter().map(|&z| log_ratio(z)).sum::<f64>() / logit_p.len() as f64;
    let lq: Vec<f64> = logit_q.iter().map(|&z| log_ratio(z)).collect();
    let m = lq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = m + (lq.iter().map(|v| (v - m).exp()).sum::<f64>() / lq.len() as f64).ln();

    let hits = logit_p.iter().filter(|&&z| z > 0.0).count() + logit_q.iter().filter(|&&z| z <= 0.0).count();
    Ok(KlEstimate {
        value: first - second,
        n_p,
        n_q,
        classifier_accuracy: hits as f64 / (logit_p.len() + logit_q.len()) as f64,
        reliable: n_p >= cfg.min_reliable && n_q >= cfg.min_reliable,
    })
}

/// `I(A; B)` as `KL(P_AB ‖ P_A ⊗ P_B)`; product samples pair each row of
/// `a` with a deranged row of `b`.
pub fn mutual_information(a: &Matrix, b: &Matrix, cfg: &KlEstimatorConfig, seed: u64) -> Result<KlEstimate> {
    if a.rows() != b.rows() {
        return Err(Error::dim(format!("blocks have {} and {} rows", a.rows(), b.rows())));
    }
    let root = Rng::new(seed);
    let perm = root.fork(1).derangement(a.rows());
    let joint = Matrix::hstack(&[a, b])?;
    let product = Matrix::hstack(&[a, &b.select_rows(&perm)])?;
    kl_estimate_classifier(&joint, &product, cfg, root.fork(2).seed())
}

/// Row-aligned samples of `(X, Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriple {
    pub x: Matrix,
    pub y: Matrix,
    pub z: Matrix,
}

impl SampleTriple {
    pub fn new(x: Matrix, y: Matrix, z: Matrix) -> Result<Self> {
        if x.rows() != y.rows() || x.rows() != z.rows() {
            return Err(Error::dim(format!(
                "row counts disagree: x {}, y {}, z {}",
                x.rows(),
                y.rows(),
                z.rows()
            )));
        }
        Ok(Self { x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmiEstimate {
    /// `Î(X; Y, Z) − Î(X; Z)`.
    pub value: f64,
    pub mi_x_yz: KlEstimate,
    pub mi_x_z: KlEstimate,
    pub n: usize,
}

pub const CMI_MIN_ROWS: usize = 100;

/// `I(X; Y | Z) = I(X; Y, Z) − I(X; Z)`, each term from the classifier
/// estimator.
pub fn cmi_estimate_difference(samples: &SampleTriple, cfg: &KlEstimatorConfig, seed: u64) -> Result<CmiEstimate> {
    if samples.len() < CMI_MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "conditional MI needs at least {CMI_MIN_ROWS} rows, got {}",
            samples.len()
        )));
    }
    let root = Rng::new(seed);
    let yz = Matrix::hstack(&[&samples.y, &samples.z])?;
    let mi_x_yz = mutual_information(&samples.x, &yz, cfg, root.fork(1).seed())?;
    let mi_x_z = mutual_information(&samples.x, &samples.z, cfg, root.fork(2).seed())?;
    Ok(CmiEstimate {
        value: mi_x_yz.value - mi_x_z.value,
        mi_x_yz,
        mi_x_z,
        n: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> KlEstimatorConfig {
        KlEstimatorConfig {
            classifier: ClassifierSpec {
                hidden: vec![16],
                epochs: 20,
                learning_rate: 0.05,
                batch_size: 64,
            },
            ..Default::default()
        }
    }

    fn gaussian(n: usize, shift: f64, rng: &mut Rng) -> Matrix {
        Matrix::from_fn(n, 1, |_, _| rng.normal() + shift)
    }

    #[test]
    fn same_distribution_is_near_zero() {
        let mut rng = Rng::new(1);
        let p = gaussian(1000, 0.0, &mut rng);
        let q = gaussian(1000, 0.0, &mut rng);
        let est = kl_estimate_classifier(&p, &q, &quick(), 2).unwrap();
        assert!(est.value.abs() < 0.05, "{est:?}");
        assert!(est.reliable);
    }

    #[test]
    fn constant_identical_samples_give_zero() {
        let p = Matrix::filled(50, 2, 3.0);
        let q = Matrix::filled(80, 2, 3.0);
        let est = kl_estimate_classifier(&p, &q, &quick(), 0).unwrap();
        assert!(est.value.abs() < 1e-3, "{est:?}");
    }

    #[test]
    fn small_sets_are_flagged() {
        let mut rng = Rng::new(3);
        let p = gaussian(10, 0.0, &mut rng);
        let q = gaussian(30, 1.0, &mut rng);
        let est = kl_estimate_classifier(&p, &q, &quick(), 0).unwrap();
        assert!(!est.reliable);
        assert!(kl_estimate_classifier(&gaussian(1, 0.0, &mut rng), &q, &quick(), 0).is_err());
        assert!(kl_estimate_classifier(&p, &Matrix::zeros(5, 2), &quick(), 0).is_err());
    }

    #[test]
    fn estimate_is_seed_deterministic() {
        let mut rng = Rng::new(4);
        let p = gaussian(200, 0.0, &mut rng);
        let q = gaussian(200, 1.0, &mut rng);
        let a = kl_estimate_classifier(&p, &q, &quick(), 7).unwrap();
        let b = kl_estimate_classifier(&p, &q, &quick(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cmi_requires_enough_rows() {
        let t = SampleTriple::new(Matrix::zeros(50, 1), Matrix::zeros(50, 1), Matrix::zeros(50, 1)).unwrap();
        assert!(matches!(
            cmi_estimate_difference(&t, &quick(), 0),
            Err(Error::InsufficientData(_))
        ));
        assert!(SampleTriple::new(Matrix::zeros(5, 1), Matrix::zeros(4, 1), Matrix::zeros(5, 1)).is_err());
    }
}
