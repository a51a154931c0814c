use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability vector over a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        if probs.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Distribution("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Distribution("weights must be >= 0 with a positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// `(1 − q, q)`.
    pub fn bernoulli(q: f64) -> Result<Self> {
        Self::new(vec![1.0 - q, q])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }
}

fn same_support(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(Error::Distribution(format!(
            "support sizes differ: {} vs {}",
            p.support_size(),
            q.support_size()
        )));
    }
    Ok(())
}

/// `Σ p log(p/q)` in nats.
pub fn kl_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_support(p, q)?;
    let mut total = 0.0;
    for (i, (&a, &b)) in p.probs.iter().zip(&q.probs).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::Distribution(format!(
                "q is zero at outcome {i} where p is positive"
            )));
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffResult {
    /// Nats; `f64::INFINITY` when the supports are disjoint.
    pub value: f64,
    pub u_star: f64,
    pub disjoint: bool,
}

const U_LO: f64 = 1e-6;
const U_HI: f64 = 1.0 - 1e-6;

/// Log-space pairs `(ln p0, ln p1)` on the shared support.
fn shared_logs(p0: &DiscreteDistribution, p1: &DiscreteDistribution) -> Vec<(f64, f64)> {
    p0.probs
        .iter()
        .zip(&p1.probs)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect()
}

/// `log Σ p0^{1−u} p1^u`, via log-sum-exp.
fn log_affinity(logs: &[(f64, f64)], u: f64) -> f64 {
    let terms = logs.iter().map(|(a, b)| (1.0 - u) * a + u * b);
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `−min_u log Σ_x P₀(x)^{1−u} P₁(x)^u`, minimized by golden-section search
/// on `[1e-6, 1 − 1e-6]`. The objective is convex in `u`.
pub fn chernoff_information(p0: &DiscreteDistribution, p1: &DiscreteDistribution) -> Result<ChernoffResult> {
    same_support(p0, p1)?;
    if p0 == p1 {
        return Ok(ChernoffResult {
            value: 0.0,
            u_star: 0.5,
            disjoint: false,
        });
    }
    let logs = shared_logs(p0, p1);
    if logs.is_empty() {
        return Ok(ChernoffResult {
            value: f64::INFINITY,
            u_star: 0.5,
            disjoint: true,
        });
    }
    let f = |u: f64| log_affinity(&logs, u);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (U_LO, U_HI);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // The minimum may sit on a boundary; compare with the interval ends.
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for u in [U_LO, U_HI] {
        let v = f(u);
        if v < best.1 {
            best = (u, v);
        }
    }
    Ok(ChernoffResult {
        value: (-best.1).max(0.0),
        u_star: best.0,
        disjoint: false,
    })
}

/// Brute-force Chernoff information over an evenly spaced `u` grid on
/// `[1e-6, 1 − 1e-6]`. Reference implementation for the search above.
pub fn chernoff_information_grid(
    p0: &DiscreteDistribution,
    p1: &DiscreteDistribution,
    step: f64,
) -> Result<ChernoffResult> {
    same_support(p0, p1)?;
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::config("grid step must lie in (0, 1)"));
    }
    let logs = shared_logs(p0, p1);
    if logs.is_empty() {
        return Ok(ChernoffResult {
            value: f64::INFINITY,
            u_star: 0.5,
            disjoint: true,
        });
    }
    let steps = ((U_HI - U_LO) / step).ceil() as usize;
    let mut best = (U_LO, f64::INFINITY);
    for k in 0..=steps {
        let u = (U_LO + k as f64 * step).min(U_HI);
        let v = log_affinity(&logs, u);
        if v < best.1 {
            best = (u, v);
        }
    }
    Ok(ChernoffResult {
        value: (-best.1).max(0.0),
        u_star: best.0,
        disjoint: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert_eq!(DiscreteDistribution::from_weights(&[1.0, 3.0]).unwrap().probs(), &[0.25, 0.75]);
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(kl_discrete(&p, &p).unwrap(), 0.0);
        let q = dist(&[0.25, 0.75]);
        let want = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl_discrete(&p, &q).unwrap() - want).abs() < 1e-15);
        assert!((kl_discrete(&dist(&[1.0, 0.0]), &p).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(kl_discrete(&p, &dist(&[1.0, 0.0])).is_err());
        assert!(kl_discrete(&p, &dist(&[1.0])).is_err());
    }

    #[test]
    fn chernoff_examples() {
        let p = dist(&[0.3, 0.7]);
        let r = chernoff_information(&p, &p).unwrap();
        assert_eq!(r.value, 0.0);

        let a = DiscreteDistribution::bernoulli(0.1).unwrap();
        let b = DiscreteDistribution::bernoulli(0.9).unwrap();
        let r = chernoff_information(&a, &b).unwrap();
        let want = -(2.0 * 0.09f64.sqrt()).ln();
        assert!((r.value - want).abs() < 1e-12, "{}", r.value);
        assert!((r.u_star - 0.5).abs() < 1e-6);
        assert!((want - 0.5108).abs() < 1e-4);

        let r = chernoff_information(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap();
        assert!(r.disjoint && r.value.is_infinite());
    }

    fn arb_pair() -> impl Strategy<Value = (DiscreteDistribution, DiscreteDistribution)> {
        (2usize..6).prop_flat_map(|k| {
            (
                proptest::collection::vec(0.01f64..1.0, k),
                proptest::collection::vec(0.01f64..1.0, k),
            )
                .prop_map(|(a, b)| {
                    (
                        DiscreteDistribution::from_weights(&a).unwrap(),
                        DiscreteDistribution::from_weights(&b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn chernoff_is_symmetric((p, q) in arb_pair()) {
            let a = chernoff_information(&p, &q).unwrap().value;
            let b = chernoff_information(&q, &p).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn chernoff_bounded_by_kl((p, q) in arb_pair()) {
            let c = chernoff_information(&p, &q).unwrap().value;
            let k = kl_discrete(&p, &q).unwrap().min(kl_discrete(&q, &p).unwrap());
            prop_assert!(c >= 0.0 && c <= k + 1e-9);
        }

        #[test]
        fn chernoff_matches_coarse_grid((p, q) in arb_pair()) {
            let c = chernoff_information(&p, &q).unwrap().value;
            let g = chernoff_information_grid(&p, &q, 1e-3).unwrap().value;
            prop_assert!(c >= g - 1e-12 && c - g < 1e-5);
        }

        #[test]
        fn kl_nonnegative_and_zero_on_self((p, q) in arb_pair()) {
            prop_assert!(kl_discrete(&p, &q).unwrap() >= 0.0);
            prop_assert_eq!(kl_discrete(&p, &p).unwrap(), 0.0);
        }
    }
}
