//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::numkit::mlp::{MlpGrads, MlpParams};

/// Compares analytic gradients with central differences over every parameter
/// of every network in `params`.
///
/// `loss_and_grads` must return the loss and one gradient set per network.
/// The result is the largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn gradcheck<F>(params: &[MlpParams], epsilon: f64, mut loss_and_grads: F) -> Result<f64>
where
    F: FnMut(&[MlpParams]) -> Result<(f64, Vec<MlpGrads>)>,
{
    if !(epsilon > 0.0) {
        return Err(Error::config("gradcheck epsilon must be positive"));
    }
    let (loss, analytic) = loss_and_grads(params)?;
    if !loss.is_finite() {
        return Err(Error::Divergence("non-finite loss in gradcheck".into()));
    }
    if analytic.len() != params.len() {
        return Err(Error::dim("one gradient set per network is required"));
    }
    let mut work: Vec<MlpParams> = params.to_vec();
    let mut max_err: f64 = 0.0;
    for (net, grads) in analytic.iter().enumerate() {
        let flat = grads.flatten();
        if flat.len() != params[net].num_params() {
            return Err(Error::dim(format!("gradient size mismatch for network {net}")));
        }
        for (k, &a) in flat.iter().enumerate() {
            let orig = work[net].param(k);
            *work[net].param_mut(k) = orig + epsilon;
            let (plus, _) = loss_and_grads(&work)?;
            *work[net].param_mut(k) = orig - epsilon;
            let (minus, _) = loss_and_grads(&work)?;
            *work[net].param_mut(k) = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Divergence("non-finite loss in gradcheck".into()));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            max_err = max_err.max((a - numeric).abs() / denom);
        }
    }
    Ok(max_err)
}

/// Single-network convenience wrapper.
pub fn gradcheck_single<F>(params: &MlpParams, epsilon: f64, mut loss_and_grads: F) -> Result<f64>
where
    F: FnMut(&MlpParams) -> Result<(f64, MlpGrads)>,
{
    gradcheck(std::slice::from_ref(params), epsilon, |nets| {
        let (l, g) = loss_and_grads(&nets[0])?;
        Ok((l, vec![g]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::loss::{bce_with_logits, mse};
    use crate::numkit::{Activation, Matrix, Rng};

    fn batch(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    #[test]
    fn quadratic_loss_on_linear_net_is_exact() {
        let mut rng = Rng::new(11);
        let net = MlpParams::init(&[3, 2], Activation::Identity, Activation::Identity, &mut rng).unwrap();
        let x = batch(&mut rng, 5, 3);
        let t = batch(&mut rng, 5, 2);
        let err = gradcheck_single(&net, 1e-5, |n| {
            let (y, c) = n.forward(&x)?;
            let (l, dy) = mse(&y, &t)?;
            Ok((l, n.backward(&c, &dy)?.0))
        })
        .unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn random_two_layer_net_matches_finite_differences() {
        let mut rng = Rng::new(5);
        let net = MlpParams::init(&[4, 6, 3], Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let x = batch(&mut rng, 8, 4);
        let t = Matrix::from_fn(8, 3, |_, _| rng.uniform());
        let err = gradcheck_single(&net, 1e-5, |n| {
            let (y, c) = n.forward(&x)?;
            let (l, dy) = mse(&y, &t)?;
            Ok((l, n.backward(&c, &dy)?.0))
        })
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn cross_entropy_gradient() {
        let mut rng = Rng::new(6);
        let net = MlpParams::init(&[3, 5, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = batch(&mut rng, 10, 3);
        let y = Matrix::from_fn(10, 1, |i, _| (i % 2) as f64);
        let err = gradcheck_single(&net, 1e-5, |n| {
            let (z, c) = n.forward(&x)?;
            let (l, dz) = bce_with_logits(&z, &y)?;
            Ok((l, n.backward(&c, &dz)?.0))
        })
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let net = MlpParams::init(&[2, 2], Activation::Relu, Activation::Identity, &mut Rng::new(0)).unwrap();
        let err = gradcheck_single(&net, 1e-5, |n| Ok((3.0, MlpGrads::zeros_like(n)))).unwrap();
        assert!(err < 1e-8);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let net = MlpParams::init(&[2, 2], Activation::Relu, Activation::Identity, &mut Rng::new(0)).unwrap();
        let r = gradcheck_single(&net, 1e-5, |n| Ok((f64::NAN, MlpGrads::zeros_like(n))));
        assert!(matches!(r, Err(Error::Divergence(_))));
        assert!(gradcheck_single(&net, 0.0, |n| Ok((0.0, MlpGrads::zeros_like(n)))).is_err());
    }
}
