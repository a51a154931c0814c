use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::{streams, Batch, FriedModel, LossParts};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

/// Mean losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub reconstruction: f64,
    pub disentanglement: f64,
    pub interpolation: f64,
    pub critic_dis: f64,
    pub critic_i: f64,
}

fn diverged(epoch: usize, batch: usize, what: &str) -> Error {
    Error::Divergence(format!("{what} at epoch {epoch}, batch {batch}"))
}

/// Trains a model on `dataset`.
///
/// Each epoch shuffles the rows, pairs position `k` with position `k + 1`
/// (the last wraps to the first), and walks the pairs in mini-batches. Every
/// mini-batch draws one `α ~ U(0, 1)`, takes `critic_steps` disentanglement
/// critic steps, `critic_steps` interpolation critic steps, then one
/// autoencoder step.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(FriedModel, Vec<EpochRecord>)> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::InsufficientData("training needs at least two rows".into()));
    }
    if !dataset.x.is_finite() || !dataset.p.is_finite() {
        return Err(Error::Schema("training data contains non-finite values".into()));
    }
    let mut model = FriedModel::init(
        dataset.feature_dim(),
        dataset.protected_dim(),
        &config.architecture,
        dataset.protected_is_binary(),
        config.seed,
    )?;
    model.configure(config);
    model.protected_mean = dataset.p.column_means();
    model.feature_names = dataset.feature_names.clone();
    model.protected_names = dataset.protected_names.clone();
    model.preprocessing = Some(dataset.meta.clone());

    let root = Rng::new(config.seed);
    let mut shuffle_rng = root.fork(streams::SHUFFLE);
    let mut alpha_rng = root.fork(streams::ALPHA);
    let n = dataset.len();
    let ablation = config.ablation;
    let critic_lr = config.critic_lr();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let order = shuffle_rng.permutation(n);
        let mut sums = LossParts::default();
        let (mut cdis_sum, mut ci_sum) = (0.0, 0.0);
        let mut batches = 0usize;
        for (b, start) in (0..n).step_by(config.batch_size).enumerate() {
            let end = (start + config.batch_size).min(n);
            let idx1 = &order[start..end];
            let idx2: Vec<usize> = (start..end).map(|k| order[(k + 1) % n]).collect();
            let alpha = alpha_rng.uniform();
            let batch = Batch::new(
                dataset.x.select_rows(idx1),
                dataset.x.select_rows(&idx2),
                dataset.p.select_rows(idx1),
                dataset.p.select_rows(&idx2),
                alpha,
            )?;

            let fwd = model.ae_forward(&batch, ablation.mixes())?;
            if let Some(m) = fwd.mixed() {
                if ablation.uses_critic_dis() {
                    for _ in 0..config.critic_steps {
                        let (l, g) = model.critic_dis_loss_and_grads(&m.xprime, &m.pmix)?;
                        if !l.is_finite() {
                            return Err(diverged(epoch, b, "non-finite critic_dis loss"));
                        }
                        model
                            .critic_dis
                            .sgd_step(&g, critic_lr)
                            .map_err(|_| diverged(epoch, b, "non-finite critic_dis gradient"))?;
                        cdis_sum += l / config.critic_steps as f64;
                    }
                }
                if ablation.uses_critic_i() {
                    for _ in 0..config.critic_steps {
                        let (l, g) = model.critic_i_loss_and_grads(&m.xhat, &m.pmix, alpha)?;
                        if !l.is_finite() {
                            return Err(diverged(epoch, b, "non-finite critic_i loss"));
                        }
                        model
                            .critic_i
                            .sgd_step(&g, critic_lr)
                            .map_err(|_| diverged(epoch, b, "non-finite critic_i gradient"))?;
                        ci_sum += l / config.critic_steps as f64;
                    }
                }
            }

            let (parts, grads) = model
                .ae_objective(&batch, &fwd, true)
                .map_err(|e| match e {
                    Error::Divergence(_) => diverged(epoch, b, "non-finite autoencoder loss"),
                    other => other,
                })?;
            let grads = grads.expect("requested");
            model
                .encoder
                .sgd_step(&grads.encoder, config.learning_rate)
                .map_err(|_| diverged(epoch, b, "non-finite encoder gradient"))?;
            model
                .decoder
                .sgd_step(&grads.decoder, config.learning_rate)
                .map_err(|_| diverged(epoch, b, "non-finite decoder gradient"))?;

            sums.total += parts.total;
            sums.reconstruction += parts.reconstruction;
            sums.disentanglement += parts.disentanglement;
            sums.interpolation += parts.interpolation;
            batches += 1;
        }
        let k = batches as f64;
        history.push(EpochRecord {
            epoch: epoch + 1,
            total: sums.total / k,
            reconstruction: sums.reconstruction / k,
            disentanglement: sums.disentanglement / k,
            interpolation: sums.interpolation / k,
            critic_dis: cdis_sum / k,
            critic_i: ci_sum / k,
        });
    }
    Ok((model, history))
}

/// Convenience: encode a whole dataset with the test-time path.
pub fn represent(model: &FriedModel, dataset: &Dataset) -> Result<Matrix> {
    model.encode(&dataset.x, &dataset.p)
}
