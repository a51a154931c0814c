//! The disentangling autoencoder and its two critics.
//!
//! Data flow for one training pair `(x1, p1)`, `(x2, p2)` and coefficient `α`:
//!
//! ```text
//! z_k  = f(x_k, p_k)                      shared-weight encoder
//! z'   = α z1 + (1 - α) z2                 latent mixer
//! p'   = α p1 + (1 - α) p2
//! x̂    = g(z', p')                         protected-conditioned decoder
//! p̂    = Critic_dis(z')                    disentanglement critic
//! α̂    = Critic_i(x̂, p')                   interpolation critic
//! ```
//!
//! The critics minimize `‖p' − p̂‖²` and `‖α − α̂‖²`. The autoencoder
//! minimizes reconstruction of the unmixed `x1` plus two fooling terms:
//! `β‖p̄ − Critic_dis(z')‖²`, which drives the critic toward the
//! uninformative population mean `p̄`, and `λ‖Critic_i(x̂, p')‖²`, which makes
//! interpolants look unmixed. With `literal_eq4` the fooling targets are
//! replaced by the critics' own targets (`p'` and `α`).

use serde::{Deserialize, Serialize};

use super::config::{Ablation, Architecture, TrainConfig};
use crate::data::Preprocessing;
use crate::error::{Error, Result};
use crate::numkit::loss::{mse, mse_to_row};
use crate::numkit::{Activation, ForwardCache, Matrix, MlpGrads, MlpParams, Rng};

/// RNG sub-streams used by model construction and training.
pub(crate) mod streams {
    pub const ENCODER: u64 = 1;
    pub const DECODER: u64 = 2;
    pub const CRITIC_DIS: u64 = 3;
    pub const CRITIC_I: u64 = 4;
    pub const SHUFFLE: u64 = 10;
    pub const ALPHA: u64 = 11;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedModel {
    pub encoder: MlpParams,
    pub decoder: MlpParams,
    pub critic_dis: MlpParams,
    pub critic_i: MlpParams,
    pub beta: f64,
    pub lambda: f64,
    pub latent_dim: usize,
    pub feature_dim: usize,
    pub protected_dim: usize,
    /// Column means of the training protected attributes: the fooling target.
    pub protected_mean: Vec<f64>,
    pub literal_eq4: bool,
    pub ablation: Ablation,
    pub seed: u64,
    #[serde(default)]
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub protected_names: Vec<String>,
    #[serde(default)]
    pub preprocessing: Option<Preprocessing>,
}

/// One training pair batch. `x2[k]` is the partner of `x1[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x1: Matrix,
    pub x2: Matrix,
    pub p1: Matrix,
    pub p2: Matrix,
    pub alpha: f64,
}

impl Batch {
    pub fn new(x1: Matrix, x2: Matrix, p1: Matrix, p2: Matrix, alpha: f64) -> Result<Self> {
        let n = x1.rows();
        if x2.rows() != n || p1.rows() != n || p2.rows() != n {
            return Err(Error::dim("batch matrices must have equal row counts"));
        }
        if x1.shape() != x2.shape() || p1.shape() != p2.shape() {
            return Err(Error::dim("paired matrices must have equal shapes"));
        }
        check_alpha(alpha)?;
        Ok(Self { x1, x2, p1, p2, alpha })
    }

    pub fn len(&self) -> usize {
        self.x1.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.rows() == 0
    }

    /// `α p1 + (1 − α) p2`.
    pub fn mixed_protected(&self) -> Matrix {
        mix(&self.p1, &self.p2, self.alpha).expect("shapes validated at construction")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must be in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Convex combination `α z1 + (1 − α) z2`.
pub fn mix(z1: &Matrix, z2: &Matrix, alpha: f64) -> Result<Matrix> {
    check_alpha(alpha)?;
    if z1.shape() != z2.shape() {
        return Err(Error::dim(format!("mix {:?} vs {:?}", z1.shape(), z2.shape())));
    }
    let data = z1
        .as_slice()
        .iter()
        .zip(z2.as_slice())
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    Matrix::new(z1.rows(), z1.cols(), data)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub disentanglement: f64,
    pub interpolation: f64,
}

/// Gradients of the autoencoder objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AeGrads {
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
}

/// Cached encoder/decoder passes for one batch.
pub(crate) struct AeForward {
    c1: ForwardCache,
    recon: Matrix,
    d1: ForwardCache,
    mixed: Option<MixedForward>,
}

pub(crate) struct MixedForward {
    c2: ForwardCache,
    pub xprime: Matrix,
    pub pmix: Matrix,
    pub xhat: Matrix,
    d2: ForwardCache,
}

impl AeForward {
    pub(crate) fn mixed(&self) -> Option<&MixedForward> {
        self.mixed.as_ref()
    }
}

impl FriedModel {
    /// Fresh model with dimension-consistent networks initialized from `seed`.
    pub fn init(
        feature_dim: usize,
        protected_dim: usize,
        arch: &Architecture,
        protected_binary: bool,
        seed: u64,
    ) -> Result<Self> {
        if feature_dim == 0 || protected_dim == 0 || arch.latent_dim == 0 {
            return Err(Error::config("feature, protected and latent dims must be >= 1"));
        }
        let root = Rng::new(seed);
        let chain = |first: usize, hidden: &[usize], last: usize| {
            let mut d = vec![first];
            d.extend_from_slice(hidden);
            d.push(last);
            d
        };
        let reversed: Vec<usize> = arch.hidden.iter().rev().copied().collect();
        let encoder = MlpParams::init(
            &chain(feature_dim + protected_dim, &arch.hidden, arch.latent_dim),
            Activation::Relu,
            Activation::Identity,
            &mut root.fork(streams::ENCODER),
        )?;
        let decoder = MlpParams::init(
            &chain(arch.latent_dim + protected_dim, &reversed, feature_dim),
            Activation::Relu,
            Activation::Identity,
            &mut root.fork(streams::DECODER),
        )?;
        let dis_out = if protected_binary {
            Activation::Sigmoid
        } else {
            Activation::Identity
        };
        let critic_dis = MlpParams::init(
            &chain(arch.latent_dim, &arch.critic_hidden, protected_dim),
            Activation::Relu,
            dis_out,
            &mut root.fork(streams::CRITIC_DIS),
        )?;
        let critic_i = MlpParams::init(
            &chain(feature_dim + protected_dim, &arch.critic_hidden, 1),
            Activation::Relu,
            Activation::Sigmoid,
            &mut root.fork(streams::CRITIC_I),
        )?;
        Ok(Self {
            encoder,
            decoder,
            critic_dis,
            critic_i,
            beta: 0.0,
            lambda: 0.0,
            latent_dim: arch.latent_dim,
            feature_dim,
            protected_dim,
            protected_mean: vec![0.5; protected_dim],
            literal_eq4: false,
            ablation: Ablation::Full,
            seed,
            feature_names: Vec::new(),
            protected_names: Vec::new(),
            preprocessing: None,
        })
    }

    /// Checks the dimension invariants linking the four networks.
    pub fn validate(&self) -> Result<()> {
        let (f, p, l) = (self.feature_dim, self.protected_dim, self.latent_dim);
        let checks = [
            (self.encoder.input_dim() == f + p, "encoder input = features + protected"),
            (self.encoder.output_dim() == l, "encoder output = latent"),
            (self.decoder.input_dim() == l + p, "decoder input = latent + protected"),
            (self.decoder.output_dim() == f, "decoder output = features"),
            (self.critic_dis.input_dim() == l, "critic_dis input = latent"),
            (self.critic_dis.output_dim() == p, "critic_dis output = protected"),
            (self.critic_i.input_dim() == f + p, "critic_i input = features + protected"),
            (self.critic_i.output_dim() == 1, "critic_i output = 1"),
            (self.protected_mean.len() == p, "protected mean has one entry per column"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::dim(format!("model invariant violated: {what}")));
            }
        }
        Ok(())
    }

    fn check_xp(&self, x: &Matrix, p: &Matrix) -> Result<()> {
        if x.cols() != self.feature_dim || p.cols() != self.protected_dim || x.rows() != p.rows() {
            return Err(Error::dim(format!(
                "expected x with {} and p with {} columns on equal rows, got {:?} and {:?}",
                self.feature_dim,
                self.protected_dim,
                x.shape(),
                p.shape()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: &Matrix, p: &Matrix) -> Result<Matrix> {
        self.check_xp(x, p)?;
        self.encoder.predict(&Matrix::hstack(&[x, p])?)
    }

    pub fn decode(&self, zprime: &Matrix, p: &Matrix) -> Result<Matrix> {
        if zprime.cols() != self.latent_dim || p.cols() != self.protected_dim || zprime.rows() != p.rows() {
            return Err(Error::dim(format!(
                "expected latent with {} and p with {} columns, got {:?} and {:?}",
                self.latent_dim,
                self.protected_dim,
                zprime.shape(),
                p.shape()
            )));
        }
        self.decoder.predict(&Matrix::hstack(&[zprime, p])?)
    }

    /// Test-time path: no mixing. Returns `(X', X̂)`.
    pub fn infer(&self, x: &Matrix, p: &Matrix) -> Result<(Matrix, Matrix)> {
        let z = self.encode(x, p)?;
        let xhat = self.decode(&z, p)?;
        Ok((z, xhat))
    }

    /// Mean squared error of `Critic_dis(z')` against `p`.
    pub fn critic_dis_loss(&self, zprime: &Matrix, p: &Matrix) -> Result<f64> {
        Ok(self.critic_dis_loss_and_grads(zprime, p)?.0)
    }

    pub fn critic_dis_loss_and_grads(&self, zprime: &Matrix, p: &Matrix) -> Result<(f64, MlpGrads)> {
        if zprime.rows() != p.rows() || p.cols() != self.protected_dim {
            return Err(Error::dim("critic_dis: latent and protected rows/cols mismatch"));
        }
        let (phat, cache) = self.critic_dis.forward(zprime)?;
        let (loss, g) = mse(&phat, p)?;
        let (grads, _) = self.critic_dis.backward(&cache, &g)?;
        Ok((loss, grads))
    }

    /// Mean squared error of `Critic_i(x̂, p)` against `α`.
    pub fn critic_i_loss(&self, xhat: &Matrix, p: &Matrix, alpha: f64) -> Result<f64> {
        Ok(self.critic_i_loss_and_grads(xhat, p, alpha)?.0)
    }

    pub fn critic_i_loss_and_grads(&self, xhat: &Matrix, p: &Matrix, alpha: f64) -> Result<(f64, MlpGrads)> {
        check_alpha(alpha)?;
        self.check_xp(xhat, p)?;
        let input = Matrix::hstack(&[xhat, p])?;
        let (ahat, cache) = self.critic_i.forward(&input)?;
        let (loss, g) = mse_to_row(&ahat, &[alpha])?;
        let (grads, _) = self.critic_i.backward(&cache, &g)?;
        Ok((loss, grads))
    }

    pub(crate) fn ae_forward(&self, batch: &Batch, mixes: bool) -> Result<AeForward> {
        self.check_xp(&batch.x1, &batch.p1)?;
        self.check_xp(&batch.x2, &batch.p2)?;
        let (z1, c1) = self.encoder.forward(&Matrix::hstack(&[&batch.x1, &batch.p1])?)?;
        let (recon, d1) = self.decoder.forward(&Matrix::hstack(&[&z1, &batch.p1])?)?;
        let mixed = if mixes {
            let (z2, c2) = self.encoder.forward(&Matrix::hstack(&[&batch.x2, &batch.p2])?)?;
            let xprime = mix(&z1, &z2, batch.alpha)?;
            let pmix = batch.mixed_protected();
            let (xhat, d2) = self.decoder.forward(&Matrix::hstack(&[&xprime, &pmix])?)?;
            Some(MixedForward {
                c2,
                xprime,
                pmix,
                xhat,
                d2,
            })
        } else {
            None
        };
        Ok(AeForward { c1, recon, d1, mixed })
    }

    /// Autoencoder objective and, when `with_grads`, its gradients for the
    /// encoder and decoder (critics held fixed).
    pub(crate) fn ae_objective(
        &self,
        batch: &Batch,
        fwd: &AeForward,
        with_grads: bool,
    ) -> Result<(LossParts, Option<AeGrads>)> {
        let l = self.latent_dim;
        let f = self.feature_dim;
        let alpha = batch.alpha;
        let (reconstruction, g_recon) = mse(&fwd.recon, &batch.x1)?;

        let mut parts = LossParts {
            reconstruction,
            ..Default::default()
        };
        let mut g_xprime: Option<Matrix> = None;
        let mut dec_grads_mixed: Option<MlpGrads> = None;

        if let Some(m) = &fwd.mixed {
            if self.ablation.uses_critic_dis() {
                let (phat, cache) = self.critic_dis.forward(&m.xprime)?;
                let (term, g) = if self.literal_eq4 {
                    mse(&phat, &m.pmix)?
                } else {
                    mse_to_row(&phat, &self.protected_mean)?
                };
                parts.disentanglement = term;
                if with_grads && self.beta > 0.0 {
                    let (_, gin) = self.critic_dis.backward(&cache, &g.scale(self.beta))?;
                    g_xprime = Some(gin);
                }
            }
            if self.ablation.uses_critic_i() {
                let input = Matrix::hstack(&[&m.xhat, &m.pmix])?;
                let (ahat, cache) = self.critic_i.forward(&input)?;
                let target = if self.literal_eq4 { alpha } else { 0.0 };
                let (term, g) = mse_to_row(&ahat, &[target])?;
                parts.interpolation = term;
                if with_grads && self.lambda > 0.0 {
                    let (_, gin) = self.critic_i.backward(&cache, &g.scale(self.lambda))?;
                    let g_xhat = gin.slice_cols(0, f);
                    let (gdec, g_dec_in) = self.decoder.backward(&m.d2, &g_xhat)?;
                    dec_grads_mixed = Some(gdec);
                    let g = g_dec_in.slice_cols(0, l);
                    g_xprime = Some(match g_xprime {
                        Some(prev) => prev.add(&g)?,
                        None => g,
                    });
                }
            }
        }
        parts.total =
            parts.reconstruction + self.beta * parts.disentanglement + self.lambda * parts.interpolation;
        if !parts.total.is_finite() {
            return Err(Error::Divergence("non-finite autoencoder loss".into()));
        }
        if !with_grads {
            return Ok((parts, None));
        }

        let (mut gdec, g_dec_in1) = self.decoder.backward(&fwd.d1, &g_recon)?;
        if let Some(gm) = &dec_grads_mixed {
            gdec.add_assign(gm)?;
        }
        let mut g_z1 = g_dec_in1.slice_cols(0, l);
        let mut genc;
        match (&g_xprime, &fwd.mixed) {
            (Some(gx), Some(m)) => {
                g_z1.axpy(alpha, gx)?;
                genc = self.encoder.backward(&fwd.c1, &g_z1)?.0;
                let g_z2 = gx.scale(1.0 - alpha);
                genc.add_assign(&self.encoder.backward(&m.c2, &g_z2)?.0)?;
            }
            _ => {
                genc = self.encoder.backward(&fwd.c1, &g_z1)?.0;
            }
        }
        Ok((
            parts,
            Some(AeGrads {
                encoder: genc,
                decoder: gdec,
            }),
        ))
    }

    /// Autoencoder objective on a batch under this model's ablation and sign convention.
    pub fn autoencoder_loss(&self, batch: &Batch) -> Result<LossParts> {
        let fwd = self.ae_forward(batch, self.ablation.mixes())?;
        Ok(self.ae_objective(batch, &fwd, false)?.0)
    }

    pub fn autoencoder_loss_and_grads(&self, batch: &Batch) -> Result<(LossParts, AeGrads)> {
        let fwd = self.ae_forward(batch, self.ablation.mixes())?;
        let (parts, grads) = self.ae_objective(batch, &fwd, true)?;
        Ok((parts, grads.expect("requested")))
    }

    /// Applies the training configuration's weights and switches.
    pub(crate) fn configure(&mut self, cfg: &TrainConfig) {
        self.beta = cfg.effective_beta();
        self.lambda = cfg.effective_lambda();
        self.ablation = cfg.ablation;
        self.literal_eq4 = cfg.literal_eq4;
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Schema(format!("not a model file (format '{}')", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model file version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub const MODEL_FORMAT: &str = "fried-model";
pub const MODEL_VERSION: u32 = 1;

/// On-disk container: `{"format": "fried-model", "version": 1, "model": {...}}`.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: FriedModel,
}
