use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which adversarial components take part in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Both critics, latent mixing.
    Full,
    /// Interpolation critic only.
    NoCriticDis,
    /// Disentanglement critic only.
    NoCriticI,
    /// Plain autoencoder: no mixing, no critics.
    VanillaAe,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Full,
        Ablation::NoCriticDis,
        Ablation::NoCriticI,
        Ablation::VanillaAe,
    ];

    pub fn uses_critic_dis(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoCriticI)
    }

    pub fn uses_critic_i(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoCriticDis)
    }

    pub fn mixes(self) -> bool {
        self != Ablation::VanillaAe
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoCriticDis => "no_critic_dis",
            Ablation::NoCriticI => "no_critic_i",
            Ablation::VanillaAe => "vanilla_ae",
        }
    }
}

/// Layer widths. The decoder mirrors the encoder's hidden widths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub critic_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![30, 15],
            latent_dim: 30,
            critic_hidden: vec![30, 15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Defaults to `learning_rate` when absent.
    #[serde(default)]
    pub critic_learning_rate: Option<f64>,
    /// Critic updates per mini-batch, each on the same batch.
    #[serde(default = "one")]
    pub critic_steps: usize,
    pub beta: f64,
    pub lambda: f64,
    pub seed: u64,
    pub ablation: Ablation,
    /// Use the autoencoder objective exactly as printed (critic errors added,
    /// not fooled) instead of the adversarial fooling targets.
    #[serde(default)]
    pub literal_eq4: bool,
    pub architecture: Architecture,
}

fn one() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 100,
            learning_rate: 0.01,
            critic_learning_rate: None,
            critic_steps: 1,
            beta: 1.0,
            lambda: 1.0,
            seed: 0,
            ablation: Ablation::Full,
            literal_eq4: false,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn critic_lr(&self) -> f64 {
        self.critic_learning_rate.unwrap_or(self.learning_rate)
    }

    /// β after applying the ablation (0 when the disentanglement critic is off).
    pub fn effective_beta(&self) -> f64 {
        if self.ablation.uses_critic_dis() {
            self.beta
        } else {
            0.0
        }
    }

    pub fn effective_lambda(&self) -> f64 {
        if self.ablation.uses_critic_i() {
            self.lambda
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.critic_steps == 0 {
            return Err(Error::config("epochs, batch_size and critic_steps must be >= 1"));
        }
        let lr_ok = |v: f64| v.is_finite() && v > 0.0;
        if !lr_ok(self.learning_rate) || !lr_ok(self.critic_lr()) {
            return Err(Error::config("learning rates must be positive and finite"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0 && self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("beta and lambda must be finite and >= 0"));
        }
        let a = &self.architecture;
        if a.latent_dim == 0 || a.hidden.contains(&0) || a.critic_hidden.contains(&0) {
            return Err(Error::config("layer widths must be >= 1"));
        }
        Ok(())
    }
}
