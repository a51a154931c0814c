//! Named architecture and training presets.

use crate::error::{Error, Result};
use crate::fried::{Ablation, Architecture, TrainConfig};

pub const PRESET_NAMES: [&str; 5] = ["adult", "compas", "dsprites_synth", "wikipedia_synth", "synth_bias"];

fn config(hidden: &[usize], latent_dim: usize, epochs: usize, batch_size: usize, learning_rate: f64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size,
        learning_rate,
        critic_learning_rate: None,
        critic_steps: 1,
        beta: 1.0,
        lambda: 1.0,
        seed: 0,
        ablation: Ablation::Full,
        literal_eq4: false,
        architecture: Architecture {
            hidden: hidden.to_vec(),
            latent_dim,
            critic_hidden: hidden.to_vec(),
        },
    }
}

/// Training configuration for a named preset. Every network (encoder,
/// decoder, both critics) uses the preset's hidden widths.
///
/// `synth_bias` is a desk-scale setting for the synthetic bias generator:
/// small networks, a larger step size and a faster critic.
pub fn preset(name: &str) -> Result<TrainConfig> {
    Ok(match name {
        "adult" => config(&[30, 15], 30, 100, 100, 0.01),
        "compas" => config(&[25, 12], 12, 75, 100, 0.01),
        "dsprites_synth" => config(&[256, 64], 32, 5000, 50, 0.03),
        "wikipedia_synth" => config(&[500, 250, 100], 50, 7000, 100, 0.05),
        "synth_bias" => TrainConfig {
            critic_learning_rate: Some(0.2),
            ..config(&[16, 8], 8, 100, 100, 0.05)
        },
        other => {
            return Err(Error::config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(matches!(preset("mnist"), Err(Error::Config(_))));
    }

    #[test]
    fn adult_matches_published_settings() {
        let c = preset("adult").unwrap();
        assert_eq!(c.architecture.hidden, vec![30, 15]);
        assert_eq!(c.architecture.latent_dim, 30);
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (100, 100, 0.01));
    }
}
