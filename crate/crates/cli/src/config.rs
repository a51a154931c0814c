//! Experiment configuration file: dataset source, training settings and the
//! options of each subcommand. Everything is validated before any compute.

use std::path::{Path, PathBuf};

use fried_core::audit::{ShapleyConfig, TargetSpec};
use fried_core::data::{load_csv, DspritesSpec, SchemaConfig, SynthBiasSpec, WikipediaSpec};
use fried_core::fairness::EvalConfig;
use fried_core::infotheory::{KlEstimatorConfig, SeparabilityConfig};
use fried_core::presets::preset;
use fried_core::{Dataset, Error, Result, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// CSV file plus schema; relative paths resolve against the config file.
    Csv { path: PathBuf, schema: SchemaConfig },
    SynthBias {
        #[serde(default)]
        spec: SynthBiasSpec,
    },
    DspritesSynth {
        #[serde(default)]
        spec: DspritesSpec,
    },
    WikipediaSynth {
        #[serde(default)]
        spec: WikipediaSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub beta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let g = vec![0.0, 0.25, 0.5, 1.0];
        Self {
            beta_grid: g.clone(),
            lambda_grid: g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmiOptions {
    pub separability: SeparabilityConfig,
    /// Also score a row-shuffled copy of the latent code as a control.
    pub shuffled_control: bool,
}

impl Default for CmiOptions {
    fn default() -> Self {
        Self {
            separability: SeparabilityConfig::default(),
            shuffled_control: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditOptions {
    pub target: Option<TargetSpec>,
    pub shapley: ShapleyConfig,
    pub background_size: usize,
    pub n_instances: usize,
    pub train_ratio: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        let d = fried_core::audit::AuditConfig::default();
        Self {
            target: None,
            shapley: d.shapley,
            background_size: d.background_size,
            n_instances: d.n_instances,
            train_ratio: d.train_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Named training preset; the built-in defaults are used when absent.
    #[serde(default)]
    pub preset: Option<String>,
    /// Field overrides merged into the preset's training settings.
    #[serde(default)]
    pub train: Option<Value>,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Also report the informativeness score in `eval`.
    #[serde(default)]
    pub informativeness: bool,
    #[serde(default)]
    pub estimator: KlEstimatorConfig,
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default)]
    pub cmi: CmiOptions,
    #[serde(default)]
    pub audit: AuditOptions,
    /// Model file read by eval, cmi and audit; defaults to `<out>/model.json`.
    #[serde(default)]
    pub model: Option<PathBuf>,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: Vec<u8>,
    pub config: ExperimentConfig,
    pub train: TrainConfig,
    pub base_dir: PathBuf,
}

fn merge(base: &mut Value, overrides: &Value, path: &str) -> Result<()> {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let here = format!("{path}.{k}");
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &here)?,
                    Some(slot) => *slot = v.clone(),
                    None => return Err(Error::Config(format!("unknown training field '{here}'"))),
                }
            }
            Ok(())
        }
        _ => Err(Error::Config(format!("'{path}' must be an object"))),
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config(format!("{name} must be non-empty with finite values >= 0")));
    }
    Ok(())
}

impl Resolved {
    pub fn from_file(path: &Path, seed: u64) -> Result<Self> {
        let raw = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_slice(&raw).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(raw, config, base_dir, seed)
    }

    pub fn new(raw: Vec<u8>, config: ExperimentConfig, base_dir: PathBuf, seed: u64) -> Result<Self> {
        let base = match &config.preset {
            Some(name) => preset(name)?,
            None => TrainConfig::default(),
        };
        let mut value = serde_json::to_value(&base)?;
        if let Some(o) = &config.train {
            merge(&mut value, o, "train")?;
        }
        let mut train: TrainConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("train: {e}")))?;
        train.seed = seed;
        train.validate()?;
        if config.eval.folds < 2 {
            return Err(Error::Config("eval.folds must be >= 2".into()));
        }
        config.eval.downstream.classifier.validate()?;
        config.estimator.validate()?;
        config.cmi.separability.validate()?;
        check_grid("sweep.beta_grid", &config.sweep.beta_grid)?;
        check_grid("sweep.lambda_grid", &config.sweep.lambda_grid)?;
        let a = &config.audit;
        if a.background_size == 0 || a.n_instances == 0 || a.shapley.n_samples == 0 {
            return Err(Error::Config("audit sizes must be >= 1".into()));
        }
        if !(a.train_ratio > 0.0 && a.train_ratio < 1.0) {
            return Err(Error::Config("audit.train_ratio must lie in (0, 1)".into()));
        }
        Ok(Self {
            raw,
            config,
            train,
            base_dir,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads or generates the dataset. Synthetic data uses the spec's own
    /// seed so every subcommand sees the same rows.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.config.dataset {
            DatasetSource::Csv { path, schema } => load_csv(self.resolve(path), schema),
            DatasetSource::SynthBias { spec } => spec.generate(),
            DatasetSource::DspritesSynth { spec } => spec.generate(),
            DatasetSource::WikipediaSynth { spec } => spec.generate(),
        }
    }

    pub fn model_path(&self, out: &Path) -> PathBuf {
        match &self.config.model {
            Some(p) => self.resolve(p),
            None => out.join("model.json"),
        }
    }

    pub fn audit_target(&self) -> Result<&TargetSpec> {
        self.config
            .audit
            .target
            .as_ref()
            .ok_or_else(|| Error::Config("audit requires audit.target".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Resolved> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Resolved::new(text.as_bytes().to_vec(), cfg, PathBuf::new(), 7)
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let r = parse(r#"{"dataset": {"kind": "synth_bias"}}"#).unwrap();
        assert_eq!(r.train.seed, 7);
        assert_eq!(r.train.epochs, TrainConfig::default().epochs);
        assert_eq!(r.config.eval.folds, 5);
    }

    #[test]
    fn overrides_merge_into_preset() {
        let r = parse(
            r#"{"dataset": {"kind": "synth_bias", "spec": {"n": 300}}, "preset": "adult",
                "train": {"epochs": 3, "architecture": {"latent_dim": 4}}}"#,
        )
        .unwrap();
        assert_eq!(r.train.epochs, 3);
        assert_eq!(r.train.architecture.latent_dim, 4);
        assert_eq!(r.train.architecture.hidden, vec![30, 15]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in [
            r#"{"dataset": {"kind": "nope"}}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "preset": "nope"}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "train": {"epochz": 3}}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "train": {"learning_rate": -1}}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "sweep": {"beta_grid": []}}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "eval": {"folds": 1}}"#,
            r#"{"dataset": {"kind": "synth_bias"}, "unknown": 1}"#,
        ] {
            assert!(matches!(parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
