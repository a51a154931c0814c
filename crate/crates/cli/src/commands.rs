//! Subcommand implementations. Each command computes everything in memory
//! and returns the files to write; nothing touches the output directory
//! until the whole command has succeeded.

use std::path::Path;

use fried_core::audit::{indirect_influence_report, AuditConfig};
use fried_core::fairness::{
    evaluate_representation, pareto_front, sweep_tradeoff, write_tradeoff_csv_to, SweepOutcome, TradeoffPoint,
};
use fried_core::fried::{train, EpochRecord};
use fried_core::infotheory::{informativeness_score, separability_check, InformativenessReport, SeparabilityReport};
use fried_core::numkit::{derive_seed, Rng};
use fried_core::{Dataset, Error, FriedModel, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Resolved;

/// Files produced by a command, as (file name, contents).
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Writes every file to a temporary name first, then renames them all.
    pub fn commit(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = out.join(format!(".{name}.tmp"));
            if let Err(e) = std::fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = std::fs::remove_file(t);
                }
                let _ = std::fs::remove_file(&tmp);
                return Err(e.into());
            }
            staged.push((tmp, out.join(name)));
        }
        for (tmp, dest) in &staged {
            std::fs::rename(tmp, dest)?;
        }
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn dataset_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    ds.write_csv_to(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Serialize)]
struct Provenance {
    command: &'static str,
    seed: u64,
    config_sha256: String,
    dataset_sha256: String,
    rows: usize,
}

fn provenance(command: &'static str, cfg: &Resolved, ds: &Dataset, seed: u64) -> Result<Provenance> {
    Ok(Provenance {
        command,
        seed,
        config_sha256: sha256_hex(&cfg.raw),
        dataset_sha256: sha256_hex(&dataset_bytes(ds)?),
        rows: ds.len(),
    })
}

fn load_model(cfg: &Resolved, out: &Path, ds: &Dataset) -> Result<FriedModel> {
    let path = cfg.model_path(out);
    let model = FriedModel::load(&path)
        .map_err(|e| Error::Schema(format!("cannot load model {}: {e}", path.display())))?;
    if model.feature_dim != ds.feature_dim() || model.protected_dim != ds.protected_dim() {
        return Err(Error::Schema(format!(
            "model expects {} features and {} protected columns, dataset has {} and {}",
            model.feature_dim,
            model.protected_dim,
            ds.feature_dim(),
            ds.protected_dim()
        )));
    }
    Ok(model)
}

#[derive(Debug, Serialize)]
struct DataManifest {
    #[serde(flatten)]
    provenance: Provenance,
    feature_names: Vec<String>,
    protected_names: Vec<String>,
    label_rate: f64,
    group_label_rates: Option<(f64, f64)>,
    truth: Option<fried_core::data::SynthTruth>,
}

pub fn gen_data(cfg: &Resolved, seed: u64) -> Result<Outputs> {
    let ds = cfg.dataset()?;
    let bytes = dataset_bytes(&ds)?;
    let label_rate = ds.y.iter().map(|&v| f64::from(v)).sum::<f64>() / ds.len().max(1) as f64;
    let manifest = DataManifest {
        provenance: provenance("gen-data", cfg, &ds, seed)?,
        feature_names: ds.feature_names.clone(),
        protected_names: ds.protected_names.clone(),
        label_rate,
        group_label_rates: fried_core::fairness::group_positive_rates(&ds.y, &ds.protected_group()).ok(),
        truth: ds.meta.truth.clone(),
    };
    let mut out = Outputs::default();
    out.add("dataset.csv", bytes);
    out.add_json("dataset_manifest.json", &manifest)?;
    Ok(out)
}

fn history_csv(history: &[EpochRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in history {
        w.serialize(rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Serialize)]
struct TrainManifest<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    train: &'a fried_core::TrainConfig,
    final_epoch: Option<EpochRecord>,
}

pub fn train_cmd(cfg: &Resolved, seed: u64) -> Result<Outputs> {
    let ds = cfg.dataset()?;
    let (model, history) = train(&ds, &cfg.train)?;
    let mut out = Outputs::default();
    out.add("model.json", model.to_json()?.into_bytes());
    out.add("history.csv", history_csv(&history)?);
    out.add_json(
        "train_manifest.json",
        &TrainManifest {
            provenance: provenance("train", cfg, &ds, seed)?,
            train: &cfg.train,
            final_epoch: history.last().copied(),
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct EvalReport {
    #[serde(flatten)]
    provenance: Provenance,
    folds: usize,
    point: TradeoffPoint,
    informativeness: Option<InformativenessReport>,
}

pub fn eval_cmd(cfg: &Resolved, out_dir: &Path, seed: u64) -> Result<Outputs> {
    let ds = cfg.dataset()?;
    let model = load_model(cfg, out_dir, &ds)?;
    let point = evaluate_representation(
        &model,
        &ds,
        cfg.config.eval.folds,
        &cfg.config.eval.downstream,
        derive_seed(seed, 0),
    )?;
    let informativeness = if cfg.config.informativeness {
        Some(informativeness_score(&model, &ds, &cfg.config.estimator, derive_seed(seed, 1))?)
    } else {
        None
    };
    let mut out = Outputs::default();
    out.add_json(
        "eval.json",
        &EvalReport {
            provenance: provenance("eval", cfg, &ds, seed)?,
            folds: cfg.config.eval.folds,
            point,
            informativeness,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SweepManifest<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    beta_grid: &'a [f64],
    lambda_grid: &'a [f64],
    base_train: &'a fried_core::TrainConfig,
    failures: Vec<SweepOutcome>,
}

pub fn sweep_cmd(cfg: &Resolved, seed: u64) -> Result<Outputs> {
    let ds = cfg.dataset()?;
    let grid = &cfg.config.sweep;
    let outcomes = sweep_tradeoff(&ds, &grid.beta_grid, &grid.lambda_grid, &cfg.train, &cfg.config.eval)?;
    let points: Vec<TradeoffPoint> = outcomes.iter().filter_map(|o| o.point.clone()).collect();
    let failures: Vec<SweepOutcome> = outcomes.into_iter().filter(|o| o.error.is_some()).collect();
    if points.is_empty() {
        let first = failures.first().and_then(|f| f.error.clone()).unwrap_or_default();
        return Err(Error::Divergence(format!("every sweep point failed; first error: {first}")));
    }
    let mut all = Vec::new();
    write_tradeoff_csv_to(&mut all, &points)?;
    let mut front = Vec::new();
    write_tradeoff_csv_to(&mut front, &pareto_front(&points))?;
    let mut out = Outputs::default();
    out.add("sweep_all.csv", all);
    out.add("sweep_front.csv", front);
    out.add_json(
        "sweep_manifest.json",
        &SweepManifest {
            provenance: provenance("sweep", cfg, &ds, seed)?,
            beta_grid: &grid.beta_grid,
            lambda_grid: &grid.lambda_grid,
            base_train: &cfg.train,
            failures,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct CmiReport {
    #[serde(flatten)]
    provenance: Provenance,
    representation: SeparabilityReport,
    /// Same check with the latent rows shuffled, which should not improve.
    shuffled_control: Option<SeparabilityReport>,
}

pub fn cmi_cmd(cfg: &Resolved, out_dir: &Path, seed: u64) -> Result<Outputs> {
    let ds = cfg.dataset()?;
    let model = load_model(cfg, out_dir, &ds)?;
    let z = model.encode(&ds.x, &ds.p)?;
    let groups = ds.protected_group();
    let sep = &cfg.config.cmi.separability;
    let representation = separability_check(&ds.x, &z, &ds.y, &groups, sep, derive_seed(seed, 0))?;
    let shuffled_control = if cfg.config.cmi.shuffled_control {
        let perm = Rng::new(derive_seed(seed, 1)).permutation(z.rows());
        let zs = z.select_rows(&perm);
        Some(separability_check(&ds.x, &zs, &ds.y, &groups, sep, derive_seed(seed, 2))?)
    } else {
        None
    };
    let mut out = Outputs::default();
    out.add_json(
        "cmi.json",
        &CmiReport {
            provenance: provenance("cmi", cfg, &ds, seed)?,
            representation,
            shuffled_control,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct AuditManifest<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    target: &'a fried_core::audit::TargetSpec,
    direct_ranking: Vec<String>,
    indirect_ranking: Vec<String>,
    instances: Vec<usize>,
    shapley_samples: usize,
    exhaustive: bool,
}

pub fn audit_cmd(cfg: &Resolved, out_dir: &Path, seed: u64) -> Result<Outputs> {
    let spec = cfg.audit_target()?;
    let ds = cfg.dataset()?;
    let model = load_model(cfg, out_dir, &ds)?;
    let target = spec.build(&ds.raw_input_names())?;
    let a = &cfg.config.audit;
    let audit_cfg = AuditConfig {
        shapley: a.shapley.clone(),
        background_size: a.background_size,
        n_instances: a.n_instances,
        train_ratio: a.train_ratio,
        aux_train: cfg.train.clone(),
    };
    let reports = indirect_influence_report(&model, &target, &ds, &audit_cfg, seed)?;
    let names = |r: &fried_core::audit::AttributionReport| -> Vec<String> {
        r.ranking().into_iter().map(|i| r.feature_names[i].clone()).collect()
    };
    let mut direct = Vec::new();
    reports.direct.write_csv_to(&mut direct)?;
    let mut indirect = Vec::new();
    reports.indirect.write_csv_to(&mut indirect)?;
    let mut out = Outputs::default();
    out.add("audit_direct.csv", direct);
    out.add("audit_indirect.csv", indirect);
    out.add_json(
        "audit_manifest.json",
        &AuditManifest {
            provenance: provenance("audit", cfg, &ds, seed)?,
            target: spec,
            direct_ranking: names(&reports.direct),
            indirect_ranking: names(&reports.indirect),
            instances: reports.instances.clone(),
            shapley_samples: reports.direct.n_samples,
            exhaustive: reports.direct.exhaustive,
        },
    )?;
    Ok(out)
}
