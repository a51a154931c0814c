use serde::{Deserialize, Serialize};

use super::blackbox::{compose_audit_predictor, BlackBoxModel};
use super::shapley::{shapley_attribution, AttributionReport, ShapleyConfig};
use crate::data::{train_test_split, Dataset, Preprocessing};
use crate::error::{Error, Result};
use crate::fried::{train, FriedModel, TrainConfig};
use crate::numkit::{derive_seed, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub shapley: ShapleyConfig,
    /// Rows drawn from the training split for absent-feature imputation.
    pub background_size: usize,
    /// Test-split rows that are explained.
    pub n_instances: usize,
    pub train_ratio: f64,
    /// Training settings of the per-feature auxiliary models.
    pub aux_train: TrainConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            shapley: ShapleyConfig::default(),
            background_size: 100,
            n_instances: 100,
            train_ratio: 0.8,
            aux_train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReports {
    /// Target attributions over the raw inputs `[X, p]`.
    pub direct: AttributionReport,
    /// Per raw column, the attribution of its passthrough in the
    /// decoder-composed predictor where that column is the one disentangled.
    pub indirect: AttributionReport,
    pub instances: Vec<usize>,
    pub background: Vec<usize>,
}

fn without_column(m: &Matrix, j: usize) -> Matrix {
    let keep: Vec<usize> = (0..m.cols()).filter(|&c| c != j).collect();
    m.select_cols(&keep)
}

/// Model where raw column `j` plays the protected role: features are the
/// remaining raw columns, the passthrough is column `j`.
fn auxiliary_model(dataset: &Dataset, j: usize, cfg: &TrainConfig) -> Result<FriedModel> {
    let raw = dataset.raw_inputs();
    let mut names = dataset.raw_input_names();
    let pname = names.remove(j);
    let aux = Dataset::new(
        without_column(&raw, j),
        dataset.y.clone(),
        raw.slice_cols(j, j + 1),
        names,
        vec![pname],
        Preprocessing::default(),
    )?;
    Ok(train(&aux, cfg)?.0)
}

/// Predictor over `(z_j, x_j)` that decodes the other raw columns, reinserts
/// `x_j` at position `j`, and applies `target`.
fn compose_auxiliary(model: &FriedModel, target: &BlackBoxModel, j: usize) -> BlackBoxModel {
    let l = model.latent_dim;
    let mut names: Vec<String> = (0..l).map(|i| format!("z{i}")).collect();
    names.push(target.feature_names()[j].clone());
    let model = model.clone();
    let target = target.clone();
    BlackBoxModel::new(names, move |input| {
        let z = input.slice_cols(0, l);
        let pass = input.slice_cols(l, l + 1);
        let rest = model.decode(&z, &pass)?;
        let raw = Matrix::hstack(&[&rest.slice_cols(0, j), &pass, &rest.slice_cols(j, rest.cols())])?;
        target.predict(&raw)
    })
}

/// Direct and indirect influence of every raw input column on `target`.
///
/// The direct report explains `target` on `[X, p]`. For the indirect report
/// each raw column is disentangled in turn: the protected columns use
/// `model`, every feature column uses an auxiliary model trained with that
/// column as its protected attribute. The column's indirect influence is the
/// attribution of its passthrough in the decoder-composed predictor, which
/// includes its effect routed through the reconstructed correlated columns.
pub fn indirect_influence_report(
    model: &FriedModel,
    target: &BlackBoxModel,
    dataset: &Dataset,
    cfg: &AuditConfig,
    seed: u64,
) -> Result<InfluenceReports> {
    let raw_names = dataset.raw_input_names();
    if target.feature_names() != raw_names.as_slice() {
        return Err(Error::dim(format!(
            "target columns {:?} do not match dataset columns {:?}",
            target.feature_names(),
            raw_names
        )));
    }
    if model.feature_dim != dataset.feature_dim() || model.protected_dim != dataset.protected_dim() {
        return Err(Error::dim("model dimensions do not match the dataset"));
    }
    if cfg.background_size == 0 || cfg.n_instances == 0 {
        return Err(Error::config("background_size and n_instances must be >= 1"));
    }
    let split = train_test_split(dataset, cfg.train_ratio, derive_seed(seed, 0))?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InsufficientData("train or test split is empty".into()));
    }
    let mut rng = Rng::new(derive_seed(seed, 1));
    let mut background = split.train.clone();
    rng.shuffle(&mut background);
    background.truncate(cfg.background_size);
    background.sort_unstable();
    let mut instances = split.test.clone();
    rng.shuffle(&mut instances);
    instances.truncate(cfg.n_instances);
    instances.sort_unstable();

    let raw = dataset.raw_inputs();
    let direct = shapley_attribution(
        target,
        &raw.select_rows(&instances),
        &raw.select_rows(&background),
        &cfg.shapley,
        derive_seed(seed, 2),
    )?;

    let (f, k) = (dataset.feature_dim(), dataset.protected_dim());
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); f + k];

    // Protected columns: the supplied model.
    let composed = compose_audit_predictor(model, target)?;
    let z = model.encode(&dataset.x, &dataset.p)?;
    let zp = Matrix::hstack(&[&z, &dataset.p])?;
    let main = shapley_attribution(
        &composed,
        &zp.select_rows(&instances),
        &zp.select_rows(&background),
        &cfg.shapley,
        derive_seed(seed, 3),
    )?;
    for c in 0..k {
        columns[f + c] = main.values.column(model.latent_dim + c);
    }

    // Feature columns: one auxiliary model each.
    for (j, col) in columns.iter_mut().enumerate().take(f) {
        let aux_cfg = TrainConfig {
            seed: derive_seed(seed, 100 + j as u64),
            ..cfg.aux_train.clone()
        };
        let aux = auxiliary_model(dataset, j, &aux_cfg)?;
        let predictor = compose_auxiliary(&aux, target, j);
        let rest = without_column(&raw, j);
        let pass = raw.slice_cols(j, j + 1);
        let zj = aux.encode(&rest, &pass)?;
        let inputs = Matrix::hstack(&[&zj, &pass])?;
        let rep = shapley_attribution(
            &predictor,
            &inputs.select_rows(&instances),
            &inputs.select_rows(&background),
            &cfg.shapley,
            derive_seed(seed, 200 + j as u64),
        )?;
        *col = rep.values.column(aux.latent_dim);
    }

    let n = instances.len();
    let values = Matrix::from_fn(n, f + k, |i, j| columns[j][i]);
    let mean_abs = columns
        .iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / n as f64)
        .collect();
    let indirect = AttributionReport {
        feature_names: raw_names,
        mean_abs,
        values,
        base_values: main.base_values,
        predictions: main.predictions,
        n_samples: main.n_samples,
        exhaustive: main.exhaustive,
        seed,
    };
    Ok(InfluenceReports {
        direct,
        indirect,
        instances,
        background,
    })
}
