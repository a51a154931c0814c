//! Datasets: CSV ingestion with one-hot encoding and standardization,
//! stratified splits, and synthetic generators with known ground truth.

mod csv_load;
mod split;
mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

pub use csv_load::{load_csv, load_csv_reader, ColumnRule, SchemaConfig};
pub use split::{complement, kfold, stratum_keys, train_test_split, TrainTest};
pub use synth::{
    dsprites_synth, synth_bias_dataset, wikipedia_synth, DspritesProtected, DspritesSpec, SynthBiasSpec,
    SynthTruth, WikipediaSpec,
};

/// How one source column became one or more feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// Standardized as `(v - mean) / std`; a zero-variance column is only centered.
    Numeric { name: String, mean: f64, std: f64 },
    OneHot { name: String, levels: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub columns: Vec<ColumnTransform>,
    pub dropped_rows: usize,
    /// Closed-form facts about a synthetic generator, when the data is synthetic.
    pub truth: Option<SynthTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub p: Matrix,
    pub feature_names: Vec<String>,
    pub protected_names: Vec<String>,
    pub meta: Preprocessing,
}

/// Per-column standardization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &Matrix) -> Self {
        Self {
            means: m.column_means(),
            stds: m.column_stds(),
        }
    }

    fn scale_of(std: f64) -> f64 {
        if std > 1e-12 {
            std
        } else {
            1.0
        }
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.means.len() {
            return Err(Error::dim(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                m.cols()
            )));
        }
        Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            (m.get(i, j) - self.means[j]) / Self::scale_of(self.stds[j])
        }))
    }

    pub fn inverse(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.means.len() {
            return Err(Error::dim("standardizer column count mismatch"));
        }
        Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            m.get(i, j) * Self::scale_of(self.stds[j]) + self.means[j]
        }))
    }
}

impl Dataset {
    pub fn new(
        x: Matrix,
        y: Vec<u8>,
        p: Matrix,
        feature_names: Vec<String>,
        protected_names: Vec<String>,
        meta: Preprocessing,
    ) -> Result<Self> {
        if x.rows() != y.len() || x.rows() != p.rows() {
            return Err(Error::dim(format!(
                "row counts disagree: x {}, y {}, p {}",
                x.rows(),
                y.len(),
                p.rows()
            )));
        }
        if feature_names.len() != x.cols() || protected_names.len() != p.cols() {
            return Err(Error::dim("column names do not match matrix widths"));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::Schema("labels must be 0/1".into()));
        }
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::Schema("dataset contains non-finite values".into()));
        }
        Ok(Self {
            x,
            y,
            p,
            feature_names,
            protected_names,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn protected_dim(&self) -> usize {
        self.p.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            p: self.p.select_rows(idx),
            feature_names: self.feature_names.clone(),
            protected_names: self.protected_names.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn labels_column(&self) -> Matrix {
        Matrix::from_fn(self.len(), 1, |i, _| self.y[i] as f64)
    }

    /// Binary group membership used by group metrics: 1 when every protected
    /// column is 1 (so two binary attributes combine as their conjunction).
    pub fn protected_group(&self) -> Vec<u8> {
        (0..self.len())
            .map(|i| u8::from(self.p.row(i).iter().all(|&v| v >= 0.5)))
            .collect()
    }

    /// Features followed by protected columns: the input a black-box model sees.
    pub fn raw_inputs(&self) -> Matrix {
        Matrix::hstack(&[&self.x, &self.p]).expect("row counts validated at construction")
    }

    pub fn raw_input_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .chain(&self.protected_names)
            .cloned()
            .collect()
    }

    /// True when every protected value is exactly 0 or 1.
    pub fn protected_is_binary(&self) -> bool {
        self.p.as_slice().iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Writes features, protected columns and the label as a CSV with header.
    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.raw_input_names();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            rec.extend(self.p.row(i).iter().map(|v| v.to_string()));
            rec.push(self.y[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reverses standardization of the numeric feature columns.
    pub fn destandardize(&self) -> Result<Matrix> {
        let mut out = self.x.clone();
        let mut col = 0;
        for t in &self.meta.columns {
            match t {
                ColumnTransform::Numeric { mean, std, .. } => {
                    let s = if *std > 1e-12 { *std } else { 1.0 };
                    for i in 0..out.rows() {
                        let v = out.get(i, col);
                        out.set(i, col, v * s + mean);
                    }
                    col += 1;
                }
                ColumnTransform::OneHot { levels, .. } => col += levels.len(),
            }
        }
        if col != out.cols() {
            return Err(Error::dim("preprocessing metadata does not cover every feature column"));
        }
        Ok(out)
    }
}

/// Standardizes every column of `raw`, returning the matrix and per-column transforms.
pub(crate) fn standardize_named(raw: &Matrix, names: &[String]) -> (Matrix, Vec<ColumnTransform>) {
    let st = Standardizer::fit(raw);
    let x = st.transform(raw).expect("fitted on the same matrix");
    let cols = names
        .iter()
        .zip(st.means.iter().zip(&st.stds))
        .map(|(n, (&mean, &std))| ColumnTransform::Numeric {
            name: n.clone(),
            mean,
            std,
        })
        .collect();
    (x, cols)
}
