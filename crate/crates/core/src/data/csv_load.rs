use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnTransform, Dataset, Preprocessing, Standardizer};
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// A column binarized as `value == positive`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRule {
    pub column: String,
    pub positive: String,
}

/// Describes how a tabular CSV maps onto features, labels and protected columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub label: ColumnRule,
    pub protected: Vec<ColumnRule>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
}

impl SchemaConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks that every referenced column exists in `header`.
    pub fn validate(&self, header: &[String]) -> Result<()> {
        if self.protected.is_empty() {
            return Err(Error::Schema("at least one protected column is required".into()));
        }
        let referenced = std::iter::once(&self.label.column)
            .chain(self.protected.iter().map(|r| &r.column))
            .chain(&self.categorical)
            .chain(&self.drop);
        for col in referenced {
            if !header.iter().any(|h| h == col) {
                return Err(Error::Schema(format!("column '{col}' not found in header")));
            }
        }
        Ok(())
    }
}

fn is_missing(v: &str) -> bool {
    v.is_empty() || v == "?" || v.eq_ignore_ascii_case("na") || v.eq_ignore_ascii_case("nan")
}

pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, schema)
}

/// Loads a CSV: rows with missing values are dropped (and counted),
/// categorical columns are one-hot encoded, numeric columns standardized,
/// label and protected columns binarized by the schema.
pub fn load_csv_reader<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    schema.validate(&header)?;

    let col_of: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let label_idx = col_of[schema.label.column.as_str()];
    let prot_idx: Vec<usize> = schema.protected.iter().map(|r| col_of[r.column.as_str()]).collect();
    let skip: BTreeSet<usize> = std::iter::once(label_idx)
        .chain(prot_idx.iter().copied())
        .chain(schema.drop.iter().map(|c| col_of[c.as_str()]))
        .collect();
    let feature_cols: Vec<usize> = (0..header.len()).filter(|i| !skip.contains(i)).collect();
    let categorical: BTreeSet<usize> = schema.categorical.iter().map(|c| col_of[c.as_str()]).collect();

    let used: Vec<usize> = feature_cols
        .iter()
        .copied()
        .chain(std::iter::once(label_idx))
        .chain(prot_idx.iter().copied())
        .collect();

    let mut records: Vec<csv::StringRecord> = Vec::new();
    let mut dropped = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Load {
                row: records.len() + dropped + 1,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        if used.iter().any(|&c| is_missing(&rec[c])) {
            dropped += 1;
            continue;
        }
        records.push(rec);
    }

    // Levels are sorted so the encoding does not depend on row order.
    let mut levels: HashMap<usize, Vec<String>> = HashMap::new();
    for &c in &categorical {
        let set: BTreeSet<&str> = records.iter().map(|r| &r[c]).collect();
        levels.insert(c, set.into_iter().map(str::to_string).collect());
    }

    let n = records.len();
    let mut numeric_raw: Vec<Vec<f64>> = Vec::new();
    let mut numeric_pos: Vec<usize> = Vec::new();
    let mut names = Vec::new();
    let mut transforms = Vec::new();
    let mut width = 0usize;
    // First pass: lay out columns.
    for &c in &feature_cols {
        if let Some(lv) = levels.get(&c) {
            for l in lv {
                names.push(format!("{}={}", header[c], l));
            }
            transforms.push(ColumnTransform::OneHot {
                name: header[c].clone(),
                levels: lv.clone(),
            });
            width += lv.len();
        } else {
            let mut col = Vec::with_capacity(n);
            for (r, rec) in records.iter().enumerate() {
                let v: f64 = rec[c].parse().map_err(|_| Error::Load {
                    row: r + 1,
                    column: header[c].clone(),
                    message: format!("cannot parse '{}' as a number", &rec[c]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Load {
                        row: r + 1,
                        column: header[c].clone(),
                        message: "non-finite value".into(),
                    });
                }
                col.push(v);
            }
            names.push(header[c].clone());
            transforms.push(ColumnTransform::Numeric {
                name: header[c].clone(),
                mean: 0.0,
                std: 0.0,
            });
            numeric_raw.push(col);
            numeric_pos.push(width);
            width += 1;
        }
    }

    let mut x = Matrix::zeros(n, width);
    let mut numeric_k = 0usize;
    let mut pos = 0usize;
    for (t, &c) in transforms.iter_mut().zip(&feature_cols) {
        match t {
            ColumnTransform::OneHot { levels: lv, .. } => {
                for (r, rec) in records.iter().enumerate() {
                    let k = lv.iter().position(|l| l == &rec[c]).expect("level collected above");
                    x.set(r, pos + k, 1.0);
                }
                pos += lv.len();
            }
            ColumnTransform::Numeric { mean, std, .. } => {
                let raw = Matrix::column_vector(&numeric_raw[numeric_k]);
                let st = Standardizer::fit(&raw);
                let z = st.transform(&raw)?;
                for r in 0..n {
                    x.set(r, numeric_pos[numeric_k], z.get(r, 0));
                }
                *mean = st.means[0];
                *std = st.stds[0];
                numeric_k += 1;
                pos += 1;
            }
        }
    }

    let y: Vec<u8> = records
        .iter()
        .map(|r| u8::from(r[label_idx] == schema.label.positive))
        .collect();
    let p = Matrix::from_fn(n, prot_idx.len(), |r, j| {
        if records[r][prot_idx[j]] == schema.protected[j].positive {
            1.0
        } else {
            0.0
        }
    });
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing values");
    }
    Dataset::new(
        x,
        y,
        p,
        names,
        schema.protected.iter().map(|r| r.column.clone()).collect(),
        Preprocessing {
            columns: transforms,
            dropped_rows: dropped,
            truth: None,
        },
    )
}
