use std::collections::BTreeMap;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numkit::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTest {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratum key per row: `(label, group)`, or just the label when some
/// label×group combination is empty.
pub fn stratum_keys(ds: &Dataset) -> Vec<(u8, u8)> {
    let group = ds.protected_group();
    let mut counts = [[0usize; 2]; 2];
    for (&y, &g) in ds.y.iter().zip(&group) {
        counts[y as usize][g as usize] += 1;
    }
    let labels: Vec<usize> = (0..2).filter(|&y| counts[y][0] + counts[y][1] > 0).collect();
    let groups: Vec<usize> = (0..2).filter(|&g| counts[0][g] + counts[1][g] > 0).collect();
    let complete = labels.iter().all(|&y| groups.iter().all(|&g| counts[y][g] > 0));
    if complete {
        ds.y.iter().zip(&group).map(|(&y, &g)| (y, g)).collect()
    } else {
        log::warn!("a (label, protected) stratum is empty; stratifying on the label only");
        ds.y.iter().map(|&y| (y, 0)).collect()
    }
}

fn shuffled_strata(ds: &Dataset, rng: &mut Rng) -> Vec<Vec<usize>> {
    let keys = stratum_keys(ds);
    let mut strata: BTreeMap<(u8, u8), Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.into_iter().enumerate() {
        strata.entry(k).or_default().push(i);
    }
    strata
        .into_values()
        .map(|mut v| {
            rng.shuffle(&mut v);
            v
        })
        .collect()
}

/// Stratified train/test split; `ratio` is the training fraction.
pub fn train_test_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<TrainTest> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut rng = Rng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in shuffled_strata(ds, &mut rng) {
        let k = (ratio * s.len() as f64).round() as usize;
        train.extend_from_slice(&s[..k]);
        test.extend_from_slice(&s[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTest { train, test })
}

/// Stratified k-fold partition. Returns the test indices of each fold; the
/// folds are disjoint and cover every row.
pub fn kfold(ds: &Dataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::config("at least two folds are required"));
    }
    if ds.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {folds} folds",
            ds.len()
        )));
    }
    let mut rng = Rng::new(seed);
    let mut out = vec![Vec::new(); folds];
    // Dealing the concatenated strata round-robin keeps fold sizes within one
    // of each other and every stratum spread evenly.
    let order: Vec<usize> = shuffled_strata(ds, &mut rng).into_iter().flatten().collect();
    for (k, i) in order.into_iter().enumerate() {
        out[k % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Indices not in `fold`, for a sorted `fold`.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - fold.len());
    let mut it = fold.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
