use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_forest, ForestConfig};
use crate::error::{Error, Result};
use crate::rng::{child_rng, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScores {
    pub folds: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub std: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Assigns rows to `k` folds. Each class is shuffled separately, the classes
/// are concatenated in index order and rows are dealt round-robin, so fold
/// sizes differ by at most one and every class is spread evenly.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Result<(Vec<Vec<usize>>, Vec<String>)> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    if y.len() < k {
        return Err(Error::TooFewRows(format!("{} rows for {k} folds", y.len())));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut warnings = Vec::new();
    let mut dealt = Vec::with_capacity(y.len());
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            warnings.push(format!(
                "class {c} has {} rows, fewer than k = {k}; stratification is degraded",
                rows.len()
            ));
        }
        rows.shuffle(&mut child_rng(seed, 1_000 + c as u64));
        dealt.extend(rows);
    }
    let mut folds = vec![Vec::new(); k];
    for (p, row) in dealt.into_iter().enumerate() {
        folds[p % k].push(row);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok((folds, warnings))
}

/// Stratified k-fold accuracy of a freshly trained forest per fold.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    config: &ForestConfig,
    seed: u64,
) -> Result<CvScores> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (folds, warnings) = stratified_folds(y, k, seed)?;
    let folds_acc: Vec<f64> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train: Vec<usize> = (0..y.len()).filter(|i| test.binary_search(i).is_err()).collect();
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let forest = fit_forest(&tx, &ty, config, derive_seed(seed, f as u64))?;
            let correct = test
                .iter()
                .filter(|&&i| forest.predict(&x[i]).map(|p| p == y[i]).unwrap_or(false))
                .count();
            Ok(correct as f64 / test.len() as f64)
        })
        .collect::<Result<_>>()?;
    let mean = folds_acc.iter().sum::<f64>() / k as f64;
    let std = (folds_acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(CvScores {
        folds: folds_acc,
        mean,
        std,
        warnings,
    })
}
