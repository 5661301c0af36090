use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::MaturityLabel;
use crate::rng::child_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Class-preserving train/test split.
///
/// The global test size is `round(n * test_fraction)`. Each class starts at
/// `round(count * test_fraction)` test rows and the allocation is nudged,
/// class by class, toward the global size along the largest rounding
/// residuals. Every class keeps at least one training row; classes with a
/// single row go entirely to training.
pub fn stratified_split(
    labels: &[MaturityLabel],
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); MaturityLabel::ALL.len()];
    for (i, label) in labels.iter().enumerate() {
        by_class[label.index()].push(i);
    }

    let mut warnings = Vec::new();
    let target_total = (labels.len() as f64 * test_fraction).round() as usize;
    let ideal: Vec<f64> = by_class
        .iter()
        .map(|rows| rows.len() as f64 * test_fraction)
        .collect();
    let capacity: Vec<usize> = by_class.iter().map(|rows| rows.len().saturating_sub(1)).collect();
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() == 1 {
            warnings.push(format!(
                "class {} has a single row; it is kept in the training set",
                MaturityLabel::ALL[c]
            ));
        }
    }
    let mut alloc: Vec<usize> = ideal
        .iter()
        .zip(&capacity)
        .map(|(x, &cap)| (x.round() as usize).min(cap))
        .collect();

    loop {
        let total: usize = alloc.iter().sum();
        if total < target_total {
            // most under-allocated class with room; ties go to the lower class
            let pick = (0..alloc.len())
                .filter(|&c| alloc[c] < capacity[c])
                .fold(None, |best: Option<usize>, c| match best {
                    Some(b) if ideal[b] - alloc[b] as f64 >= ideal[c] - alloc[c] as f64 => Some(b),
                    _ => Some(c),
                });
            match pick {
                Some(c) => alloc[c] += 1,
                None => break,
            }
        } else if total > target_total {
            let pick = (0..alloc.len())
                .filter(|&c| alloc[c] > 0)
                .fold(None, |best: Option<usize>, c| match best {
                    Some(b) if alloc[b] as f64 - ideal[b] >= alloc[c] as f64 - ideal[c] => Some(b),
                    _ => Some(c),
                });
            match pick {
                Some(c) => alloc[c] -= 1,
                None => break,
            }
        } else {
            break;
        }
    }

    let mut train_rows = Vec::with_capacity(labels.len());
    let mut test_rows = Vec::with_capacity(target_total);
    for (c, rows) in by_class.iter().enumerate() {
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut child_rng(seed, c as u64));
        test_rows.extend_from_slice(&shuffled[..alloc[c]]);
        train_rows.extend_from_slice(&shuffled[alloc[c]..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(DatasetSplit {
        train_rows,
        test_rows,
        seed,
        warnings,
    })
}
