//! Random forest classification and model evaluation.
//!
//! CART trees grown on bootstrap samples with Gini impurity, `sqrt(M)`
//! candidate features per split and balanced class weights. Training is
//! deterministic for a given seed regardless of thread count: each tree
//! draws from its own derived stream and results are collected in tree order.

mod cv;
mod metrics;
mod tree;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::child_rng;

pub use cv::{cross_validate, stratified_folds, CvScores};
pub use metrics::{evaluate, AveragedMetrics, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use tree::{gini, leaf_distribution, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `floor(sqrt(M))`.
    pub max_features: Option<usize>,
    pub balanced_class_weights: bool,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
            balanced_class_weights: true,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: TreeNode,
    /// Rows not drawn into this tree's bootstrap sample.
    pub oob_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub seed: u64,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_weights: Vec<f64>,
    pub trees: Vec<Tree>,
}

/// `n / (n_present_classes * count)` per class; absent classes get 0.
pub fn balanced_class_weights(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { y.len() as f64 / (present * c as f64) })
        .collect()
}

/// Fits a forest to rows `x` with class indices `y`. The class index space
/// is `0..=max(y)`.
pub fn fit_forest(x: &[Vec<f64>], y: &[usize], config: &ForestConfig, seed: u64) -> Result<Forest> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n_features = x[0].len();
    if n_features == 0 {
        return Err(Error::EmptyData);
    }
    if let Some(row) = x.iter().find(|r| r.len() != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            actual: row.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewRows("a forest needs at least two rows".into()));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut present = vec![false; n_classes];
    y.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::SingleClass);
    }
    if config.n_trees == 0 || config.max_depth == 0 {
        return Err(Error::InvalidConfig("n_trees and max_depth must be positive".into()));
    }

    let class_weights = if config.balanced_class_weights {
        balanced_class_weights(y, n_classes)
    } else {
        vec![1.0; n_classes]
    };
    let max_features = config
        .max_features
        .unwrap_or_else(|| ((n_features as f64).sqrt().floor() as usize).max(1))
        .clamp(1, n_features);
    let builder = tree::TreeBuilder {
        x,
        y,
        n_classes,
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split.max(2),
        min_samples_leaf: config.min_samples_leaf.max(1),
        max_features,
    };

    let n = x.len();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = child_rng(seed, t as u64);
            let mut counts = vec![0usize; n];
            if config.bootstrap {
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
            } else {
                counts.iter_mut().for_each(|c| *c = 1);
            }
            let rows: Vec<(usize, usize, f64)> = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(r, &c)| (r, c, c as f64 * class_weights[y[r]]))
                .collect();
            let oob_rows = (0..n).filter(|&r| counts[r] == 0).collect();
            Tree {
                root: builder.build(&rows, &mut rng),
                oob_rows,
            }
        })
        .collect();

    Ok(Forest {
        config: *config,
        seed,
        n_features,
        n_classes,
        class_weights,
        trees,
    })
}

impl Forest {
    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Mean of the trees' normalized leaf distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.proba_unchecked(x))
    }

    pub(crate) fn proba_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut proba = vec![0.0; self.n_classes];
        for tree in &self.trees {
            let totals = tree.root.leaf(x);
            let sum: f64 = totals.iter().sum();
            for (p, t) in proba.iter_mut().zip(totals) {
                *p += t / sum;
            }
        }
        let n = self.trees.len() as f64;
        proba.iter_mut().for_each(|p| *p /= n);
        proba
    }

    /// Class with the highest probability; ties go to the lower index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    /// Mean decrease in impurity: each tree's split gains per feature,
    /// normalized within the tree, averaged over trees and renormalized.
    /// Trees without splits contribute nothing.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            let mut per_tree = vec![0.0; self.n_features];
            tree.root.visit_splits(&mut |f, gain| per_tree[f] += gain);
            let sum: f64 = per_tree.iter().sum();
            if sum > 0.0 {
                for (t, v) in total.iter_mut().zip(&per_tree) {
                    *t += v / sum;
                }
            }
        }
        let sum: f64 = total.iter().sum();
        if sum > 0.0 {
            total.iter_mut().for_each(|v| *v /= sum);
        }
        total
    }

    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(|t| t.root.depth()).max().unwrap_or(0)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-feature training medians used to fill absent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianImputer {
    pub medians: Vec<f64>,
}

impl MedianImputer {
    /// Columns with no present value impute to 0.
    pub fn fit(rows: &[Vec<Option<f64>>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let medians = (0..width)
            .map(|c| {
                let mut column: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
                if column.is_empty() {
                    return 0.0;
                }
                column.sort_by(f64::total_cmp);
                let m = column.len();
                if m % 2 == 1 {
                    column[m / 2]
                } else {
                    (column[m / 2 - 1] + column[m / 2]) / 2.0
                }
            })
            .collect();
        Self { medians }
    }

    pub fn transform(&self, rows: &[Vec<Option<f64>>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(&self.medians)
                    .map(|(v, m)| v.unwrap_or(*m))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;
    use proptest::prelude::*;

    fn separable(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        (x, y)
    }

    #[test]
    fn separable_training_accuracy_is_perfect() {
        let (x, y) = separable(40);
        let forest = fit_forest(&x, &y, &ForestConfig { n_trees: 25, ..Default::default() }, 42).unwrap();
        assert_eq!(forest.predict_many(&x).unwrap(), y);
        assert!(forest.max_tree_depth() <= 10);
    }

    #[test]
    fn balanced_weights() {
        let mut y = vec![1usize; 40];
        y.extend(vec![0; 20]);
        assert_eq!(balanced_class_weights(&y, 2), vec![1.5, 0.75]);
        let y3: Vec<usize> = y.iter().map(|c| c + 1).collect();
        assert_eq!(balanced_class_weights(&y3, 3), vec![0.0, 1.5, 0.75]);
    }

    #[test]
    fn rejects_degenerate_input() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(fit_forest(&x, &[1, 1], &ForestConfig::default(), 0), Err(Error::SingleClass)));
        assert!(matches!(fit_forest(&[], &[], &ForestConfig::default(), 0), Err(Error::EmptyData)));
        let forest = fit_forest(&x, &[0, 1], &ForestConfig::default(), 0).unwrap();
        assert!(matches!(forest.predict(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    fn stump(feature: usize, left: Vec<f64>, right: Vec<f64>) -> Tree {
        Tree {
            root: TreeNode::Split {
                feature,
                threshold: 0.5,
                gain: 1.0,
                left: Box::new(TreeNode::Leaf { totals: left }),
                right: Box::new(TreeNode::Leaf { totals: right }),
            },
            oob_rows: vec![],
        }
    }

    fn forest_of(trees: Vec<Tree>, n_features: usize) -> Forest {
        Forest {
            config: ForestConfig::default(),
            seed: 0,
            n_features,
            n_classes: 2,
            class_weights: vec![1.0, 1.0],
            trees,
        }
    }

    #[test]
    fn pure_leaf_is_one_hot() {
        let f = forest_of(vec![Tree { root: TreeNode::Leaf { totals: vec![0.0, 3.0] }, oob_rows: vec![] }], 1);
        assert_eq!(f.predict_proba(&[0.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn tied_votes_go_to_the_lower_class() {
        let f = forest_of(
            vec![
                Tree { root: TreeNode::Leaf { totals: vec![2.0, 0.0] }, oob_rows: vec![] },
                Tree { root: TreeNode::Leaf { totals: vec![0.0, 2.0] }, oob_rows: vec![] },
            ],
            1,
        );
        assert_eq!(f.predict_proba(&[0.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(f.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn importance_of_a_single_split_feature() {
        let f = forest_of(vec![stump(0, vec![1.0, 0.0], vec![0.0, 1.0]); 3], 4);
        assert_eq!(f.feature_importance(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn median_imputation() {
        let rows = vec![vec![Some(1.0), None], vec![None, None], vec![Some(3.0), None], vec![Some(4.0), None]];
        let imp = MedianImputer::fit(&rows);
        assert_eq!(imp.medians, vec![3.0, 0.0]);
        assert_eq!(imp.transform(&rows)[1], vec![3.0, 0.0]);
    }

    fn noisy(seed: u64, n: usize, m: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = rng(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(0..5) as f64).collect()).collect();
        let y = (0..n).map(|i| if i < 2 { i } else { r.random_range(0..3) }).collect();
        (x, y)
    }

    #[test]
    fn determinism_and_importance_invariants() {
        let (x, y) = noisy(3, 60, 6);
        let cfg = ForestConfig { n_trees: 30, ..Default::default() };
        let a = fit_forest(&x, &y, &cfg, 9).unwrap();
        let b = fit_forest(&x, &y, &cfg, 9).unwrap();
        assert_eq!(a, b);
        let imp = a.feature_importance();
        assert!(imp.iter().all(|v| *v >= 0.0));
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // earlier trees do not depend on the tree count
        let c = fit_forest(&x, &y, &ForestConfig { n_trees: 10, ..cfg }, 9).unwrap();
        assert_eq!(c.trees[..], a.trees[..10]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn predict_is_argmax_of_proba(seed in 0u64..1000, probe in proptest::collection::vec(0.0f64..5.0, 4)) {
            let (x, y) = noisy(seed, 30, 4);
            let f = fit_forest(&x, &y, &ForestConfig { n_trees: 8, ..Default::default() }, seed).unwrap();
            let p = f.predict_proba(&probe).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(f.predict(&probe).unwrap(), argmax(&p));
        }
    }
}
