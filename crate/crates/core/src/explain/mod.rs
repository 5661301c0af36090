//! Attributions for forest predictions: exact interventional Shapley values,
//! a brute-force coalition oracle, global importance summaries and local
//! linear surrogates.

mod lime;

pub use lime::{lime_explain, LimeExplanation, LimeOptions, TrainingStats};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, TreeNode};
use crate::rng::rng;

/// Largest feature set the brute-force oracle accepts.
pub const MAX_BRUTE_FORCE_FEATURES: usize = 15;

/// Default cap on background rows.
pub const DEFAULT_BACKGROUND_ROWS: usize = 100;

/// Shapley attributions for one instance, for every class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// Mean forest output over the background, per class.
    pub base_value: Vec<f64>,
    /// `values[class][feature]`.
    pub values: Vec<Vec<f64>>,
    /// Forest output at the instance, per class.
    pub prediction: Vec<f64>,
}

impl ShapExplanation {
    pub fn class(&self, class: usize) -> &[f64] {
        &self.values[class]
    }

    /// `base + Σ values − f(x)` for one class.
    pub fn efficiency_gap(&self, class: usize) -> f64 {
        self.base_value[class] + self.values[class].iter().sum::<f64>() - self.prediction[class]
    }
}

/// Seeded subsample of at most `cap` rows, kept in their original order.
pub fn sample_background(rows: &[Vec<f64>], cap: usize, seed: u64) -> Vec<Vec<f64>> {
    if rows.len() <= cap {
        return rows.to_vec();
    }
    let mut idx = sample(&mut rng(seed), rows.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| rows[i].clone()).collect()
}

fn check_inputs(forest: &Forest, x: &[f64], background: &[Vec<f64>]) -> Result<()> {
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    for row in std::iter::once(x).chain(background.iter().map(Vec::as_slice)) {
        if row.len() != forest.n_features {
            return Err(Error::DimensionMismatch {
                expected: forest.n_features,
                actual: row.len(),
            });
        }
    }
    Ok(())
}

/// Exact interventional Shapley values of the forest's class probabilities.
///
/// For a single tree and background row `b`, the hybrid point reaches a leaf
/// only if every split where `x` and `b` disagree is resolved the right way:
/// some features must come from `x` (set A) and others from `b` (set B). The
/// leaf's value enters the game as `v · 1[A ⊆ S, B ∩ S = ∅]`, whose Shapley
/// values have a closed form, so summing over reachable leaves is exact and
/// only touches the features the tree splits on.
pub fn shap_values(forest: &Forest, x: &[f64], background: &[Vec<f64>]) -> Result<ShapExplanation> {
    check_inputs(forest, x, background)?;
    let k = forest.n_classes;
    let m = forest.n_features;
    let partials: Vec<(Vec<f64>, Vec<Vec<f64>>)> = background
        .par_iter()
        .map(|b| {
            let mut base = vec![0.0; k];
            let mut phi = vec![vec![0.0; m]; k];
            for tree in &forest.trees {
                let mut walk = Walk {
                    x,
                    b,
                    from_x: Vec::new(),
                    from_b: Vec::new(),
                    base: &mut base,
                    phi: &mut phi,
                };
                walk.visit(&tree.root);
            }
            (base, phi)
        })
        .collect();

    let scale = 1.0 / (forest.trees.len() as f64 * background.len() as f64);
    let mut base_value = vec![0.0; k];
    let mut values = vec![vec![0.0; m]; k];
    for (base, phi) in &partials {
        for c in 0..k {
            base_value[c] += base[c];
            for j in 0..m {
                values[c][j] += phi[c][j];
            }
        }
    }
    base_value.iter_mut().for_each(|v| *v *= scale);
    values.iter_mut().flatten().for_each(|v| *v *= scale);
    Ok(ShapExplanation {
        base_value,
        values,
        prediction: forest.predict_proba(x)?,
    })
}

struct Walk<'a> {
    x: &'a [f64],
    b: &'a [f64],
    from_x: Vec<usize>,
    from_b: Vec<usize>,
    base: &'a mut [f64],
    phi: &'a mut [Vec<f64>],
}

impl Walk<'_> {
    fn visit(&mut self, node: &TreeNode) {
        match node {
            TreeNode::Leaf { totals } => self.leaf(totals),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let f = *feature;
                let x_left = self.x[f] <= *threshold;
                let b_left = self.b[f] <= *threshold;
                let (x_child, b_child) = if x_left { (left, right) } else { (right, left) };
                if x_left == b_left {
                    self.visit(x_child);
                    return;
                }
                if !self.from_b.contains(&f) {
                    let pushed = !self.from_x.contains(&f);
                    if pushed {
                        self.from_x.push(f);
                    }
                    self.visit(x_child);
                    if pushed {
                        self.from_x.pop();
                    }
                }
                if !self.from_x.contains(&f) {
                    let pushed = !self.from_b.contains(&f);
                    if pushed {
                        self.from_b.push(f);
                    }
                    self.visit(b_child);
                    if pushed {
                        self.from_b.pop();
                    }
                }
            }
        }
    }

    fn leaf(&mut self, totals: &[f64]) {
        let sum: f64 = totals.iter().sum();
        let a = self.from_x.len();
        let nb = self.from_b.len();
        // The empty coalition reaches this leaf only when nothing must come from x.
        if a == 0 {
            for (base, t) in self.base.iter_mut().zip(totals) {
                *base += t / sum;
            }
        }
        if a + nb == 0 {
            return;
        }
        let w_x = if a > 0 { 1.0 / (a as f64 * binomial(a + nb, a)) } else { 0.0 };
        let w_b = if nb > 0 { 1.0 / (nb as f64 * binomial(a + nb, nb)) } else { 0.0 };
        for (c, t) in totals.iter().enumerate() {
            let v = t / sum;
            for &f in &self.from_x {
                self.phi[c][f] += v * w_x;
            }
            for &f in &self.from_b {
                self.phi[c][f] -= v * w_b;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact Shapley values by enumerating every coalition of `features`.
/// Features outside the set are held at their `x` values.
pub fn brute_force_shapley(
    model: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    background: &[Vec<f64>],
    features: &[usize],
) -> Result<Vec<f64>> {
    let m = features.len();
    if m > MAX_BRUTE_FORCE_FEATURES {
        return Err(Error::TooManyFeatures {
            max: MAX_BRUTE_FORCE_FEATURES,
            actual: m,
        });
    }
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    if let Some(bad) = background.iter().find(|b| b.len() != x.len()) {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: bad.len(),
        });
    }
    let value: Vec<f64> = (0..1usize << m)
        .into_par_iter()
        .map(|mask| {
            let mut z = x.to_vec();
            let mut total = 0.0;
            for b in background {
                for (i, &f) in features.iter().enumerate() {
                    z[f] = if mask >> i & 1 == 1 { x[f] } else { b[f] };
                }
                total += model(&z);
            }
            total / background.len() as f64
        })
        .collect();
    // weight[s] = s! (m - s - 1)! / m!
    let weight: Vec<f64> = (0..m).map(|s| 1.0 / (m as f64 * binomial(m - 1, s))).collect();
    Ok((0..m)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << m)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weight[mask.count_ones() as usize] * (value[mask | bit] - value[mask]))
                .sum()
        })
        .collect())
}

/// Mean absolute SHAP value per feature, with features ranked by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub mean_abs: Vec<f64>,
    /// Feature indices by descending importance; ties keep index order.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    pub fn from_values(values: &[Vec<f64>]) -> Self {
        let m = values.first().map_or(0, Vec::len);
        let n = values.len().max(1) as f64;
        let mean_abs: Vec<f64> = (0..m)
            .map(|j| values.iter().map(|row| row[j].abs()).sum::<f64>() / n)
            .collect();
        let mut ranking: Vec<usize> = (0..m).collect();
        ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
        GlobalImportance { mean_abs, ranking }
    }

    pub fn top(&self, n: usize) -> &[usize] {
        &self.ranking[..n.min(self.ranking.len())]
    }
}

/// SHAP values of one class for every row, computed in parallel.
pub fn shap_matrix(forest: &Forest, rows: &[Vec<f64>], background: &[Vec<f64>], class: usize) -> Result<Vec<Vec<f64>>> {
    if class >= forest.n_classes {
        return Err(Error::InvalidArgument(format!(
            "class {class} is outside the forest's {} classes",
            forest.n_classes
        )));
    }
    rows.par_iter()
        .map(|x| shap_values(forest, x, background).map(|e| e.values[class].clone()))
        .collect()
}

pub fn global_shap_importance(
    forest: &Forest,
    rows: &[Vec<f64>],
    background: &[Vec<f64>],
    class: usize,
) -> Result<GlobalImportance> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(GlobalImportance::from_values(&shap_matrix(forest, rows, background, class)?))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between two importance vectors.
pub fn importance_correlation(shap: &[f64], rf: &[f64]) -> Result<f64> {
    if shap.len() != rf.len() {
        return Err(Error::LengthMismatch {
            left: shap.len(),
            right: rf.len(),
        });
    }
    if shap.len() < 3 {
        return Err(Error::TooFewRows(format!("{} features, need at least 3", shap.len())));
    }
    pearson(shap, rf).ok_or_else(|| Error::ZeroVariance("importance vector is constant".into()))
}

/// Pairwise Pearson correlations between the SHAP values of selected features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub features: Vec<usize>,
    /// `None` where either column has zero variance.
    pub entries: Vec<Vec<Option<f64>>>,
}

pub fn shap_correlation_matrix(values: &[Vec<f64>], features: &[usize]) -> Result<CorrelationMatrix> {
    if values.len() < 3 {
        return Err(Error::TooFewRows(format!("{} instances, need at least 3", values.len())));
    }
    let columns: Vec<Vec<f64>> = features
        .iter()
        .map(|&f| values.iter().map(|row| row[f]).collect())
        .collect();
    let n = features.len();
    let mut entries = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let r = pearson(&columns[i], &columns[j]).map(|r| if i == j { 1.0 } else { r });
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        features: features.to_vec(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{fit_forest, ForestConfig, Tree};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn leaf(p: f64) -> Box<TreeNode> {
        Box::new(TreeNode::Leaf {
            totals: vec![1.0 - p, p],
        })
    }

    fn forest_of(roots: Vec<TreeNode>, n_features: usize) -> Forest {
        Forest {
            config: ForestConfig::default(),
            seed: 0,
            n_features,
            n_classes: 2,
            class_weights: vec![1.0, 1.0],
            trees: roots
                .into_iter()
                .map(|root| Tree { root, oob_rows: vec![] })
                .collect(),
        }
    }

    fn stump(feature: usize, threshold: f64, lo: f64, hi: f64) -> TreeNode {
        TreeNode::Split {
            feature,
            threshold,
            gain: 1.0,
            left: leaf(lo),
            right: leaf(hi),
        }
    }

    fn random_forest_case(seed: u64, m: usize) -> (Forest, Vec<f64>, Vec<Vec<f64>>) {
        let mut r = rng(seed);
        let n = 40;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| r.random_range(0..5) as f64).collect())
            .collect();
        let y: Vec<usize> = x.iter().map(|row| usize::from(row[0] + row[m - 1] > 4.0 || r.random_bool(0.2))).collect();
        let y = if y.iter().all(|&v| v == y[0]) { (0..n).map(|i| i % 2).collect() } else { y };
        let cfg = ForestConfig {
            n_trees: 5,
            max_depth: 4,
            ..Default::default()
        };
        let forest = fit_forest(&x, &y, &cfg, seed).unwrap();
        let point: Vec<f64> = (0..m).map(|_| r.random_range(0..5) as f64).collect();
        (forest, point, x[..6].to_vec())
    }

    #[test]
    fn constant_model_gives_zero_values() {
        let f = forest_of(vec![*leaf(0.3)], 3);
        let e = shap_values(&f, &[1.0, 2.0, 3.0], &[vec![0.0; 3], vec![5.0; 3]]).unwrap();
        assert_eq!(e.values[1], vec![0.0; 3]);
        assert_abs_diff_eq!(e.base_value[1], 0.3);
    }

    #[test]
    fn stump_attribution_is_the_step() {
        let f = forest_of(vec![stump(1, 0.5, 0.2, 0.9)], 3);
        let e = shap_values(&f, &[0.0, 1.0, 0.0], &[vec![0.0; 3], vec![1.0, 0.0, 7.0]]).unwrap();
        assert_abs_diff_eq!(e.values[1][1], 0.7, epsilon = 1e-12);
        assert_eq!(e.values[1][0], 0.0);
        assert_eq!(e.values[1][2], 0.0);
        assert_abs_diff_eq!(e.base_value[1], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn repeated_feature_on_a_path() {
        // x0 <= 2 then x0 <= 1: both splits on the same feature.
        let root = TreeNode::Split {
            feature: 0,
            threshold: 2.0,
            gain: 1.0,
            left: Box::new(stump(0, 1.0, 0.1, 0.4)),
            right: Box::new(stump(1, 0.0, 0.6, 1.0)),
        };
        let f = forest_of(vec![root], 2);
        let model = |z: &[f64]| f.proba_unchecked(z)[1];
        let bg = vec![vec![0.0, 0.0], vec![1.5, 1.0], vec![3.0, -1.0]];
        for x in [[0.5, 1.0], [1.5, -2.0], [4.0, 2.0]] {
            let e = shap_values(&f, &x, &bg).unwrap();
            let oracle = brute_force_shapley(&model, &x, &bg, &[0, 1]).unwrap();
            for j in 0..2 {
                assert_abs_diff_eq!(e.values[1][j], oracle[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn brute_force_axioms() {
        let single = |z: &[f64]| z[0] * z[0];
        let v = brute_force_shapley(&single, &[3.0], &[vec![1.0], vec![2.0]], &[0]).unwrap();
        assert_abs_diff_eq!(v[0], 9.0 - 2.5, epsilon = 1e-12);

        let sym = |z: &[f64]| z[0].sin() + z[1].sin();
        let v = brute_force_shapley(&sym, &[1.0, 1.0], &[vec![0.0, 0.0], vec![2.0, 2.0]], &[0, 1]).unwrap();
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-12);

        let interact = |z: &[f64]| z[0] * z[1] + z[2];
        let bg = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, -1.0]];
        let x = [2.0, 2.0, 5.0];
        let v = brute_force_shapley(&interact, &x, &bg, &[0, 1, 2]).unwrap();
        let base = bg.iter().map(|b| interact(b)).sum::<f64>() / 2.0;
        assert_abs_diff_eq!(v.iter().sum::<f64>(), interact(&x) - base, epsilon = 1e-9);

        let many: Vec<usize> = (0..16).collect();
        assert!(matches!(
            brute_force_shapley(&single, &[0.0; 16], &[vec![0.0; 16]], &many),
            Err(Error::TooManyFeatures { max: 15, actual: 16 })
        ));
    }

    #[test]
    fn empty_background_is_rejected() {
        let f = forest_of(vec![*leaf(0.5)], 1);
        assert!(matches!(shap_values(&f, &[0.0], &[]), Err(Error::EmptyBackground)));
        assert!(shap_values(&f, &[0.0, 1.0], &[vec![0.0]]).is_err());
    }

    #[test]
    fn correlation_basics() {
        assert_abs_diff_eq!(importance_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(importance_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            importance_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn correlation_matrix_flags_constant_columns() {
        let values = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![4.0, 8.0, 0.0]];
        let m = shap_correlation_matrix(&values, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(m.entries[0][1].unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(m.entries[0][0], Some(1.0));
        assert_eq!(m.entries[2][0], None);
        assert_eq!(m.entries[2][2], None);
    }

    #[test]
    fn global_importance_ranks_the_stump_feature() {
        let f = forest_of(vec![stump(2, 0.5, 0.0, 1.0)], 4);
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0, (i % 2) as f64, 0.0]).collect();
        let g = global_shap_importance(&f, &rows, &rows, 1).unwrap();
        assert_eq!(g.ranking[0], 2);
        assert!(g.mean_abs[2] > 0.0);
        assert!(g.mean_abs.iter().enumerate().all(|(j, v)| j == 2 || *v == 0.0));
    }

    #[test]
    fn background_sampling_is_capped_and_ordered() {
        let rows: Vec<Vec<f64>> = (0..250).map(|i| vec![i as f64]).collect();
        let bg = sample_background(&rows, 100, 9);
        assert_eq!(bg.len(), 100);
        assert!(bg.windows(2).all(|w| w[0][0] < w[1][0]));
        assert_eq!(bg, sample_background(&rows, 100, 9));
        assert_eq!(sample_background(&rows[..10], 100, 9).len(), 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matches_brute_force(seed in any::<u64>(), m in 2usize..7) {
            let (forest, x, bg) = random_forest_case(seed, m);
            let e = shap_values(&forest, &x, &bg).unwrap();
            let features: Vec<usize> = (0..m).collect();
            for class in 0..2 {
                let model = |z: &[f64]| forest.proba_unchecked(z)[class];
                let oracle = brute_force_shapley(&model, &x, &bg, &features).unwrap();
                for j in 0..m {
                    prop_assert!((e.values[class][j] - oracle[j]).abs() < 1e-9);
                }
                prop_assert!(e.efficiency_gap(class).abs() < 1e-9);
            }
        }

        #[test]
        fn constant_column_is_a_dummy(seed in any::<u64>()) {
            let (forest, x, bg) = random_forest_case(seed, 4);
            let e = shap_values(&forest, &x, &bg).unwrap();
            // The same trees see an extra trailing column they never split on.
            let mut wide = forest.clone();
            wide.n_features = 5;
            let mut xw = x.clone();
            xw.push(1.0);
            let bgw: Vec<Vec<f64>> = bg.iter().map(|b| { let mut b = b.clone(); b.push(1.0); b }).collect();
            let ew = shap_values(&wide, &xw, &bgw).unwrap();
            for j in 0..4 {
                prop_assert!((e.values[1][j] - ew.values[1][j]).abs() < 1e-9);
            }
            prop_assert_eq!(ew.values[1][4], 0.0);
        }
    }
}
