use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        /// Weighted impurity decrease achieved by this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Sample-weighted class totals.
        totals: Vec<f64>,
    },
}

impl TreeNode {
    pub fn leaf<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
                TreeNode::Leaf { totals } => return totals,
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub(crate) fn visit_splits(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }
}

/// Normalizes leaf totals into class probabilities.
pub fn leaf_distribution(totals: &[f64]) -> Vec<f64> {
    let sum: f64 = totals.iter().sum();
    totals.iter().map(|t| t / sum).collect()
}

pub fn gini(totals: &[f64]) -> f64 {
    let sum: f64 = totals.iter().sum();
    if sum <= 0.0 {
        return 0.0;
    }
    1.0 - totals.iter().map(|t| (t / sum) * (t / sum)).sum::<f64>()
}

pub(crate) struct TreeBuilder<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [usize],
    pub n_classes: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    child_impurity: f64,
}

impl TreeBuilder<'_> {
    /// `rows` pairs a row index with its bootstrap multiplicity and sample weight.
    pub fn build(&self, rows: &[(usize, usize, f64)], rng: &mut Rng) -> TreeNode {
        self.grow(rows.to_vec(), 0, rng)
    }

    fn totals(&self, rows: &[(usize, usize, f64)]) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_classes];
        for &(r, _, w) in rows {
            totals[self.y[r]] += w;
        }
        totals
    }

    fn grow(&self, rows: Vec<(usize, usize, f64)>, depth: usize, rng: &mut Rng) -> TreeNode {
        let totals = self.totals(&rows);
        let draws: usize = rows.iter().map(|r| r.1).sum();
        let impurity = gini(&totals);
        if depth >= self.max_depth || draws < self.min_samples_split || impurity <= 0.0 {
            return TreeNode::Leaf { totals };
        }
        let Some(best) = self.best_split(&rows, rng) else {
            return TreeNode::Leaf { totals };
        };
        let (left, right): (Vec<_>, Vec<_>) = rows
            .into_iter()
            .partition(|&(r, _, _)| self.x[r][best.feature] <= best.threshold);
        let weight: f64 = totals.iter().sum();
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain: (weight * impurity - best.child_impurity).max(0.0),
            left: Box::new(self.grow(left, depth + 1, rng)),
            right: Box::new(self.grow(right, depth + 1, rng)),
        }
    }

    fn best_split(&self, rows: &[(usize, usize, f64)], rng: &mut Rng) -> Option<Candidate> {
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(rng);
        // visit features in random order until `max_features` non-constant ones are found
        let mut chosen = Vec::with_capacity(self.max_features);
        for f in order {
            if chosen.len() == self.max_features {
                break;
            }
            let first = self.x[rows[0].0][f];
            if rows.iter().any(|&(r, _, _)| self.x[r][f] != first) {
                chosen.push(f);
            }
        }
        chosen.sort_unstable();

        let mut best: Option<Candidate> = None;
        let mut sorted = rows.to_vec();
        for &f in &chosen {
            sorted.sort_by(|a, b| self.x[a.0][f].total_cmp(&self.x[b.0][f]).then(a.0.cmp(&b.0)));
            let mut left = vec![0.0; self.n_classes];
            let mut right = self.totals(&sorted);
            let mut left_draws = 0usize;
            let total_draws: usize = sorted.iter().map(|r| r.1).sum();
            for i in 0..sorted.len() - 1 {
                let (r, count, w) = sorted[i];
                left[self.y[r]] += w;
                right[self.y[r]] -= w;
                left_draws += count;
                let here = self.x[r][f];
                let next = self.x[sorted[i + 1].0][f];
                if here == next {
                    continue;
                }
                if left_draws < self.min_samples_leaf || total_draws - left_draws < self.min_samples_leaf {
                    continue;
                }
                let wl: f64 = left.iter().sum();
                let wr: f64 = right.iter().sum();
                let child_impurity = wl * gini(&left) + wr * gini(&right);
                if best.as_ref().is_none_or(|b| child_impurity < b.child_impurity) {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        child_impurity,
                    });
                }
            }
        }
        best
    }
}
