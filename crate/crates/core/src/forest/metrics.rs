use serde::{Deserialize, Serialize};

use super::CvScores;
use crate::error::{Error, Result};
use crate::preprocess::MaturityLabel;

/// Rows are actual classes, columns predicted, both in ascending maturity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<MaturityLabel>,
    pub counts: Vec<Vec<usize>>,
    /// Labels that appear in neither the actual nor the predicted values.
    pub dropped: Vec<MaturityLabel>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: MaturityLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1_score: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1_score: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: AveragedMetrics,
    pub weighted_avg: AveragedMetrics,
    pub kappa: f64,
    pub confusion_matrix: ConfusionMatrix,
    /// Metrics that were set to 0 because their denominator vanished.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
    /// Present when the report also carries cross-validation scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvScores>,
}

fn ratio(num: usize, den: usize, what: String, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(what);
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion matrix, per-class precision/recall/F1, accuracy, macro and
/// support-weighted averages and Cohen's kappa.
pub fn evaluate(y_true: &[MaturityLabel], y_pred: &[MaturityLabel]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels: Vec<MaturityLabel> = MaturityLabel::ALL
        .into_iter()
        .filter(|l| y_true.contains(l) || y_pred.contains(l))
        .collect();
    let dropped = MaturityLabel::ALL
        .into_iter()
        .filter(|l| !labels.contains(l))
        .collect();
    let pos = |l: MaturityLabel| labels.iter().position(|x| *x == l).expect("label present");
    let k = labels.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[pos(*t)][pos(*p)] += 1;
    }

    let n = y_true.len();
    let mut undefined = Vec::new();
    let mut per_class = Vec::with_capacity(k);
    for (i, &label) in labels.iter().enumerate() {
        let tp = counts[i][i];
        let predicted: usize = (0..k).map(|r| counts[r][i]).sum();
        let support: usize = counts[i].iter().sum();
        let precision = ratio(tp, predicted, format!("{label} precision"), &mut undefined);
        let recall = ratio(tp, support, format!("{label} recall"), &mut undefined);
        let f1_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            label,
            precision,
            recall,
            f1_score,
            support,
        });
    }

    let correct: usize = (0..k).map(|i| counts[i][i]).sum();
    let accuracy = correct as f64 / n as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    let weighted =
        |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / n as f64;
    let macro_avg = AveragedMetrics {
        precision: mean(|c| c.precision),
        recall: mean(|c| c.recall),
        f1_score: mean(|c| c.f1_score),
        support: n,
    };
    let weighted_avg = AveragedMetrics {
        precision: weighted(|c| c.precision),
        recall: weighted(|c| c.recall),
        f1_score: weighted(|c| c.f1_score),
        support: n,
    };

    let expected: f64 = (0..k)
        .map(|i| {
            let actual: usize = counts[i].iter().sum();
            let predicted: usize = (0..k).map(|r| counts[r][i]).sum();
            actual as f64 * predicted as f64
        })
        .sum::<f64>()
        / (n as f64 * n as f64);
    let kappa = if (1.0 - expected).abs() < f64::EPSILON {
        undefined.push("kappa".into());
        0.0
    } else {
        (accuracy - expected) / (1.0 - expected)
    };

    Ok(MetricsReport {
        per_class,
        accuracy,
        macro_avg,
        weighted_avg,
        kappa,
        confusion_matrix: ConfusionMatrix {
            labels,
            counts,
            dropped,
        },
        undefined,
        cv: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use MaturityLabel::*;

    /// Four Developing and eight Advanced cases with one Developing case
    /// predicted Advanced.
    fn one_miss() -> (Vec<MaturityLabel>, Vec<MaturityLabel>) {
        let mut t = vec![Developing; 4];
        t.extend(vec![Advanced; 8]);
        let mut p = t.clone();
        p[3] = Advanced;
        (t, p)
    }

    #[test]
    fn classification_report_for_one_miss() {
        let (t, p) = one_miss();
        let r = evaluate(&t, &p).unwrap();
        assert_eq!(r.confusion_matrix.counts, vec![vec![3, 1], vec![0, 8]]);
        assert_eq!(r.confusion_matrix.dropped, vec![Basic]);
        assert_abs_diff_eq!(r.accuracy, 11.0 / 12.0);
        let dev = &r.per_class[0];
        assert_abs_diff_eq!(dev.precision, 1.0);
        assert_abs_diff_eq!(dev.recall, 0.75);
        assert_abs_diff_eq!(dev.f1_score, 6.0 / 7.0, epsilon = 1e-12);
        let adv = &r.per_class[1];
        assert_abs_diff_eq!(adv.precision, 8.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(adv.recall, 1.0);
        assert_abs_diff_eq!(adv.f1_score, 16.0 / 17.0, epsilon = 1e-12);
        // kappa = (11/12 - 7/12) / (1 - 7/12) = 0.8
        assert_abs_diff_eq!(r.kappa, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn perfect_agreement() {
        let y = vec![Basic, Developing, Advanced, Advanced];
        let r = evaluate(&y, &y).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_abs_diff_eq!(r.kappa, 1.0);
    }

    #[test]
    fn undefined_precision_is_flagged() {
        let r = evaluate(&[Basic, Advanced], &[Advanced, Advanced]).unwrap();
        assert_eq!(r.per_class[0].precision, 0.0);
        assert!(r.undefined.iter().any(|u| u == "Basic precision"));
        assert!(evaluate(&[Basic], &[]).is_err());
    }

    #[test]
    fn single_class_kappa_is_flagged() {
        let r = evaluate(&[Advanced; 3], &[Advanced; 3]).unwrap();
        assert_eq!(r.kappa, 0.0);
        assert!(r.undefined.contains(&"kappa".to_string()));
    }

    proptest! {
        #[test]
        fn relabeling_permutes_metrics(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..40),
            perm_idx in 0usize..6,
        ) {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let perm = perms[perm_idx];
            let t: Vec<_> = pairs.iter().map(|p| MaturityLabel::ALL[p.0]).collect();
            let p: Vec<_> = pairs.iter().map(|p| MaturityLabel::ALL[p.1]).collect();
            let tp: Vec<_> = pairs.iter().map(|p| MaturityLabel::ALL[perm[p.0]]).collect();
            let pp: Vec<_> = pairs.iter().map(|p| MaturityLabel::ALL[perm[p.1]]).collect();
            let a = evaluate(&t, &p).unwrap();
            let b = evaluate(&tp, &pp).unwrap();
            prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
            prop_assert!((a.kappa - b.kappa).abs() < 1e-12);
            for c in &a.per_class {
                let mapped = MaturityLabel::ALL[perm[c.label.index()]];
                let d = b.per_class.iter().find(|d| d.label == mapped).unwrap();
                prop_assert!((c.precision - d.precision).abs() < 1e-12);
                prop_assert!((c.recall - d.recall).abs() < 1e-12);
                prop_assert_eq!(c.support, d.support);
            }
            prop_assert_eq!(a.confusion_matrix.total(), pairs.len());
            let perfect = t == p;
            let classes = a.confusion_matrix.labels.len();
            prop_assert_eq!((a.kappa - 1.0).abs() < 1e-12, perfect && classes >= 2);
        }
    }
}
