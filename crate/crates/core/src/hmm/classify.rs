use serde::{Deserialize, Serialize};

use super::{DecodedStates, HmmParams};
use crate::preprocess::{score_to_label, MaturityLabel};

/// Maturity label of each hidden state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateLabelMap(pub Vec<MaturityLabel>);

impl StateLabelMap {
    pub fn label(&self, state: usize) -> MaturityLabel {
        self.0[state]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Labels states from a scalar score each.
    ///
    /// Scores are banded with the maturity thresholds. When states share a
    /// band they are ordered by score (then index) and receive the distinct
    /// ascending labels closest to their bands, preferring the lower
    /// labelling on ties. With more states than labels, bands are used as is.
    pub fn from_state_scores(scores: &[f64]) -> Self {
        let n = scores.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let bands: Vec<usize> = order.iter().map(|&s| score_to_label(Some(scores[s])).index()).collect();

        let n_labels = MaturityLabel::ALL.len();
        let assigned: Vec<usize> = if n <= n_labels {
            let mut best: Option<(usize, Vec<usize>)> = None;
            // strictly increasing label sequences, in lexicographic order
            let mut combo: Vec<usize> = (0..n).collect();
            loop {
                let cost: usize = combo.iter().zip(&bands).map(|(l, b)| l.abs_diff(*b)).sum();
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, combo.clone()));
                }
                let Some(i) = (0..n).rev().find(|&i| combo[i] < n_labels - n + i) else {
                    break;
                };
                combo[i] += 1;
                for j in i + 1..n {
                    combo[j] = combo[j - 1] + 1;
                }
            }
            best.map(|(_, c)| c).unwrap_or_default()
        } else {
            bands
        };

        let mut labels = vec![MaturityLabel::Basic; n];
        for (rank, &state) in order.iter().enumerate() {
            labels[state] = MaturityLabel::ALL[assigned[rank]];
        }
        Self(labels)
    }
}

/// Labels each state from its emission mean averaged across dimensions,
/// weighted by `dim_weights` (equal weights when `None`).
pub fn map_states(params: &HmmParams, dim_weights: Option<&[f64]>) -> StateLabelMap {
    let weights: Vec<f64> = match dim_weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; params.dim],
    };
    let total: f64 = weights.iter().sum();
    let scores: Vec<f64> = params
        .means
        .iter()
        .map(|m| m.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total)
        .collect();
    StateLabelMap::from_state_scores(&scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaturityClassification {
    pub org_id: String,
    pub dominant: MaturityLabel,
    /// Mean over steps of the largest posterior probability.
    pub confidence: f64,
    pub state_counts: Vec<usize>,
    /// Counts per label in Basic, Developing, Advanced order.
    pub label_counts: [usize; 3],
}

/// Dominant label by decoded-state counts (ties go to the lower maturity
/// label) and confidence from the posteriors.
pub fn classify_org(
    org_id: &str,
    decoded: &DecodedStates,
    map: &StateLabelMap,
) -> MaturityClassification {
    let mut state_counts = vec![0usize; map.len()];
    for &s in &decoded.states {
        state_counts[s] += 1;
    }
    let mut label_counts = [0usize; 3];
    for (s, c) in state_counts.iter().enumerate() {
        label_counts[map.label(s).index()] += c;
    }
    let mut dominant = 0;
    for (i, c) in label_counts.iter().enumerate() {
        if *c > label_counts[dominant] {
            dominant = i;
        }
    }
    let t_len = decoded.posteriors.len().max(1) as f64;
    let confidence = decoded
        .posteriors
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / t_len;
    MaturityClassification {
        org_id: org_id.to_string(),
        dominant: MaturityLabel::ALL[dominant],
        confidence,
        state_counts,
        label_counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    /// Row/column order, ascending maturity.
    pub labels: Vec<MaturityLabel>,
    pub states: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
    /// Self-transition probability of each row.
    pub persistence: Vec<f64>,
}

pub fn transition_report(params: &HmmParams, map: &StateLabelMap) -> TransitionReport {
    let mut states: Vec<usize> = (0..params.n_states).collect();
    states.sort_by_key(|&s| (map.label(s), s));
    let matrix: Vec<Vec<f64>> = states
        .iter()
        .map(|&r| states.iter().map(|&c| params.transitions[r][c]).collect())
        .collect();
    TransitionReport {
        labels: states.iter().map(|&s| map.label(s)).collect(),
        persistence: (0..states.len()).map(|i| matrix[i][i]).collect(),
        states,
        matrix,
    }
}
