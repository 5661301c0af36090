//! Hidden Markov model with diagonal Gaussian emissions.
//!
//! All probability arithmetic is carried out in log space. Sequences are
//! composite-score vectors of the respondents of one organization, in file
//! order.

mod classify;
mod fit;
mod inference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classify::{
    classify_org, map_states, MaturityClassification, StateLabelMap, TransitionReport,
    transition_report,
};
pub use fit::{baum_welch, fit_with_restarts, initial_params, FitOptions, FitResult};
pub use inference::{decode, log_forward_backward, viterbi, DecodedStates};

/// Tolerance for the stochasticity of `pi` and each row of `A`.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Default per-dimension variance floor.
pub const VARIANCE_FLOOR: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub n_states: usize,
    pub dim: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub transitions: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl HmmParams {
    pub fn new(
        pi: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let params = Self {
            n_states: pi.len(),
            dim: means.first().map_or(0, Vec::len),
            pi,
            transitions,
            means,
            variances,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if n == 0 || self.dim == 0 {
            return bad("model needs at least one state and one dimension".into());
        }
        if self.pi.len() != n || self.transitions.len() != n || self.means.len() != n || self.variances.len() != n {
            return bad("parameter arrays disagree on the number of states".into());
        }
        let stochastic = |row: &[f64]| {
            row.iter().all(|p| p.is_finite() && *p >= 0.0)
                && (row.iter().sum::<f64>() - 1.0).abs() <= STOCHASTIC_TOL
        };
        if !stochastic(&self.pi) {
            return bad("initial distribution must be non-negative and sum to 1".into());
        }
        for (k, row) in self.transitions.iter().enumerate() {
            if row.len() != n || !stochastic(row) {
                return bad(format!("transition row {k} is not a probability vector"));
            }
        }
        for k in 0..n {
            if self.means[k].len() != self.dim || self.variances[k].len() != self.dim {
                return bad(format!("state {k} has the wrong emission dimensionality"));
            }
            if self.means[k].iter().any(|m| !m.is_finite())
                || self.variances[k].iter().any(|v| !(v.is_finite() && *v > 0.0))
            {
                return bad(format!("state {k} has invalid emission parameters"));
            }
        }
        Ok(())
    }

    /// Log density of `x` under state `k`'s diagonal Gaussian.
    pub fn log_emission(&self, k: usize, x: &[f64]) -> f64 {
        self.means[k]
            .iter()
            .zip(&self.variances[k])
            .zip(x)
            .map(|((m, v), xi)| -0.5 * (LN_2PI + v.ln() + (xi - m) * (xi - m) / v))
            .sum()
    }

    /// Reorders states so that new state `i` is old state `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n_states: self.n_states,
            dim: self.dim,
            pi: perm.iter().map(|&p| self.pi[p]).collect(),
            transitions: perm
                .iter()
                .map(|&r| perm.iter().map(|&c| self.transitions[r][c]).collect())
                .collect(),
            means: perm.iter().map(|&p| self.means[p].clone()).collect(),
            variances: perm.iter().map(|&p| self.variances[p].clone()).collect(),
        }
    }

    /// Stationary distribution by power iteration.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.n_states;
        let mut p = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for (i, pi) in p.iter().enumerate() {
                for (j, a) in self.transitions[i].iter().enumerate() {
                    next[j] += pi * a;
                }
            }
            let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            p = next;
            if delta < 1e-15 {
                break;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSequence {
    pub org_id: String,
    pub obs: Vec<Vec<f64>>,
}

impl ObservationSequence {
    pub fn new(org_id: impl Into<String>, obs: Vec<Vec<f64>>) -> Self {
        Self {
            org_id: org_id.into(),
            obs,
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if self.obs.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "sequence {} is empty",
                self.org_id
            )));
        }
        for x in &self.obs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "observation in sequence {}",
                    self.org_id
                )));
            }
        }
        Ok(())
    }
}

/// Serialized fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    #[serde(flatten)]
    pub params: HmmParams,
    pub seed: u64,
    pub label_map: StateLabelMap,
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.into_iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
