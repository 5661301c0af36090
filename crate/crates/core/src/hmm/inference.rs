use serde::{Deserialize, Serialize};

use super::{log_sum_exp, HmmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedStates {
    pub states: Vec<usize>,
    pub posteriors: Vec<Vec<f64>>,
    pub log_likelihood: f64,
}

/// Forward and backward log-messages for one sequence.
pub(crate) struct Messages {
    pub log_b: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub log_likelihood: f64,
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn log_transitions(params: &HmmParams) -> Vec<Vec<f64>> {
    params
        .transitions
        .iter()
        .map(|row| row.iter().map(|&p| ln(p)).collect())
        .collect()
}

fn emissions(params: &HmmParams, obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if obs.is_empty() {
        return Err(Error::InvalidArgument("empty observation sequence".into()));
    }
    obs.iter()
        .map(|x| {
            if x.len() != params.dim {
                return Err(Error::DimensionMismatch {
                    expected: params.dim,
                    actual: x.len(),
                });
            }
            Ok((0..params.n_states).map(|k| params.log_emission(k, x)).collect())
        })
        .collect()
}

pub(crate) fn messages(params: &HmmParams, obs: &[Vec<f64>]) -> Result<Messages> {
    let n = params.n_states;
    let t_len = obs.len();
    let log_b = emissions(params, obs)?;
    let log_a = log_transitions(params);

    let mut alpha = vec![vec![0.0; n]; t_len];
    for k in 0..n {
        alpha[0][k] = ln(params.pi[k]) + log_b[0][k];
    }
    for t in 1..t_len {
        for j in 0..n {
            let incoming = log_sum_exp((0..n).map(|i| alpha[t - 1][i] + log_a[i][j]));
            alpha[t][j] = incoming + log_b[t][j];
        }
    }
    for (t, row) in alpha.iter().enumerate() {
        let total = log_sum_exp(row.iter().copied());
        if !total.is_finite() {
            return Err(if total.is_nan() {
                Error::NonFinite(format!("forward message at step {t}"))
            } else {
                Error::NumericUnderflow { step: t }
            });
        }
    }
    let log_likelihood = log_sum_exp(alpha[t_len - 1].iter().copied());

    let mut beta = vec![vec![0.0; n]; t_len];
    for t in (0..t_len - 1).rev() {
        for i in 0..n {
            beta[t][i] = log_sum_exp((0..n).map(|j| log_a[i][j] + log_b[t + 1][j] + beta[t + 1][j]));
        }
    }
    Ok(Messages {
        log_b,
        alpha,
        beta,
        log_likelihood,
    })
}

pub(crate) fn posteriors(m: &Messages) -> Vec<Vec<f64>> {
    m.alpha
        .iter()
        .zip(&m.beta)
        .map(|(a, b)| {
            let mut row: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x + y - m.log_likelihood).exp())
                .collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        })
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

/// Smoothed posteriors and sequence log-likelihood. `states` holds the
/// per-step posterior argmax (ties toward the lower state).
pub fn log_forward_backward(params: &HmmParams, obs: &[Vec<f64>]) -> Result<DecodedStates> {
    let m = messages(params, obs)?;
    let posteriors = posteriors(&m);
    Ok(DecodedStates {
        states: posteriors.iter().map(|row| argmax(row)).collect(),
        posteriors,
        log_likelihood: m.log_likelihood,
    })
}

/// Most probable state path and its joint log-probability. Ties break
/// toward the lower state index at every step.
pub fn viterbi(params: &HmmParams, obs: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = params.n_states;
    let log_b = emissions(params, obs)?;
    let log_a = log_transitions(params);
    let t_len = obs.len();

    let mut delta: Vec<f64> = (0..n).map(|k| ln(params.pi[k]) + log_b[0][k]).collect();
    let mut back = vec![vec![0usize; n]; t_len];
    for t in 1..t_len {
        let mut next = vec![0.0; n];
        for j in 0..n {
            let mut best = 0;
            let mut best_score = delta[0] + log_a[0][j];
            for i in 1..n {
                let score = delta[i] + log_a[i][j];
                if score > best_score {
                    best = i;
                    best_score = score;
                }
            }
            back[t][j] = best;
            next[j] = best_score + log_b[t][j];
        }
        delta = next;
        if delta.iter().all(|d| *d == f64::NEG_INFINITY) {
            return Err(Error::NumericUnderflow { step: t });
        }
    }
    let last = argmax(&delta);
    let log_prob = delta[last];
    if !log_prob.is_finite() {
        return Err(Error::NumericUnderflow { step: t_len - 1 });
    }
    let mut path = vec![last; t_len];
    for t in (1..t_len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, log_prob))
}

/// Posteriors from forward-backward with the Viterbi path as `states`.
pub fn decode(params: &HmmParams, obs: &[Vec<f64>]) -> Result<DecodedStates> {
    let mut decoded = log_forward_backward(params, obs)?;
    decoded.states = viterbi(params, obs)?.0;
    Ok(decoded)
}
