use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::{messages, posteriors};
use super::{log_sum_exp, HmmParams, ObservationSequence, VARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::rng::{child_rng, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Stop once the log-likelihood improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub variance_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: HmmParams,
    /// Total log-likelihood of every parameter set visited; the last entry
    /// belongs to `params`.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().expect("at least one E-step")
    }
}

fn check_sequences(seqs: &[ObservationSequence], n_states: usize, dim: usize) -> Result<()> {
    if seqs.is_empty() {
        return Err(Error::InvalidArgument("no observation sequences".into()));
    }
    for s in seqs {
        s.check(dim)?;
    }
    let total: usize = seqs.iter().map(ObservationSequence::len).sum();
    if total < n_states {
        return Err(Error::TooFewRows(format!(
            "{total} observations for {n_states} states"
        )));
    }
    Ok(())
}

/// Quantile-spread starting point: state `k` of `n` takes the
/// `(2k + 1) / 2n` quantile of every pooled dimension as its mean; `pi` and
/// `A` are uniform and every state gets the pooled variance.
pub fn initial_params(
    seqs: &[ObservationSequence],
    n_states: usize,
    variance_floor: f64,
) -> Result<HmmParams> {
    let dim = seqs
        .first()
        .and_then(|s| s.obs.first())
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("no observations".into()))?;
    check_sequences(seqs, n_states, dim)?;
    let pooled: Vec<&Vec<f64>> = seqs.iter().flat_map(|s| &s.obs).collect();
    let total = pooled.len() as f64;

    let mut means = vec![vec![0.0; dim]; n_states];
    let mut variance = vec![0.0; dim];
    for d in 0..dim {
        let mut column: Vec<f64> = pooled.iter().map(|x| x[d]).collect();
        column.sort_by(f64::total_cmp);
        for (k, mean) in means.iter_mut().enumerate() {
            let p = (2 * k + 1) as f64 / (2 * n_states) as f64;
            let pos = p * (column.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            mean[d] = column[lo] + (column[hi] - column[lo]) * (pos - lo as f64);
        }
        let mu = column.iter().sum::<f64>() / total;
        variance[d] = (column.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / total).max(variance_floor);
    }
    Ok(HmmParams {
        n_states,
        dim,
        pi: vec![1.0 / n_states as f64; n_states],
        transitions: vec![vec![1.0 / n_states as f64; n_states]; n_states],
        means,
        variances: vec![variance; n_states],
    })
}

struct Accumulators {
    log_likelihood: f64,
    start: Vec<f64>,
    trans: Vec<Vec<f64>>,
    gammas: Vec<Vec<Vec<f64>>>,
}

fn e_step(params: &HmmParams, seqs: &[ObservationSequence]) -> Result<Accumulators> {
    let n = params.n_states;
    let log_a = super::inference::log_transitions(params);
    let mut acc = Accumulators {
        log_likelihood: 0.0,
        start: vec![0.0; n],
        trans: vec![vec![0.0; n]; n],
        gammas: Vec::with_capacity(seqs.len()),
    };
    for seq in seqs {
        let m = messages(params, &seq.obs)?;
        acc.log_likelihood += m.log_likelihood;
        let gamma = posteriors(&m);
        for k in 0..n {
            acc.start[k] += gamma[0][k];
        }
        for t in 0..seq.len().saturating_sub(1) {
            let mut xi = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    xi[i][j] = m.alpha[t][i] + log_a[i][j] + m.log_b[t + 1][j] + m.beta[t + 1][j];
                }
            }
            let norm = log_sum_exp(xi.iter().flatten().copied());
            for i in 0..n {
                for j in 0..n {
                    acc.trans[i][j] += (xi[i][j] - norm).exp();
                }
            }
        }
        acc.gammas.push(gamma);
    }
    if !acc.log_likelihood.is_finite() {
        return Err(Error::NonFinite(format!(
            "log-likelihood {}",
            acc.log_likelihood
        )));
    }
    Ok(acc)
}

fn m_step(
    params: &HmmParams,
    seqs: &[ObservationSequence],
    acc: &Accumulators,
    floor: f64,
    warnings: &mut Vec<String>,
) -> HmmParams {
    let n = params.n_states;
    let dim = params.dim;
    let mut next = params.clone();

    let starts: f64 = acc.start.iter().sum();
    next.pi = acc.start.iter().map(|s| s / starts).collect();

    for i in 0..n {
        let row_total: f64 = acc.trans[i].iter().sum();
        if row_total > 1e-300 {
            next.transitions[i] = acc.trans[i].iter().map(|x| x / row_total).collect();
        }
    }

    for k in 0..n {
        let weight: f64 = acc.gammas.iter().flatten().map(|g| g[k]).sum();
        if weight < 1e-10 {
            warnings.push(format!(
                "state {k} received no responsibility; emission kept and variance floored"
            ));
            for v in next.variances[k].iter_mut() {
                *v = v.max(floor);
            }
            continue;
        }
        let mut mean = vec![0.0; dim];
        for (seq, gamma) in seqs.iter().zip(&acc.gammas) {
            for (x, g) in seq.obs.iter().zip(gamma) {
                for d in 0..dim {
                    mean[d] += g[k] * x[d];
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= weight);
        let mut var = vec![0.0; dim];
        for (seq, gamma) in seqs.iter().zip(&acc.gammas) {
            for (x, g) in seq.obs.iter().zip(gamma) {
                for d in 0..dim {
                    var[d] += g[k] * (x[d] - mean[d]).powi(2);
                }
            }
        }
        next.variances[k] = var.iter().map(|v| (v / weight).max(floor)).collect();
        next.means[k] = mean;
    }
    next
}

/// Baum-Welch expectation-maximization over independent sequences.
pub fn baum_welch(
    init: &HmmParams,
    seqs: &[ObservationSequence],
    opts: &FitOptions,
) -> Result<FitResult> {
    init.validate()?;
    check_sequences(seqs, init.n_states, init.dim)?;
    let mut params = init.clone();
    let mut log_likelihoods = Vec::new();
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let acc = e_step(&params, seqs)?;
        let ll = acc.log_likelihood;
        if let Some(prev) = log_likelihoods.last() {
            if ll - prev < opts.tol {
                converged = true;
            }
        }
        log_likelihoods.push(ll);
        if converged || iter >= opts.max_iter {
            break;
        }
        params = m_step(&params, seqs, &acc, opts.variance_floor, &mut warnings);
        iter += 1;
    }
    warnings.dedup();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FitResult {
        params,
        log_likelihoods,
        converged,
        seed: 0,
        warnings,
    })
}

/// Runs `n_restarts` fits (restart 0 from the quantile start, later ones with
/// seeded jitter on the means) and keeps the best final log-likelihood,
/// breaking ties toward the earlier restart.
pub fn fit_with_restarts(
    seqs: &[ObservationSequence],
    n_states: usize,
    opts: &FitOptions,
    seed: u64,
    n_restarts: usize,
) -> Result<FitResult> {
    let base = initial_params(seqs, n_states, opts.variance_floor)?;
    let fits: Vec<Result<FitResult>> = (0..n_restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut init = base.clone();
            if r > 0 {
                let mut rng = child_rng(seed, r as u64);
                for k in 0..n_states {
                    for d in 0..init.dim {
                        let sd = base.variances[k][d].sqrt();
                        let jitter = Normal::new(0.0, 0.5 * sd).expect("positive sd");
                        init.means[k][d] += jitter.sample(&mut rng);
                    }
                }
            }
            let mut fit = baum_welch(&init, seqs, opts)?;
            fit.seed = if r == 0 { seed } else { derive_seed(seed, r as u64) };
            Ok(fit)
        })
        .collect();
    let mut best: Option<FitResult> = None;
    for fit in fits {
        let fit = fit?;
        let better = match &best {
            None => true,
            Some(b) => fit.final_log_likelihood() > b.final_log_likelihood(),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}
