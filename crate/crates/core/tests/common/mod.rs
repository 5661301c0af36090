//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;

use itxml::hmm::{HmmParams, ObservationSequence};
use itxml::rng::rng;

pub const FIXTURE_TOML: &str = include_str!("../../fixtures/developing_dominant.toml");
pub const FIXTURE_CSV: &[u8] = include_bytes!("../../fixtures/developing_dominant.csv");
pub const FIXTURE_TRUTH: &str = include_str!("../../fixtures/developing_dominant.truth.json");

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// 400 rows of ten features in [0, 1]. The label is the XOR of features 0
/// and 1 thresholded at one half; both keep a 0.1 margin from the threshold.
/// The other eight are uniform noise.
pub fn xor_fixture(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            (0..10)
                .map(|j| {
                    let u = r.random::<f64>();
                    if j < 2 {
                        if u < 0.5 { 0.8 * u } else { 0.2 + 0.8 * u }
                    } else {
                        u
                    }
                })
                .collect()
        })
        .collect();
    let y = x.iter().map(|row| usize::from((row[0] > 0.5) != (row[1] > 0.5))).collect();
    (x, y)
}

pub fn random_stochastic(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn standard_normal(r: &mut impl Rng) -> f64 {
    // Box-Muller, so the oracle does not share the library's sampler.
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn sample_categorical(r: &mut impl Rng, p: &[f64]) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Draws `n_seqs` sequences of length `t_len` from a Gaussian HMM.
pub fn sample_hmm(params: &HmmParams, n_seqs: usize, t_len: usize, seed: u64) -> Vec<ObservationSequence> {
    let mut r = rng(seed);
    (0..n_seqs)
        .map(|s| {
            let mut state = sample_categorical(&mut r, &params.pi);
            let mut obs = Vec::with_capacity(t_len);
            for t in 0..t_len {
                if t > 0 {
                    state = sample_categorical(&mut r, &params.transitions[state]);
                }
                obs.push(
                    (0..params.dim)
                        .map(|d| params.means[state][d] + params.variances[state][d].sqrt() * standard_normal(&mut r))
                        .collect(),
                );
            }
            ObservationSequence::new(format!("S{s}"), obs)
        })
        .collect()
}
