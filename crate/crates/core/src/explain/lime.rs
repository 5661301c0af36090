use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng;

/// Per-feature location and spread of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl TrainingStats {
    /// Population mean and standard deviation of each column.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyData)?;
        let n = rows.len() as f64;
        let m = first.len();
        let mean: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..m)
            .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Ok(TrainingStats { mean, std })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeOptions {
    pub n_samples: usize,
    /// Defaults to 0.75·sqrt(M) when absent.
    pub kernel_width: Option<f64>,
    pub k: usize,
    pub ridge: f64,
}

impl Default for LimeOptions {
    fn default() -> Self {
        LimeOptions {
            n_samples: 1000,
            kernel_width: None,
            k: 10,
            ridge: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    /// Top-k `(feature, coefficient)` pairs by absolute coefficient.
    /// Coefficients are per standard deviation of the feature.
    pub weights: Vec<(usize, f64)>,
    pub intercept: f64,
    pub kernel_width: f64,
    pub n_samples: usize,
    /// Weighted R² of the surrogate on its own sample, clamped to [0, 1].
    pub fidelity: f64,
    /// Set when the model was constant over the sample.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// Fits a kernel-weighted ridge surrogate to `model` around `x`.
///
/// Samples are `x + std ⊙ ε` with standard normal `ε`; the surrogate is fit on
/// `ε` (standardized offsets) so coefficients do not depend on feature units.
/// The first sample is `x` itself.
pub fn lime_explain(
    model: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    stats: &TrainingStats,
    opts: &LimeOptions,
    seed: u64,
) -> Result<LimeExplanation> {
    let m = x.len();
    if stats.mean.len() != m || stats.std.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: stats.std.len(),
        });
    }
    if opts.n_samples < 50 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be at least 50, got {}",
            opts.n_samples
        )));
    }
    if !(opts.ridge >= 0.0) {
        return Err(Error::InvalidArgument("ridge penalty must be non-negative".into()));
    }
    let width = opts.kernel_width.unwrap_or(0.75 * (m as f64).sqrt());
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel width must be positive, got {width}")));
    }

    let n = opts.n_samples;
    let mut r = rng(seed);
    let mut design = DMatrix::<f64>::zeros(n, m);
    let mut target = DVector::<f64>::zeros(n);
    let mut weight = DVector::<f64>::zeros(n);
    let mut z = x.to_vec();
    for i in 0..n {
        let mut d2 = 0.0;
        for j in 0..m {
            let e: f64 = if i == 0 || stats.std[j] <= 0.0 {
                0.0
            } else {
                StandardNormal.sample(&mut r)
            };
            design[(i, j)] = e;
            z[j] = x[j] + stats.std[j] * e;
            d2 += e * e;
        }
        target[i] = model(&z);
        weight[i] = (-d2 / (width * width)).exp();
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model output in surrogate sample".into()));
    }

    let wsum = weight.sum();
    let y_mean = weight.dot(&target) / wsum;
    let x_mean: Vec<f64> = (0..m).map(|j| weight.dot(&design.column(j)) / wsum).collect();
    let total_ss: f64 = (0..n).map(|i| weight[i] * (target[i] - y_mean).powi(2)).sum();
    if total_ss <= f64::EPSILON * wsum * y_mean.abs().max(1.0).powi(2) {
        log::warn!("surrogate target is constant; explanation is degenerate");
        return Ok(LimeExplanation {
            weights: (0..m.min(opts.k)).map(|j| (j, 0.0)).collect(),
            intercept: y_mean,
            kernel_width: width,
            n_samples: n,
            fidelity: 0.0,
            degenerate: true,
        });
    }

    // Centering removes the intercept from the penalized system.
    let mut xc = design;
    for j in 0..m {
        xc.column_mut(j).add_scalar_mut(-x_mean[j]);
    }
    let yc = target.add_scalar(-y_mean);
    let sqrt_w = weight.map(f64::sqrt);
    let xw = DMatrix::from_fn(n, m, |i, j| xc[(i, j)] * sqrt_w[i]);
    let yw = yc.component_mul(&sqrt_w);
    let gram = xw.transpose() * &xw + DMatrix::identity(m, m) * opts.ridge;
    let rhs = xw.transpose() * &yw;
    let coef = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::NonFinite(format!("surrogate solve: {e}")))?,
    };
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(c, m)| c * m).sum::<f64>();

    let resid = &yc - &xc * &coef;
    let resid_ss: f64 = (0..n).map(|i| weight[i] * resid[i] * resid[i]).sum();
    let fidelity = (1.0 - resid_ss / total_ss).clamp(0.0, 1.0);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()).then(a.cmp(&b)));
    Ok(LimeExplanation {
        weights: order.into_iter().take(opts.k).map(|j| (j, coef[j])).collect(),
        intercept,
        kernel_width: width,
        n_samples: n,
        fidelity,
        degenerate: false,
    })
}
