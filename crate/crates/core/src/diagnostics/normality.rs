use alloc::vec::Vec;

use crate::error::{config_error, Result};
use crate::estimator::{mu_hat, sample_batch};
use crate::math::{normal_cdf, sqrt};
use crate::model::{Model, ParameterVector, Posterior};
use crate::rng::RngStream;

/// Moments of a sample and its KS distance to the normal with matched mean and sd.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalityReport {
    pub draws: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks: f64,
    /// Zero spread (e.g. `m = n`): shape statistics are undefined.
    pub degenerate: bool,
}

pub const SKEWNESS_TOLERANCE: f64 = 0.3;
pub const KURTOSIS_TOLERANCE: f64 = 0.5;
pub const KS_TOLERANCE: f64 = 0.1;

impl NormalityReport {
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in values {
            let d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= k;
        m3 /= k;
        m4 /= k;
        let sd = sqrt(m2);
        let degenerate = !(sd > 1e-300);
        if degenerate {
            return Self {
                draws: values.len(),
                mean,
                sd,
                skewness: f64::NAN,
                excess_kurtosis: f64::NAN,
                ks: f64::NAN,
                degenerate,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, v) in sorted.iter().enumerate() {
            let f = normal_cdf((v - mean) / sd);
            ks = ks.max(f - i as f64 / k).max((i + 1) as f64 / k - f);
        }
        Self {
            draws: values.len(),
            mean,
            sd,
            skewness: m3 / (m2 * sd),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
            ks,
            degenerate,
        }
    }

    /// Within the shape tolerances: |skew| < 0.3, |excess kurtosis| < 0.5, KS < 0.1.
    pub fn passes(&self) -> bool {
        !self.degenerate
            && self.skewness.abs() < SKEWNESS_TOLERANCE
            && self.excess_kurtosis.abs() < KURTOSIS_TOLERANCE
            && self.ks < KS_TOLERANCE
    }
}

/// Distribution of `t = √m(μ̂ − μ)` at `theta` over `draws` independent batches.
pub fn normality_report<M: Model>(
    posterior: &mut Posterior<'_, M>,
    theta: &ParameterVector,
    m: usize,
    draws: usize,
    rng: &mut RngStream,
) -> Result<NormalityReport> {
    if draws < 100 {
        return Err(config_error("normality report needs at least 100 draws"));
    }
    let mu = posterior.full_mean_loglik(theta)?;
    let mut ts = Vec::with_capacity(draws);
    for _ in 0..draws {
        let batch = sample_batch(posterior.n(), m, rng)?;
        ts.push(sqrt(m as f64) * (mu_hat(posterior, &batch, theta)? - mu));
    }
    Ok(NormalityReport::from_values(&ts))
}

/// `γ(θ) = σ²_θ / (2μ(θ))`, with `σ²_θ` the variance of `l(x_i; θ)` over the data.
pub fn gamma_statistic<M: Model>(posterior: &mut Posterior<'_, M>, theta: &[f64]) -> Result<f64> {
    let n = posterior.n();
    let values: Vec<f64> = (0..n).map(|i| posterior.point_loglik(i, theta)).collect::<Result<_>>()?;
    let mu = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
    Ok(var / (2.0 * mu))
}
