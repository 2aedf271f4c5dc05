use alloc::vec;
use alloc::vec::Vec;

use super::Generative;
use crate::error::Result;
use crate::math::{exp, ln, normal_logpdf, sqrt, LN_2PI};
use crate::model::{Model, ParameterVector};
use crate::rng::RngStream;

/// Two-component mixture `½N(θ₁, σx²) + ½N(θ₁+θ₂, σx²)` with Gaussian priors on θ.
#[derive(Clone, Debug, PartialEq)]
pub struct TiedMeansMixture {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigmax_sq: f64,
}

impl Default for TiedMeansMixture {
    fn default() -> Self {
        Self {
            sigma1_sq: 10.0,
            sigma2_sq: 1.0,
            sigmax_sq: 2.0,
        }
    }
}

impl TiedMeansMixture {
    /// Log densities of the two components (without the ½ weights) and the
    /// posterior responsibility of the second one.
    fn components(&self, x: f64, theta: &[f64]) -> (f64, f64) {
        let a = -0.5 * (x - theta[0]) * (x - theta[0]) / self.sigmax_sq;
        let b = -0.5 * (x - theta[0] - theta[1]) * (x - theta[0] - theta[1]) / self.sigmax_sq;
        let hi = a.max(b);
        let lse = hi + ln(exp(a - hi) + exp(b - hi));
        let norm = -0.5 * (LN_2PI + ln(self.sigmax_sq)) - core::f64::consts::LN_2;
        (lse + norm, exp(b - lse))
    }
}

impl Model for TiedMeansMixture {
    type Point = f64;

    fn dim(&self) -> usize {
        2
    }

    fn loglik(&self, x: &f64, theta: &[f64]) -> f64 {
        self.components(*x, theta).0
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn loglik_and_grad(&self, x: &f64, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let (l, w2) = self.components(*x, theta);
        let w1 = 1.0 - w2;
        let r1 = (x - theta[0]) / self.sigmax_sq;
        let r2 = (x - theta[0] - theta[1]) / self.sigmax_sq;
        grad[0] += w1 * r1 + w2 * r2;
        grad[1] += w2 * r2;
        Ok(l)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        normal_logpdf(theta[0], 0.0, self.sigma1_sq) + normal_logpdf(theta[1], 0.0, self.sigma2_sq)
    }

    fn add_grad_log_prior(&self, theta: &[f64], grad: &mut [f64]) {
        grad[0] -= theta[0] / self.sigma1_sq;
        grad[1] -= theta[1] / self.sigma2_sq;
    }

    fn in_domain(&self, x: &f64) -> bool {
        x.is_finite()
    }
}

impl Generative for TiedMeansMixture {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        let mean = if rng.uniform() < 0.5 { theta[0] } else { theta[0] + theta[1] };
        mean + sqrt(self.sigmax_sq) * rng.standard_normal()
    }

    /// The likelihood is invariant under `(a, b) → (a + b, −b)`.
    fn true_modes(&self, theta_star: &ParameterVector) -> Result<Vec<ParameterVector>> {
        let (a, b) = (theta_star[0], theta_star[1]);
        Ok(vec![
            theta_star.clone(),
            ParameterVector::new(vec![a + b, -b])?,
        ])
    }
}
