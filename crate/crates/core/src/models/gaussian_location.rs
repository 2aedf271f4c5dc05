use alloc::vec;
use alloc::vec::Vec;

use super::Generative;
use crate::error::Result;
use crate::math::normal_logpdf;
use crate::model::{Model, ParameterVector};
use crate::rng::RngStream;

/// `x ~ N(θ, 1)` with a flat prior. Its posterior is `N(x̄, 1/n)`, which makes
/// it a convenient exact reference for the samplers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussianLocation;

impl Model for GaussianLocation {
    type Point = f64;

    fn dim(&self) -> usize {
        1
    }

    fn loglik(&self, x: &f64, theta: &[f64]) -> f64 {
        normal_logpdf(*x, theta[0], 1.0)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn loglik_and_grad(&self, x: &f64, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad[0] += x - theta[0];
        Ok(self.loglik(x, theta))
    }

    fn in_domain(&self, x: &f64) -> bool {
        x.is_finite()
    }
}

impl Generative for GaussianLocation {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        theta[0] + rng.standard_normal()
    }

    fn true_modes(&self, theta_star: &ParameterVector) -> Result<Vec<ParameterVector>> {
        Ok(vec![theta_star.clone()])
    }
}
