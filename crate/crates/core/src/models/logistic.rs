use alloc::vec::Vec;

use super::Generative;
use crate::error::Result;
use crate::math::{log_sigmoid, sqrt};
use crate::model::{Model, ParameterVector};
use crate::rng::RngStream;

/// A feature vector (bias already appended) with a 0/1 label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: u8,
}

impl LabeledPoint {
    /// Appends the bias feature `1` to raw features.
    pub fn with_bias(mut raw: Vec<f64>, label: u8) -> Self {
        raw.push(1.0);
        Self { features: raw, label }
    }
}

/// How synthetic features are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureDesign {
    /// Standard normal features.
    Gaussian,
    /// Two clusters at `±separation` along the direction of θ*'s weights,
    /// plus standard normal noise.
    Clustered { separation: f64 },
}

/// Binary logistic regression on `p` features, the last of which is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegression {
    p: usize,
    prior_variance: Option<f64>,
    design: FeatureDesign,
}

impl LogisticRegression {
    /// Flat prior, Gaussian synthetic features.
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "need at least the bias feature");
        Self {
            p,
            prior_variance: None,
            design: FeatureDesign::Gaussian,
        }
    }

    pub fn with_gaussian_prior(mut self, variance: f64) -> Self {
        self.prior_variance = Some(variance);
        self
    }

    pub fn with_design(mut self, design: FeatureDesign) -> Self {
        self.design = design;
        self
    }

    pub fn prior_variance(&self) -> Option<f64> {
        self.prior_variance
    }

    fn logit(theta: &[f64], x: &[f64]) -> f64 {
        theta.iter().zip(x).map(|(t, v)| t * v).sum()
    }

    /// Probability of label 1.
    pub fn predict(&self, theta: &[f64], features: &[f64]) -> f64 {
        crate::math::sigmoid(Self::logit(theta, features))
    }
}

impl Model for LogisticRegression {
    type Point = LabeledPoint;

    fn dim(&self) -> usize {
        self.p
    }

    fn loglik(&self, x: &LabeledPoint, theta: &[f64]) -> f64 {
        let z = Self::logit(theta, &x.features);
        if x.label == 1 {
            log_sigmoid(z)
        } else {
            log_sigmoid(-z)
        }
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn loglik_and_grad(&self, x: &LabeledPoint, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let z = Self::logit(theta, &x.features);
        let y = f64::from(x.label);
        let r = y - crate::math::sigmoid(z);
        for (g, v) in grad.iter_mut().zip(&x.features) {
            *g += r * v;
        }
        Ok(if x.label == 1 { log_sigmoid(z) } else { log_sigmoid(-z) })
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        match self.prior_variance {
            None => 0.0,
            Some(v) => theta.iter().map(|t| crate::math::normal_logpdf(*t, 0.0, v)).sum(),
        }
    }

    fn add_grad_log_prior(&self, theta: &[f64], grad: &mut [f64]) {
        if let Some(v) = self.prior_variance {
            for (g, t) in grad.iter_mut().zip(theta) {
                *g -= t / v;
            }
        }
    }

    fn in_domain(&self, x: &LabeledPoint) -> bool {
        x.label <= 1 && x.features.len() == self.p && x.features.iter().all(|v| v.is_finite())
    }
}

impl Generative for LogisticRegression {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> LabeledPoint {
        let weights = &theta[..self.p - 1];
        let mut raw: Vec<f64> = (0..self.p - 1).map(|_| rng.standard_normal()).collect();
        if let FeatureDesign::Clustered { separation } = self.design {
            let norm = sqrt(weights.iter().map(|w| w * w).sum());
            if norm > 0.0 {
                let side = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                for (r, w) in raw.iter_mut().zip(weights) {
                    *r += side * separation * w / norm;
                }
            }
        }
        let mut point = LabeledPoint::with_bias(raw, 0);
        if rng.uniform() < self.predict(theta, &point.features) {
            point.label = 1;
        }
        point
    }

    fn true_modes(&self, _theta_star: &ParameterVector) -> Result<Vec<ParameterVector>> {
        Ok(Vec::new())
    }
}
