//! Proposal kernels and the step-size controller.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProposalKind {
    RandomWalk,
    Langevin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProposalKernel {
    pub kind: ProposalKind,
    pub step: f64,
}

impl ProposalKernel {
    pub fn random_walk(step: f64) -> Self {
        Self {
            kind: ProposalKind::RandomWalk,
            step,
        }
    }

    pub fn langevin(step: f64) -> Self {
        Self {
            kind: ProposalKind::Langevin,
            step,
        }
    }

    pub fn needs_gradient(&self) -> bool {
        self.kind == ProposalKind::Langevin
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(crate::error::config_error("proposal step must be positive and finite"));
        }
        Ok(())
    }
}

/// `θ' = θ + step·z`; the log q-ratio of a symmetric kernel is 0.
pub fn propose_random_walk(theta: &[f64], step: f64, rng: &mut RngStream) -> (Vec<f64>, f64) {
    let proposal = theta.iter().map(|&t| t + step * rng.standard_normal()).collect();
    (proposal, 0.0)
}

/// Langevin drift-plus-noise move `θ' = θ + (ε²/2) g(θ) + ε z` without its q-ratio.
pub fn langevin_move(theta: &[f64], grad: &[f64], step: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    check_finite(grad)?;
    let half = 0.5 * step * step;
    Ok(theta
        .iter()
        .zip(grad)
        .map(|(&t, &g)| t + half * g + step * rng.standard_normal())
        .collect())
}

/// `log q(θ' → θ) − log q(θ → θ')` for the Langevin kernel, given the
/// log-target gradients at both endpoints.
pub fn langevin_log_q_ratio(theta: &[f64], theta_prime: &[f64], grad: &[f64], grad_prime: &[f64], step: f64) -> f64 {
    let half = 0.5 * step * step;
    let mut forward = 0.0;
    let mut backward = 0.0;
    for i in 0..theta.len() {
        let f = theta_prime[i] - theta[i] - half * grad[i];
        let b = theta[i] - theta_prime[i] - half * grad_prime[i];
        forward += f * f;
        backward += b * b;
    }
    (forward - backward) / (2.0 * step * step)
}

/// Langevin proposal with its MALA q-ratio, using `grad_log_target` at both endpoints.
pub fn propose_langevin<G>(theta: &[f64], step: f64, mut grad_log_target: G, rng: &mut RngStream) -> Result<(Vec<f64>, f64)>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let grad = grad_log_target(theta)?;
    let proposal = langevin_move(theta, &grad, step, rng)?;
    let grad_prime = grad_log_target(&proposal)?;
    check_finite(&grad_prime)?;
    let ratio = langevin_log_q_ratio(theta, &proposal, &grad, &grad_prime, step);
    Ok((proposal, ratio))
}

/// Metropolis accept/reject on a log-ratio. Always consumes exactly one uniform.
pub fn metropolis_accept(log_ratio: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform();
    log_ratio >= 0.0 || math::ln(u) < log_ratio
}

fn check_finite(grad: &[f64]) -> Result<()> {
    match grad.iter().position(|g| !g.is_finite()) {
        Some(coordinate) => Err(Error::NonFiniteGradient { coordinate }),
        None => Ok(()),
    }
}

/// Windowed multiplicative step adaptation toward a target acceptance band.
#[derive(Clone, Debug, PartialEq)]
pub struct StepController {
    step: f64,
    low: f64,
    high: f64,
    factor: f64,
    window: usize,
    seen: usize,
    accepted: usize,
    frozen: bool,
    adaptations: usize,
}

impl StepController {
    /// Band `[0.2, 0.5]`, factor 1.1, window 100.
    pub fn new(step: f64) -> Self {
        Self::with_settings(step, 0.2, 0.5, 1.1, 100)
    }

    pub fn with_settings(step: f64, low: f64, high: f64, factor: f64, window: usize) -> Self {
        assert!(step > 0.0 && factor > 1.0 && window > 0 && low <= high);
        Self {
            step,
            low,
            high,
            factor,
            window,
            seen: 0,
            accepted: 0,
            frozen: false,
            adaptations: 0,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn adaptations(&self) -> usize {
        self.adaptations
    }

    /// Applies the rule to one window's acceptance rate and returns the new step.
    pub fn adapt_step(&mut self, windowed_acceptance: f64) -> f64 {
        if self.frozen {
            log::warn!("step controller is frozen; ignoring acceptance {windowed_acceptance}");
            return self.step;
        }
        let old = self.step;
        if windowed_acceptance > self.high {
            self.step *= self.factor;
        } else if windowed_acceptance < self.low {
            self.step /= self.factor;
        }
        if self.step != old {
            self.adaptations += 1;
            log::debug!("step {old} -> {} (window acceptance {windowed_acceptance:.3})", self.step);
        }
        self.step
    }

    /// Records one MH outcome; adapts at the end of each window unless frozen.
    pub fn record(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.seen += 1;
        self.accepted += accepted as usize;
        if self.seen == self.window {
            let rate = self.accepted as f64 / self.window as f64;
            self.seen = 0;
            self.accepted = 0;
            self.adapt_step(rate);
        }
    }
}

/// Log density of the Gaussian transition `N(mean, step² I)` at `x`.
pub fn gaussian_transition_logpdf(x: &[f64], mean: &[f64], step: f64) -> f64 {
    x.iter()
        .zip(mean)
        .map(|(&a, &b)| math::normal_logpdf(a, b, step * step))
        .sum()
}
