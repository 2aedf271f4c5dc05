//! The MINT sampler: Metropolis–Hastings on a single fresh mini-batch per
//! step, whose stationary law is the posterior tempered at `T = n^{1−λ}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::SampleRun;
use crate::error::{config_error, Error, Result};
use crate::estimator::{mu_hat, mu_hat_and_grad, MiniBatch};
use crate::math::{distance, ln, normal_logpdf, powf};
use crate::model::{Model, ParameterVector, Posterior};
use crate::proposals::{langevin_log_q_ratio, langevin_move, metropolis_accept, propose_random_walk, ProposalKernel};
use crate::rng::RngStream;

/// `τ = ln m / ln n`.
pub fn tau_from_batch(m: usize, n: usize) -> Result<f64> {
    if m <= 1 || n <= 1 || m > n {
        return Err(Error::InvalidBatchSize { m, n });
    }
    Ok(ln(m as f64) / ln(n as f64))
}

/// `T = n^{1−λ}`.
pub fn temperature(n: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(config_error("lambda must lie in (0, 1)"));
    }
    Ok(powf(n as f64, 1.0 - lambda))
}

/// Multiplier of the mini-batch mean difference in the acceptance exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExponentScale {
    /// `n^λ`, which targets `π_T`.
    #[default]
    Corrected,
    /// `n`, the naive full-data rescaling. Kept as a negative control.
    Naive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MintConfig {
    n: usize,
    m: usize,
    lambda: f64,
    pub proposal: ProposalKernel,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub scale: ExponentScale,
}

impl MintConfig {
    pub fn new(n: usize, m: usize, lambda: f64, proposal: ProposalKernel) -> Result<Self> {
        let tau = tau_from_batch(m, n)?;
        if !(lambda > 0.0) {
            return Err(config_error("lambda must be positive"));
        }
        if !(lambda < tau) {
            return Err(Error::LambdaNotBelowTau { lambda, tau });
        }
        proposal.validate()?;
        Ok(Self {
            n,
            m,
            lambda,
            proposal,
            burn_in: 0,
            samples: 0,
            thin: 1,
            scale: ExponentScale::Corrected,
        })
    }

    /// Builds the config from `α = λ/τ`; a larger α tempers less.
    pub fn from_alpha(n: usize, m: usize, alpha: f64, proposal: ProposalKernel) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(config_error("alpha must lie in (0, 1)"));
        }
        Self::new(n, m, alpha * tau_from_batch(m, n)?, proposal)
    }

    pub fn with_run_length(mut self, burn_in: usize, samples: usize) -> Self {
        self.burn_in = burn_in;
        self.samples = samples;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin.max(1);
        self
    }

    pub fn with_scale(mut self, scale: ExponentScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        ln(self.m as f64) / ln(self.n as f64)
    }

    pub fn alpha(&self) -> f64 {
        self.lambda / self.tau()
    }

    pub fn temperature(&self) -> f64 {
        powf(self.n as f64, 1.0 - self.lambda)
    }

    /// The exponent multiplier. `n^λ` is computed as `n/T`, which is the
    /// factor a full-batch tempered chain applies to `μ(θ') − μ(θ)`.
    pub fn exponent(&self) -> f64 {
        match self.scale {
            ExponentScale::Corrected => self.n as f64 / self.temperature(),
            ExponentScale::Naive => self.n as f64,
        }
    }
}

/// The augmented state `(θ, μ̂(θ))` carried between MINT iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: ParameterVector,
    /// `μ̂(θ)` from the batch drawn when θ was accepted.
    pub cached_mu_hat: f64,
    pub batch_seed: u64,
    pub log_prior: f64,
    /// Gradient of the log target at θ, for Langevin proposals.
    pub cached_grad: Option<Vec<f64>>,
    pub iteration: u64,
    pub accepted: bool,
    /// Length of the last proposed move.
    pub last_step: f64,
}

/// `scale·ḡ + ∇log π₀ / T`: the gradient of `scale·μ̂ + log π₀ / T`.
pub(crate) fn log_target_grad<M: Model>(model: &M, theta: &[f64], mean_grad: &[f64], scale: f64, temperature: f64) -> Vec<f64> {
    let mut prior = vec![0.0; theta.len()];
    model.add_grad_log_prior(theta, &mut prior);
    mean_grad
        .iter()
        .zip(&prior)
        .map(|(g, p)| scale * g + p / temperature)
        .collect()
}

fn evaluate<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MintConfig,
    batch: &MiniBatch,
    theta: &[f64],
) -> Result<(f64, Option<Vec<f64>>)> {
    if config.proposal.needs_gradient() {
        let mut g = vec![0.0; theta.len()];
        let mu = mu_hat_and_grad(posterior, batch, theta, &mut g)?;
        let grad = log_target_grad(posterior.model(), theta, &g, config.exponent(), config.temperature());
        Ok((mu, Some(grad)))
    } else {
        Ok((mu_hat(posterior, batch, theta)?, None))
    }
}

/// Evaluates `μ̂` at the initial point on its own batch; costs `m` evaluations.
pub fn mint_init<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MintConfig,
    theta: ParameterVector,
    rng: &RngStream,
) -> Result<ChainState> {
    theta.check_dim(posterior.dim())?;
    check_posterior(posterior, config)?;
    if config.proposal.needs_gradient() && !posterior.model().has_gradient() {
        return Err(Error::GradientUnavailable);
    }
    let batch_seed = rng.derive_seed(0);
    let batch = MiniBatch::regenerate(batch_seed, config.n, config.m)?;
    let (cached_mu_hat, cached_grad) = evaluate(posterior, config, &batch, &theta)?;
    let log_prior = posterior.log_prior(&theta);
    Ok(ChainState {
        theta,
        cached_mu_hat,
        batch_seed,
        log_prior,
        cached_grad,
        iteration: 0,
        accepted: false,
        last_step: 0.0,
    })
}

fn check_posterior<M: Model>(posterior: &Posterior<'_, M>, config: &MintConfig) -> Result<()> {
    if posterior.n() != config.n {
        return Err(config_error("config n differs from the dataset size"));
    }
    Ok(())
}

/// One MINT iteration. Draws one fresh batch for `μ̂(θ')` and accepts with
/// probability `min{1, exp(n^λ(μ̂(θ') − μ̂(θ)) + Δlog π₀/T + log q-ratio)}`.
/// A rejection leaves the cached estimate untouched.
pub fn mint_step<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MintConfig,
    state: &mut ChainState,
    rng: &mut RngStream,
) -> Result<()> {
    let step = config.proposal.step;
    let iteration = state.iteration + 1;
    let proposal = match &state.cached_grad {
        Some(g) => langevin_move(&state.theta, g, step, rng)?,
        None => propose_random_walk(&state.theta, step, rng).0,
    };
    let batch_seed = rng.derive_seed(iteration);
    let batch = MiniBatch::regenerate(batch_seed, config.n, config.m)?;
    let (mu_prime, grad_prime) = evaluate(posterior, config, &batch, &proposal)?;
    let lp_prime = posterior.log_prior(&proposal);
    let q = match (&state.cached_grad, &grad_prime) {
        (Some(g), Some(gp)) => langevin_log_q_ratio(&state.theta, &proposal, g, gp, step),
        _ => 0.0,
    };
    let log_ratio = config.exponent() * (mu_prime - state.cached_mu_hat) + (lp_prime - state.log_prior) / config.temperature() + q;
    let accept = metropolis_accept(log_ratio, rng);
    state.last_step = distance(&proposal, &state.theta);
    state.iteration = iteration;
    state.accepted = accept;
    if accept {
        state.theta = ParameterVector::new(proposal)?;
        state.cached_mu_hat = mu_prime;
        state.batch_seed = batch_seed;
        state.log_prior = lp_prime;
        state.cached_grad = grad_prime;
    }
    Ok(())
}

/// Runs `burn_in + samples` MINT iterations from `init` and keeps every
/// `thin`-th post-burn-in state.
pub fn run_mint<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MintConfig,
    init: ParameterVector,
    rng: &mut RngStream,
) -> Result<SampleRun> {
    let start = posterior.evaluations();
    let mut state = mint_init(posterior, config, init, rng)?;
    drive(posterior, &mut state, config.burn_in, config.samples, config.thin, rng.seed(), |post, st| {
        #[cfg(debug_assertions)]
        let before = st.cached_mu_hat.to_bits();
        mint_step(post, config, st, rng)?;
        #[cfg(debug_assertions)]
        debug_assert!(st.accepted || st.cached_mu_hat.to_bits() == before);
        Ok(())
    })
    .map(|mut run| {
        run.final_step = config.proposal.step;
        rebase(&mut run, start);
        run
    })
}

/// Shared burn-in/sampling loop for single-chain samplers.
pub(crate) fn drive<M: Model, F>(
    posterior: &mut Posterior<'_, M>,
    state: &mut ChainState,
    burn_in: usize,
    samples: usize,
    thin: usize,
    seed: u64,
    mut step: F,
) -> Result<SampleRun>
where
    F: FnMut(&mut Posterior<'_, M>, &mut ChainState) -> Result<()>,
{
    let thin = thin.max(1) as u64;
    let burn_in = burn_in as u64;
    let mut run = SampleRun {
        seed,
        burn_in_evaluations: posterior.evaluations(),
        ..SampleRun::default()
    };
    for i in 1..=burn_in + samples as u64 {
        step(posterior, state)?;
        if i == burn_in {
            run.burn_in_evaluations = posterior.evaluations();
        }
        if i > burn_in {
            run.proposals += 1;
            run.acceptances += state.accepted as u64;
            if (i - burn_in) % thin == 0 {
                run.push(i, &state.theta, state.accepted, state.last_step, posterior.evaluations());
            }
        }
    }
    run.total_evaluations = posterior.evaluations();
    Ok(run)
}

/// Makes the evaluation counts relative to `start`.
pub(crate) fn rebase(run: &mut SampleRun, start: u64) {
    run.burn_in_evaluations -= start;
    run.total_evaluations -= start;
    run.evaluations.iter_mut().for_each(|e| *e -= start);
}

/// Inputs to the augmented-space identity: `t = √m(μ̂ − μ)` is treated as a
/// state coordinate with density `φ_θ(t) = N(t; 0, σ²_θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentationScratch {
    /// `ε = n^{λ−τ/2}`.
    pub epsilon: f64,
    /// `n^λ`.
    pub scale: f64,
    pub sigma_sq_theta: f64,
    pub sigma_sq_theta_prime: f64,
    pub t: f64,
    pub t_prime: f64,
}

impl AugmentationScratch {
    pub fn new(n: usize, m: usize, lambda: f64, sigma_sq: (f64, f64), t: (f64, f64)) -> Result<Self> {
        let tau = tau_from_batch(m, n)?;
        let n = n as f64;
        Ok(Self {
            epsilon: powf(n, lambda - tau / 2.0),
            scale: powf(n, lambda),
            sigma_sq_theta: sigma_sq.0,
            sigma_sq_theta_prime: sigma_sq.1,
            t: t.0,
            t_prime: t.1,
        })
    }
}

/// Returns the augmented-space MH log-ratio, with the explicit `φ` densities
/// and `μ = μ̂ − t/√m` recovered from `t`, next to the reduced mini-batch
/// log-ratio `n^λ(μ̂' − μ̂) + log q-ratio`.
pub fn cancellation_identity_check(scratch: &AugmentationScratch, mu_hat_pair: (f64, f64), q_ratio: f64) -> (f64, f64) {
    let s = scratch;
    // ε·t = n^λ·t/√m, so μ = μ̂ − ε·t/n^λ
    let mu = mu_hat_pair.0 - s.epsilon * s.t / s.scale;
    let mu_prime = mu_hat_pair.1 - s.epsilon * s.t_prime / s.scale;
    let phi = normal_logpdf(s.t, 0.0, s.sigma_sq_theta);
    let phi_prime = normal_logpdf(s.t_prime, 0.0, s.sigma_sq_theta_prime);
    let log_f = s.scale * mu + s.epsilon * s.t + phi;
    let log_f_prime = s.scale * mu_prime + s.epsilon * s.t_prime + phi_prime;
    // proposal of t' is φ_θ'(t'), of the reverse move φ_θ(t)
    let full = (log_f_prime + phi) - (log_f + phi_prime) + q_ratio;
    let reduced = s.scale * (mu_hat_pair.1 - mu_hat_pair.0) + q_ratio;
    (full, reduced)
}
