//! Comparison samplers: full-batch (tempered) Metropolis–Hastings and SGLD.

use alloc::vec;

use crate::diagnostics::SampleRun;
use crate::error::{config_error, Error, Result};
use crate::estimator::{mu_hat_and_grad, MiniBatch};
use crate::math::{distance, powf};
use crate::mint::{drive, log_target_grad, rebase, ChainState};
use crate::model::{Model, ParameterVector, Posterior};
use crate::proposals::{langevin_log_q_ratio, langevin_move, metropolis_accept, propose_random_walk, ProposalKernel};
use crate::rng::RngStream;

/// Full-batch MH on `π_T`; `temperature = 1` is plain MH on the posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct MhConfig {
    pub temperature: f64,
    pub proposal: ProposalKernel,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

impl MhConfig {
    pub fn new(temperature: f64, proposal: ProposalKernel) -> Result<Self> {
        if !(temperature >= 1.0) || !temperature.is_finite() {
            return Err(config_error("temperature must be finite and at least 1"));
        }
        proposal.validate()?;
        Ok(Self {
            temperature,
            proposal,
            burn_in: 0,
            samples: 0,
            thin: 1,
        })
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
}

fn evaluate<M: Model>(posterior: &mut Posterior<'_, M>, config: &MhConfig, theta: &[f64]) -> Result<(f64, Option<alloc::vec::Vec<f64>>)> {
    if config.proposal.needs_gradient() {
        let mut g = vec![0.0; theta.len()];
        let mu = posterior.full_mean_loglik_and_grad(theta, &mut g)?;
        let scale = posterior.n() as f64 / config.temperature;
        Ok((mu, Some(log_target_grad(posterior.model(), theta, &g, scale, config.temperature))))
    } else {
        Ok((posterior.full_mean_loglik(theta)?, None))
    }
}

/// Evaluates `μ(θ)` on the full dataset; costs `n` evaluations.
pub fn mh_init<M: Model>(posterior: &mut Posterior<'_, M>, config: &MhConfig, theta: ParameterVector) -> Result<ChainState> {
    theta.check_dim(posterior.dim())?;
    if config.proposal.needs_gradient() && !posterior.model().has_gradient() {
        return Err(Error::GradientUnavailable);
    }
    let (cached_mu_hat, cached_grad) = evaluate(posterior, config, &theta)?;
    let log_prior = posterior.log_prior(&theta);
    Ok(ChainState {
        theta,
        cached_mu_hat,
        batch_seed: 0,
        log_prior,
        cached_grad,
        iteration: 0,
        accepted: false,
        last_step: 0.0,
    })
}

/// One full-batch MH step on `π_T`. Draws the same random numbers in the
/// same order as a MINT step, so MINT with `m = n` reproduces it exactly.
pub fn mh_step<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MhConfig,
    state: &mut ChainState,
    rng: &mut RngStream,
) -> Result<()> {
    let step = config.proposal.step;
    let t = config.temperature;
    let proposal = match &state.cached_grad {
        Some(g) => langevin_move(&state.theta, g, step, rng)?,
        None => propose_random_walk(&state.theta, step, rng).0,
    };
    let (mu_prime, grad_prime) = evaluate(posterior, config, &proposal)?;
    let lp_prime = posterior.log_prior(&proposal);
    let q = match (&state.cached_grad, &grad_prime) {
        (Some(g), Some(gp)) => langevin_log_q_ratio(&state.theta, &proposal, g, gp, step),
        _ => 0.0,
    };
    let scale = posterior.n() as f64 / t;
    let log_ratio = scale * (mu_prime - state.cached_mu_hat) + (lp_prime - state.log_prior) / t + q;
    let accept = metropolis_accept(log_ratio, rng);
    state.last_step = distance(&proposal, &state.theta);
    state.iteration += 1;
    state.accepted = accept;
    if accept {
        state.theta = ParameterVector::new(proposal)?;
        state.cached_mu_hat = mu_prime;
        state.log_prior = lp_prime;
        state.cached_grad = grad_prime;
    }
    Ok(())
}

pub fn run_mh<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &MhConfig,
    init: ParameterVector,
    rng: &mut RngStream,
) -> Result<SampleRun> {
    let start = posterior.evaluations();
    let mut state = mh_init(posterior, config, init)?;
    let mut run = drive(posterior, &mut state, config.burn_in, config.samples, config.thin, rng.seed(), |post, st| {
        mh_step(post, config, st, rng)
    })?;
    run.final_step = config.proposal.step;
    rebase(&mut run, start);
    Ok(run)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `ε_t = a (b + t)^{−gamma}`.
    Polynomial { a: f64, b: f64, gamma: f64 },
}

impl StepSchedule {
    /// Polynomial decay with exponent 1/3.
    pub fn decreasing(a: f64, b: f64) -> Self {
        StepSchedule::Polynomial { a, b, gamma: 1.0 / 3.0 }
    }

    pub fn step(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant(e) => e,
            StepSchedule::Polynomial { a, b, gamma } => a * powf(b + t as f64, -gamma),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant(e) => e > 0.0 && e.is_finite(),
            StepSchedule::Polynomial { a, b, gamma } => a > 0.0 && b > 0.0 && gamma > 0.0 && (a + b + gamma).is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(config_error("SGLD schedule parameters must be positive"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgldConfig {
    pub m: usize,
    pub schedule: StepSchedule,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

impl SgldConfig {
    pub fn new(m: usize, schedule: StepSchedule) -> Result<Self> {
        if m == 0 {
            return Err(config_error("SGLD batch size must be positive"));
        }
        schedule.validate()?;
        Ok(Self {
            m,
            schedule,
            burn_in: 0,
            samples: 0,
            thin: 1,
        })
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
}

/// `θ ← θ + (ε²/2)((n/m) Σ_batch ∇l + ∇log π₀) + ε z`, with no MH correction.
/// `state.cached_mu_hat` holds the batch mean at the pre-move θ.
pub fn sgld_step<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &SgldConfig,
    state: &mut ChainState,
    rng: &mut RngStream,
) -> Result<()> {
    if !posterior.model().has_gradient() {
        return Err(Error::GradientUnavailable);
    }
    let n = posterior.n();
    if config.m > n {
        return Err(Error::InvalidBatchSize { m: config.m, n });
    }
    let iteration = state.iteration + 1;
    let batch_seed = rng.derive_seed(iteration);
    let batch = MiniBatch::regenerate(batch_seed, n, config.m)?;
    let mut g = vec![0.0; state.theta.dim()];
    state.cached_mu_hat = mu_hat_and_grad(posterior, &batch, &state.theta, &mut g)?;
    let grad = log_target_grad(posterior.model(), &state.theta, &g, n as f64, 1.0);
    let eps = config.schedule.step(iteration);
    let next = langevin_move(&state.theta, &grad, eps, rng)?;
    state.last_step = distance(&next, &state.theta);
    state.theta = ParameterVector::new(next)?;
    state.batch_seed = batch_seed;
    state.iteration = iteration;
    state.accepted = true;
    Ok(())
}

pub fn run_sgld<M: Model>(
    posterior: &mut Posterior<'_, M>,
    config: &SgldConfig,
    init: ParameterVector,
    rng: &mut RngStream,
) -> Result<SampleRun> {
    init.check_dim(posterior.dim())?;
    let start = posterior.evaluations();
    let log_prior = posterior.log_prior(&init);
    let mut state = ChainState {
        theta: init,
        cached_mu_hat: 0.0,
        batch_seed: 0,
        log_prior,
        cached_grad: None,
        iteration: 0,
        accepted: false,
        last_step: 0.0,
    };
    let mut run = drive(posterior, &mut state, config.burn_in, config.samples, config.thin, rng.seed(), |post, st| {
        sgld_step(post, config, st, rng)
    })?;
    run.final_step = config.schedule.step(state.iteration);
    rebase(&mut run, start);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mint::{mint_init, mint_step, temperature, MintConfig};
    use crate::model::Dataset;
    use crate::models::{generate_data, GaussianLocation};

    fn toy(n: usize) -> Dataset<f64> {
        let mut rng = RngStream::new(31, 0);
        generate_data(&GaussianLocation, &ParameterVector::new(vec![0.2]).unwrap(), n, &mut rng).unwrap()
    }

    #[test]
    fn identical_proposal_is_accepted() {
        let data = toy(50);
        let mut post = Posterior::new(&GaussianLocation, &data);
        // a vanishing step reproduces θ up to rounding, so the log-ratio is 0
        let config = MhConfig::new(1.0, ProposalKernel::random_walk(1e-300)).unwrap();
        let mut rng = RngStream::new(1, 0);
        let mut state = mh_init(&mut post, &config, ParameterVector::zeros(1)).unwrap();
        for _ in 0..200 {
            mh_step(&mut post, &config, &mut state, &mut rng).unwrap();
            assert!(state.accepted);
        }
    }

    #[test]
    fn full_batch_cost_is_n_per_proposal() {
        let data = toy(64);
        let mut post = Posterior::new(&GaussianLocation, &data);
        let config = MhConfig::new(1.0, ProposalKernel::random_walk(0.1)).unwrap().with_run_length(10, 90);
        let run = run_mh(&mut post, &config, ParameterVector::zeros(1), &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(run.total_evaluations, 64 * 101);
        assert_eq!(run.evaluations.last().copied(), Some(64 * 101));
    }

    #[test]
    fn mint_with_full_batch_matches_tempered_mh() {
        for kernel in [ProposalKernel::random_walk(0.3), ProposalKernel::langevin(0.2)] {
            let data = toy(80);
            let lambda = 0.25;
            let mint = MintConfig::new(80, 80, lambda, kernel).unwrap();
            let mh = MhConfig::new(temperature(80, lambda).unwrap(), kernel).unwrap();
            let mut post_a = Posterior::new(&GaussianLocation, &data);
            let mut post_b = Posterior::new(&GaussianLocation, &data);
            let mut rng_a = RngStream::new(12, 3);
            let mut rng_b = RngStream::new(12, 3);
            let mut a = mint_init(&mut post_a, &mint, ParameterVector::zeros(1), &rng_a).unwrap();
            let mut b = mh_init(&mut post_b, &mh, ParameterVector::zeros(1)).unwrap();
            for _ in 0..2000 {
                mint_step(&mut post_a, &mint, &mut a, &mut rng_a).unwrap();
                mh_step(&mut post_b, &mh, &mut b, &mut rng_b).unwrap();
                assert_eq!(a.theta[0].to_bits(), b.theta[0].to_bits());
                assert_eq!(a.accepted, b.accepted);
            }
            assert_eq!(post_a.evaluations(), post_b.evaluations());
        }
    }

    #[test]
    fn sgld_without_gradient_signal_is_pure_diffusion() {
        // a constant-likelihood model has zero gradient everywhere
        struct Flat;
        impl Model for Flat {
            type Point = f64;
            fn dim(&self) -> usize {
                2
            }
            fn loglik(&self, _x: &f64, _theta: &[f64]) -> f64 {
                0.0
            }
            fn has_gradient(&self) -> bool {
                true
            }
            fn loglik_and_grad(&self, _x: &f64, _theta: &[f64], _grad: &mut [f64]) -> Result<f64> {
                Ok(0.0)
            }
        }
        let data = Dataset::new(vec![0.0; 10]).unwrap();
        let mut post = Posterior::new(&Flat, &data);
        let config = SgldConfig::new(3, StepSchedule::Constant(0.5)).unwrap().with_run_length(0, 100_000);
        let run = run_sgld(&mut post, &config, ParameterVector::zeros(2), &mut RngStream::new(3, 0)).unwrap();
        let mut prev = [0.0, 0.0];
        let mut ss = [0.0, 0.0];
        for s in &run.samples {
            for k in 0..2 {
                ss[k] += (s[k] - prev[k]) * (s[k] - prev[k]);
                prev[k] = s[k];
            }
        }
        for v in ss {
            let sd = libm::sqrt(v / run.len() as f64);
            assert!((sd - 0.5).abs() < 0.01, "{sd}");
        }
        assert_eq!(run.total_evaluations, 300_000);
    }

    #[test]
    fn sgld_stationary_spread_matches_gaussian_posterior() {
        let n = 1000;
        let data = toy(n);
        let mut post = Posterior::new(&GaussianLocation, &data);
        let config = SgldConfig::new(500, StepSchedule::Constant(0.004)).unwrap().with_run_length(5_000, 200_000);
        let xbar = data.points().iter().sum::<f64>() / n as f64;
        let run = run_sgld(&mut post, &config, ParameterVector::new(vec![xbar]).unwrap(), &mut RngStream::new(4, 0)).unwrap();
        let k = run.len() as f64;
        let mean = run.samples.iter().map(|s| s[0]).sum::<f64>() / k;
        let var = run.samples.iter().map(|s| (s[0] - mean) * (s[0] - mean)).sum::<f64>() / k;
        let sd = libm::sqrt(var);
        let truth = 1.0 / libm::sqrt(n as f64);
        assert!((sd / truth - 1.0).abs() < 0.1, "sd {sd} vs {truth}");
        assert!((mean - xbar).abs() < 0.2 * truth);
    }

    #[test]
    fn schedule_values() {
        let s = StepSchedule::decreasing(2.0, 7.0);
        assert!((s.step(1) - 1.0).abs() < 1e-15);
        assert!(SgldConfig::new(5, StepSchedule::Constant(0.0)).is_err());
        assert!(MhConfig::new(0.5, ProposalKernel::random_walk(0.1)).is_err());
    }
}
