use alloc::vec;
use alloc::vec::Vec;

use super::ladder::LadderConfig;
use super::ring::{ring_index, EnergyRings, RingEntry, RingView};
use crate::diagnostics::SampleRun;
use crate::error::{config_error, Error, Result};
use crate::estimator::{mu_hat, mu_hat_and_grad, refine_mu_hat, MiniBatch};
use crate::math::distance;
use crate::mint::log_target_grad;
use crate::model::{Dataset, Model, ParameterVector, Posterior};
use crate::proposals::{langevin_log_q_ratio, langevin_move, metropolis_accept, propose_random_walk, ProposalKind, StepController};
use crate::rng::RngStream;

/// `ĥ = −n μ̂(θ) − log π₀(θ)` on `batch`; costs `m` evaluations.
pub fn energy_estimate<M: Model>(posterior: &mut Posterior<'_, M>, theta: &[f64], batch: &MiniBatch) -> Result<f64> {
    let mu = mu_hat(posterior, batch, theta)?;
    Ok(energy(posterior, mu, theta))
}

fn energy<M: Model>(posterior: &Posterior<'_, M>, mu: f64, theta: &[f64]) -> f64 {
    -(posterior.n() as f64) * mu - posterior.log_prior(theta)
}

/// `−max(ĥ, H_k)/T_k`.
pub fn truncated_log_density(h_hat: f64, h_k: f64, t_k: f64) -> f64 {
    -h_hat.max(h_k) / t_k
}

/// Log acceptance ratio of an equi-energy jump from `h` to `h_prime`
/// between chain `k` and the hotter chain `k+1`:
/// `log π_k(θ') + log π_{k+1}(θ) − log π_k(θ) − log π_{k+1}(θ')`.
pub fn ee_log_ratio(h: f64, h_prime: f64, h_k: f64, t_k: f64, h_next: f64, t_next: f64) -> f64 {
    truncated_log_density(h_prime, h_k, t_k) - truncated_log_density(h, h_k, t_k) + truncated_log_density(h, h_next, t_next)
        - truncated_log_density(h_prime, h_next, t_next)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub mh_proposals: u64,
    pub mh_accepts: u64,
    pub ee_attempts: u64,
    pub ee_accepts: u64,
    /// EE draws that fell back to MH because the matching ring was empty.
    pub empty_ring_fallbacks: u64,
}

/// One chain of the ladder, stepping against its truncated tempered target.
pub struct MinteeChain<'a, M: Model> {
    k: usize,
    m: usize,
    m_upper: Option<usize>,
    temperature: f64,
    h_k: f64,
    upper: Option<(f64, f64)>,
    bounds: Vec<f64>,
    p_ee: f64,
    burn_in: u64,
    thin: u64,
    kernel: ProposalKind,
    posterior: Posterior<'a, M>,
    rng: RngStream,
    controller: StepController,
    theta: ParameterVector,
    mu_hat: f64,
    h_hat: f64,
    log_prior: f64,
    batch_seed: u64,
    grad: Option<Vec<f64>>,
    iterations: u64,
    stats: ChainStats,
    run: SampleRun,
}

impl<'a, M: Model> MinteeChain<'a, M> {
    /// Sets up chain `k` at `init`; costs `m_k` evaluations.
    pub fn new(model: &'a M, data: &'a Dataset<M::Point>, ladder: &LadderConfig, k: usize, init: ParameterVector, rng: RngStream) -> Result<Self> {
        init.check_dim(model.dim())?;
        if data.len() != ladder.n {
            return Err(config_error("ladder n differs from the dataset size"));
        }
        if ladder.kernel == ProposalKind::Langevin && !model.has_gradient() {
            return Err(Error::GradientUnavailable);
        }
        let top = k + 1 == ladder.chains();
        let mut controller = StepController::new(ladder.initial_step[k]);
        if ladder.burn_in == 0 {
            controller.freeze();
        }
        let mut chain = Self {
            k,
            m: ladder.m[k],
            m_upper: (!top).then(|| ladder.m[k + 1]),
            temperature: ladder.temperature[k],
            h_k: ladder.energy[k],
            upper: (!top).then(|| (ladder.energy[k + 1], ladder.temperature[k + 1])),
            bounds: ladder.energy.clone(),
            p_ee: ladder.p_ee,
            burn_in: ladder.burn_in as u64,
            thin: ladder.thin.max(1) as u64,
            kernel: ladder.kernel,
            posterior: Posterior::new(model, data),
            rng,
            controller,
            theta: init,
            mu_hat: 0.0,
            h_hat: 0.0,
            log_prior: 0.0,
            batch_seed: 0,
            grad: None,
            iterations: 0,
            stats: ChainStats::default(),
            run: SampleRun::default(),
        };
        chain.run.seed = chain.rng.seed();
        let seed = chain.rng.derive_seed(0);
        let theta = chain.theta.clone();
        let (mu, g) = chain.estimate(seed, &theta)?;
        chain.adopt(theta, mu, seed, g);
        Ok(chain)
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> &ParameterVector {
        &self.theta
    }

    pub fn h_hat(&self) -> f64 {
        self.h_hat
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn evaluations(&self) -> u64 {
        self.posterior.evaluations()
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn step_size(&self) -> f64 {
        self.controller.step()
    }

    /// `μ̂` (and the batch-mean gradient for Langevin) on batch `seed`;
    /// the full-batch chain reads the data in index order.
    fn estimate(&mut self, seed: u64, theta: &[f64]) -> Result<(f64, Option<Vec<f64>>)> {
        let n = self.posterior.n();
        let langevin = self.kernel == ProposalKind::Langevin;
        if self.m == n {
            if langevin {
                let mut g = vec![0.0; theta.len()];
                let mu = self.posterior.full_mean_loglik_and_grad(theta, &mut g)?;
                return Ok((mu, Some(g)));
            }
            return Ok((self.posterior.full_mean_loglik(theta)?, None));
        }
        let batch = MiniBatch::regenerate(seed, n, self.m)?;
        if langevin {
            let mut g = vec![0.0; theta.len()];
            let mu = mu_hat_and_grad(&mut self.posterior, &batch, theta, &mut g)?;
            Ok((mu, Some(g)))
        } else {
            Ok((mu_hat(&mut self.posterior, &batch, theta)?, None))
        }
    }

    /// Gradient of the truncated log target; zero in the flat region `ĥ ≤ H_k`.
    fn target_grad(&self, theta: &[f64], h: f64, mean_grad: Option<Vec<f64>>) -> Option<Vec<f64>> {
        let g = mean_grad?;
        if h <= self.h_k {
            return Some(vec![0.0; theta.len()]);
        }
        let scale = self.posterior.n() as f64 / self.temperature;
        Some(log_target_grad(self.posterior.model(), theta, &g, scale, self.temperature))
    }

    fn adopt(&mut self, theta: ParameterVector, mu: f64, seed: u64, mean_grad: Option<Vec<f64>>) {
        self.log_prior = self.posterior.log_prior(&theta);
        self.h_hat = energy(&self.posterior, mu, &theta);
        self.grad = self.target_grad(&theta, self.h_hat, mean_grad);
        self.mu_hat = mu;
        self.batch_seed = seed;
        self.theta = theta;
    }

    /// One iteration: an EE jump into `upper`'s matching ring with
    /// probability `p_ee`, otherwise a MINT step on the truncated target.
    /// Returns the post-burn-in state for the caller to append to this
    /// chain's rings.
    pub fn step(&mut self, upper: Option<&dyn RingView>) -> Result<Option<RingEntry>> {
        self.iterations += 1;
        let mut moved = None;
        if let (Some(rings), Some(_)) = (upper, self.upper) {
            let level = ring_index(self.h_hat, &self.bounds);
            let u = self.rng.uniform();
            if u >= 1.0 - self.p_ee {
                if rings.level_len(level) > 0 {
                    moved = Some(self.ee_jump(rings, level)?);
                } else {
                    self.stats.empty_ring_fallbacks += 1;
                }
            }
        }
        let (accepted, step) = match moved {
            Some(r) => r,
            None => self.mh_step()?,
        };
        if self.iterations == self.burn_in {
            self.controller.freeze();
        }
        if self.iterations <= self.burn_in {
            return Ok(None);
        }
        let post = self.iterations - self.burn_in;
        self.run.proposals += 1;
        self.run.acceptances += accepted as u64;
        if post % self.thin == 0 {
            let evals = self.posterior.evaluations();
            self.run.push(self.iterations, &self.theta, accepted, step, evals);
        }
        Ok(Some(RingEntry {
            theta: self.theta.clone(),
            h_hat: self.h_hat,
            mu_hat: self.mu_hat,
            batch_seed: self.batch_seed,
        }))
    }

    fn mh_step(&mut self) -> Result<(bool, f64)> {
        let step = self.controller.step();
        let proposal = match &self.grad {
            Some(g) => langevin_move(&self.theta, g, step, &mut self.rng)?,
            None => propose_random_walk(&self.theta, step, &mut self.rng).0,
        };
        let seed = self.rng.derive_seed(self.iterations);
        let (mu_prime, mean_grad) = self.estimate(seed, &proposal)?;
        let lp_prime = self.posterior.log_prior(&proposal);
        let h_prime = -(self.posterior.n() as f64) * mu_prime - lp_prime;
        let grad_prime = self.target_grad(&proposal, h_prime, mean_grad);
        let q = match (&self.grad, &grad_prime) {
            (Some(g), Some(gp)) => langevin_log_q_ratio(&self.theta, &proposal, g, gp, step),
            _ => 0.0,
        };
        let t = self.temperature;
        let log_ratio = if self.h_hat > self.h_k && h_prime > self.h_k {
            // untruncated: the plain MINT exponent
            (self.posterior.n() as f64 / t) * (mu_prime - self.mu_hat) + (lp_prime - self.log_prior) / t + q
        } else {
            truncated_log_density(h_prime, self.h_k, t) - truncated_log_density(self.h_hat, self.h_k, t) + q
        };
        let accept = metropolis_accept(log_ratio, &mut self.rng);
        let length = distance(&proposal, &self.theta);
        self.stats.mh_proposals += 1;
        self.stats.mh_accepts += accept as u64;
        self.controller.record(accept);
        if accept {
            self.theta = ParameterVector::new(proposal)?;
            self.mu_hat = mu_prime;
            self.h_hat = h_prime;
            self.log_prior = lp_prime;
            self.batch_seed = seed;
            self.grad = grad_prime;
        }
        Ok((accept, length))
    }

    /// Picks a uniform entry of `rings` at `level`, refines its estimate from
    /// `m_{k+1}` to `m_k` and applies the equi-energy acceptance rule.
    fn ee_jump(&mut self, rings: &dyn RingView, level: usize) -> Result<(bool, f64)> {
        let (h_next, t_next) = self.upper.expect("EE jump needs an upper chain");
        let m_upper = self.m_upper.expect("EE jump needs an upper chain");
        let index = self.rng.below(rings.level_len(level));
        let entry = rings.entry(level, index);
        let n = self.posterior.n();
        let base = MiniBatch::regenerate(entry.batch_seed, n, m_upper)?;
        let extended = MiniBatch::regenerate(entry.batch_seed, n, self.m)?;
        let mu = refine_mu_hat(&mut self.posterior, entry.mu_hat, &base, &extended, &entry.theta)?;
        let h_prime = energy(&self.posterior, mu, &entry.theta);
        let log_ratio = ee_log_ratio(self.h_hat, h_prime, self.h_k, self.temperature, h_next, t_next);
        let accept = metropolis_accept(log_ratio, &mut self.rng);
        let length = distance(&entry.theta, &self.theta);
        self.stats.ee_attempts += 1;
        self.stats.ee_accepts += accept as u64;
        if accept {
            let mean_grad = if self.kernel == ProposalKind::Langevin {
                let mut g = vec![0.0; entry.theta.len()];
                mu_hat_and_grad(&mut self.posterior, &extended, &entry.theta, &mut g)?;
                Some(g)
            } else {
                None
            };
            self.adopt(entry.theta, mu, entry.batch_seed, mean_grad);
        }
        Ok((accept, length))
    }

    /// Consumes the chain, returning its post-burn-in run and statistics.
    pub fn finish(mut self) -> (SampleRun, ChainStats, f64) {
        self.run.total_evaluations = self.posterior.evaluations();
        self.run.final_step = self.controller.step();
        (self.run, self.stats, self.controller.step())
    }
}

/// Output of a full MINTEE run. Index `k` everywhere is the chain index.
#[derive(Clone, Debug, PartialEq)]
pub struct MinteeRun {
    pub ladder: LadderConfig,
    pub chains: Vec<SampleRun>,
    pub stats: Vec<ChainStats>,
    /// Ring occupancy counts per chain and level.
    pub ring_counts: Vec<Vec<usize>>,
    pub final_steps: Vec<f64>,
    pub chain_evaluations: Vec<u64>,
    /// Evaluations by all chains during chain 0's sampling window, the last
    /// `samples` global iterations, when every chain is active.
    pub window_evaluations: u64,
    pub total_evaluations: u64,
}

impl MinteeRun {
    /// Chain 0's samples, which target the untempered posterior.
    pub fn posterior_samples(&self) -> &SampleRun {
        &self.chains[0]
    }
}

/// Per-chain starting points: one shared point or one per chain.
pub(crate) fn chain_inits(inits: &[ParameterVector], k: usize) -> Result<Vec<ParameterVector>> {
    match inits.len() {
        1 => Ok(vec![inits[0].clone(); k]),
        l if l == k => Ok(inits.to_vec()),
        _ => Err(config_error("need one initial point, or one per chain")),
    }
}

/// Random stream for chain `k`: chain 0 uses `rng` itself, so a one-chain
/// ladder reproduces full-batch MH under the same stream.
pub fn chain_rng(rng: &RngStream, k: usize) -> RngStream {
    if k == 0 {
        rng.clone()
    } else {
        rng.substream(rng.stream().wrapping_add(k as u64))
    }
}

/// Sequential round-robin driver. Chain `k` starts at global iteration
/// `(K−1−k)(B+N)`; each global iteration steps the active chains from the
/// hottest down so a chain sees its upper neighbour's newest ring entries.
pub fn run_mintee<M: Model>(
    model: &M,
    data: &Dataset<M::Point>,
    ladder: &LadderConfig,
    inits: &[ParameterVector],
    rng: &RngStream,
) -> Result<MinteeRun> {
    ladder.validate()?;
    let k_max = ladder.chains();
    let inits = chain_inits(inits, k_max)?;
    for init in &inits {
        init.check_dim(model.dim())?;
    }
    let mut chains: Vec<Option<MinteeChain<'_, M>>> = (0..k_max).map(|_| None).collect();
    let mut rings: Vec<EnergyRings> = (0..k_max).map(|_| EnergyRings::new(ladder.energy.clone())).collect();
    let total = ladder.total_iterations();
    let window_start = total - ladder.samples as u64;
    let mut snapshot = 0;
    for g in 0..total {
        if g == window_start {
            snapshot = chains.iter().flatten().map(MinteeChain::evaluations).sum();
        }
        for k in (0..k_max).rev() {
            if g < ladder.start_iteration(k) {
                continue;
            }
            if chains[k].is_none() {
                chains[k] = Some(MinteeChain::new(model, data, ladder, k, inits[k].clone(), chain_rng(rng, k))?);
            }
            let chain = chains[k].as_mut().expect("chain initialised above");
            let upper = rings.get(k + 1).map(|r| r as &dyn RingView);
            if let Some(entry) = chain.step(upper)? {
                rings[k].append(entry)?;
            }
        }
    }
    let mut out = MinteeRun {
        ladder: ladder.clone(),
        chains: Vec::with_capacity(k_max),
        stats: Vec::with_capacity(k_max),
        ring_counts: rings.iter().map(EnergyRings::occupancy).collect(),
        final_steps: Vec::with_capacity(k_max),
        chain_evaluations: Vec::with_capacity(k_max),
        window_evaluations: 0,
        total_evaluations: 0,
    };
    for chain in chains.into_iter() {
        let chain = match chain {
            Some(c) => c,
            None => continue,
        };
        let evals = chain.evaluations();
        let (run, stats, step) = chain.finish();
        out.chains.push(run);
        out.stats.push(stats);
        out.final_steps.push(step);
        out.chain_evaluations.push(evals);
    }
    out.total_evaluations = out.chain_evaluations.iter().sum();
    out.window_evaluations = out.total_evaluations - snapshot;
    Ok(out)
}

/// Lowest energy found by a short full-batch ascent on the log posterior
/// from each starting point. Returns the minimum energy, the evaluations
/// used and the point that attained it.
pub fn pilot_min_energy<M: Model>(
    model: &M,
    data: &Dataset<M::Point>,
    inits: &[ParameterVector],
    iterations: usize,
    rng: &RngStream,
) -> Result<(f64, u64, ParameterVector)> {
    let mut posterior = Posterior::new(model, data);
    let mut rng = rng.substream(rng.stream().wrapping_add(0x9117));
    let n = posterior.n() as f64;
    let mut best = f64::INFINITY;
    let mut argmin = inits.first().cloned().ok_or_else(|| config_error("pilot needs a starting point"))?;
    for init in inits {
        init.check_dim(model.dim())?;
        let mut theta = init.to_vec();
        let mut h = -n * posterior.full_mean_loglik(&theta)? - posterior.log_prior(&theta);
        let mut step = 1.0 / n;
        for _ in 0..iterations {
            let direction = if model.has_gradient() {
                let mut g = vec![0.0; theta.len()];
                posterior.full_mean_loglik_and_grad(&theta, &mut g)?;
                let mut total: Vec<f64> = g.iter().map(|x| x * n).collect();
                model.add_grad_log_prior(&theta, &mut total);
                total
            } else {
                (0..theta.len()).map(|_| rng.standard_normal()).collect()
            };
            let candidate: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
            if candidate.iter().any(|v| !v.is_finite()) {
                step *= 0.5;
                continue;
            }
            let h_new = -n * posterior.full_mean_loglik(&candidate)? - posterior.log_prior(&candidate);
            if h_new < h {
                theta = candidate;
                h = h_new;
                step *= 1.2;
            } else {
                step *= 0.5;
            }
        }
        if h < best {
            best = h;
            argmin = ParameterVector::new(theta)?;
        }
    }
    Ok((best, posterior.evaluations(), argmin))
}

/// Default `H_0`: the pilot's minimum energy less a margin of `2·c·T_0`.
pub fn default_energy_floor(min_energy: f64, ladder: &LadderConfig) -> f64 {
    min_energy - 2.0 * ladder.c * ladder.temperature[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{mh_init, mh_step, MhConfig};
    use crate::mintee::build_ladder;
    use crate::models::{generate_data, GaussianLocation};
    use crate::proposals::ProposalKernel;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncated_log_density(3.0, 5.0, 2.0), -2.5);
        assert_eq!(truncated_log_density(12.0, 5.0, 2.0), -6.0);
        assert_eq!(truncated_log_density(7.5, f64::NEG_INFINITY, 1.0), -7.5);
    }

    #[test]
    fn ee_ratio_examples() {
        assert_eq!(ee_log_ratio(12.0, 10.0, 0.0, 1.0, 0.0, 2.0), 1.0);
        // equal temperatures cancel
        assert_eq!(ee_log_ratio(3.0, 40.0, 0.0, 2.0, 0.0, 2.0), 0.0);
        // equal effective energies
        assert_eq!(ee_log_ratio(1.0, 2.0, 5.0, 1.0, 6.0, 2.0), 0.0);
    }

    #[test]
    fn energy_on_hand_dataset() {
        let data = Dataset::new(vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        let mut post = Posterior::new(&GaussianLocation, &data);
        let batch = MiniBatch::regenerate(3, 4, 4).unwrap();
        let h = energy_estimate(&mut post, &[0.5], &batch).unwrap();
        let ln2pi = libm::log(2.0 * core::f64::consts::PI);
        let hand: f64 = [0.0f64, 1.0, -1.0, 2.0].iter().map(|x| 0.5 * ln2pi + 0.5 * (x - 0.5) * (x - 0.5)).sum();
        assert!((h - hand).abs() < 1e-12);
    }

    #[test]
    fn single_chain_is_full_batch_mh() {
        let mut g = RngStream::new(3, 0);
        let data = generate_data(&GaussianLocation, &ParameterVector::new(vec![0.0]).unwrap(), 60, &mut g).unwrap();
        for kernel in [ProposalKind::RandomWalk, ProposalKind::Langevin] {
            let mut ladder = build_ladder(60, 1, 60, 1.4, 0.9, 10.0, -1e300).unwrap().with_run_length(0, 500);
            ladder.kernel = kernel;
            ladder.initial_step = vec![0.2];
            let rng = RngStream::new(8, 2);
            let run = run_mintee(&GaussianLocation, &data, &ladder, &[ParameterVector::zeros(1)], &rng).unwrap();
            let proposal = ProposalKernel { kind: kernel, step: 0.2 };
            let config = MhConfig::new(1.0, proposal).unwrap();
            let mut post = Posterior::new(&GaussianLocation, &data);
            let mut state = mh_init(&mut post, &config, ParameterVector::zeros(1)).unwrap();
            let mut rng = rng.clone();
            for s in &run.chains[0].samples {
                mh_step(&mut post, &config, &mut state, &mut rng).unwrap();
                assert_eq!(s[0].to_bits(), state.theta[0].to_bits());
            }
            assert_eq!(run.total_evaluations, post.evaluations());
        }
    }
}
