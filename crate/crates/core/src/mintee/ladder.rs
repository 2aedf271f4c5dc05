use alloc::vec::Vec;

use crate::error::{config_error, Result};
use crate::math::{ln, powf, sqrt};
use crate::proposals::ProposalKind;

/// Per-chain schedule of batch sizes, temperatures and energy truncations.
/// Chain 0 is the full-batch chain at `T = 1`; temperatures grow with `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderConfig {
    pub n: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Energy spacing: `H_{k+1} − H_k = c·T_k`.
    pub c: f64,
    pub m: Vec<usize>,
    pub lambda: Vec<f64>,
    pub temperature: Vec<f64>,
    /// `H_0 < … < H_{K−1}`; `H_K = +∞` is implicit.
    pub energy: Vec<f64>,
    pub p_ee: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub kernel: ProposalKind,
    pub initial_step: Vec<f64>,
}

/// Ladder with `m_{K−1} = m_min`, `m_k = round(γ m_{k+1})` and `m_0 = n`;
/// `λ_k = α ln m_k / ln n` and `T_k = n^{1−λ_k}` for `k ≥ 1`, `T_0 = 1`.
pub fn build_ladder(n: usize, k: usize, m_min: usize, gamma: f64, alpha: f64, c: f64, h0: f64) -> Result<LadderConfig> {
    if k == 0 {
        return Err(config_error("ladder needs at least one chain"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(config_error("alpha must lie in (0, 1)"));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(config_error("gamma must exceed 1"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(config_error("energy spacing c must be positive"));
    }
    if !h0.is_finite() {
        return Err(config_error("H_0 must be finite"));
    }
    if n < 2 {
        return Err(config_error("ladder needs at least two observations"));
    }
    let mut m = alloc::vec![0usize; k];
    m[0] = n;
    if k > 1 {
        if m_min < 2 || m_min as f64 * powf(gamma, (k - 1) as f64) > n as f64 * (1.0 + 1e-12) {
            return Err(config_error(alloc::format!(
                "ladder cost condition violated: m_min·γ^(K−1) = {} exceeds n = {n}",
                m_min as f64 * powf(gamma, (k - 1) as f64)
            )));
        }
        m[k - 1] = m_min;
        for j in (1..k - 1).rev() {
            m[j] = libm::round(gamma * m[j + 1] as f64) as usize;
        }
        if m[1] >= n {
            return Err(config_error("batch sizes must stay below n on the tempered chains"));
        }
    }
    let ln_n = ln(n as f64);
    let mut lambda = alloc::vec![1.0; k];
    let mut temperature = alloc::vec![1.0; k];
    for j in 1..k {
        lambda[j] = alpha * ln(m[j] as f64) / ln_n;
        temperature[j] = powf(n as f64, 1.0 - lambda[j]);
    }
    for j in 1..k {
        if !(temperature[j] > temperature[j - 1]) {
            return Err(config_error("temperatures must increase along the ladder"));
        }
    }
    let initial_step = temperature.iter().map(|t| 5e-4 * sqrt(*t)).collect();
    let mut ladder = LadderConfig {
        n,
        gamma,
        alpha,
        c,
        m,
        lambda,
        temperature,
        energy: Vec::new(),
        p_ee: 0.1,
        burn_in: 0,
        samples: 0,
        thin: 1,
        kernel: ProposalKind::Langevin,
        initial_step,
    };
    ladder.set_energy_floor(h0);
    Ok(ladder)
}

impl LadderConfig {
    pub fn chains(&self) -> usize {
        self.m.len()
    }

    /// Resets `H_0` and rebuilds `H_{k+1} = H_k + c·T_k`.
    pub fn set_energy_floor(&mut self, h0: f64) {
        let k = self.chains();
        self.energy = alloc::vec![h0; k];
        for j in 1..k {
            self.energy[j] = self.energy[j - 1] + self.c * self.temperature[j - 1];
        }
    }

    /// `H_k`, with `H_K = +∞`.
    pub fn truncation(&self, k: usize) -> f64 {
        self.energy.get(k).copied().unwrap_or(f64::INFINITY)
    }

    pub fn with_run_length(mut self, burn_in: usize, samples: usize) -> Self {
        self.burn_in = burn_in;
        self.samples = samples;
        self
    }

    /// Global iteration at which chain `k` starts.
    pub fn start_iteration(&self, k: usize) -> u64 {
        ((self.chains() - 1 - k) * (self.burn_in + self.samples)) as u64
    }

    /// Total global iterations: chain 0 finishes with `samples` post-burn-in states.
    pub fn total_iterations(&self) -> u64 {
        (self.chains() * (self.burn_in + self.samples)) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.chains();
        let lens = [self.lambda.len(), self.temperature.len(), self.energy.len(), self.initial_step.len()];
        if lens.iter().any(|&l| l != k) || k == 0 {
            return Err(config_error("ladder arrays must all have one entry per chain"));
        }
        if self.m[0] != self.n {
            return Err(config_error("chain 0 must use the full batch"));
        }
        if !(self.p_ee > 0.0 && self.p_ee < 1.0) {
            return Err(config_error("p_ee must lie in (0, 1)"));
        }
        for j in 1..k {
            if self.m[j] >= self.m[j - 1] || self.m[j] < 2 {
                return Err(config_error("batch sizes must decrease along the ladder"));
            }
            if !(self.temperature[j] > self.temperature[j - 1]) || !(self.energy[j] > self.energy[j - 1]) {
                return Err(config_error("temperatures and energy levels must increase along the ladder"));
            }
        }
        if self.temperature[0] < 1.0 {
            return Err(config_error("temperatures must be at least 1"));
        }
        if self.initial_step.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(config_error("initial steps must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_chain_ladder() {
        let l = build_ladder(1000, 1, 10, 1.4, 0.9, 10.0, -5.0).unwrap();
        assert_eq!(l.m, [1000]);
        assert_eq!(l.temperature, [1.0]);
        assert_eq!(l.energy, [-5.0]);
        l.validate().unwrap();
    }

    #[test]
    fn appendix_ladder() {
        let l = build_ladder(100_000, 7, 1000, 1.4, 0.995, 10.0, 0.0).unwrap();
        let paper_m = [100_000usize, 5378, 3841, 2743, 1959, 1400, 1000];
        let paper_t = [1.00, 19.41, 27.13, 37.93, 53.02, 74.06, 103.51];
        for j in 0..7 {
            // the paper's sizes are floor(1000·1.4^j); recursive rounding differs by at most one
            assert!(l.m[j].abs_diff(paper_m[j]) <= 1, "m[{j}] = {}", l.m[j]);
            // a one-unit shift in m moves T by under 0.03
            assert!((l.temperature[j] - paper_t[j]).abs() < 0.03, "T[{j}] = {}", l.temperature[j]);
            if j > 0 {
                let exact = libm::pow(1e5, 1.0 - 0.995 * libm::log(paper_m[j] as f64) / libm::log(1e5));
                assert!((exact - paper_t[j]).abs() < 0.005);
            }
        }
        for j in 0..6 {
            assert_eq!(l.m[j + 1], if j + 1 == 6 { 1000 } else { libm::round(1.4 * l.m[j + 2] as f64) as usize });
            assert!((l.energy[j + 1] - l.energy[j] - 10.0 * l.temperature[j]).abs() < 1e-9);
        }
        l.validate().unwrap();
    }

    #[test]
    fn cost_condition_and_alpha_are_checked() {
        assert!(build_ladder(10_000, 5, 2700, 1.4, 0.995, 10.0, 0.0).is_err());
        assert!(build_ladder(10_000, 5, 2603, 1.4, 0.995, 10.0, 0.0).is_ok());
        assert!(build_ladder(10_000, 5, 2603, 1.4, 1.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn staged_schedule() {
        let l = build_ladder(10_000, 3, 5000, 1.4, 0.99, 10.0, 0.0).unwrap().with_run_length(5, 10);
        assert_eq!(l.start_iteration(2), 0);
        assert_eq!(l.start_iteration(1), 15);
        assert_eq!(l.start_iteration(0), 30);
        assert_eq!(l.total_iterations(), 45);
    }
}
