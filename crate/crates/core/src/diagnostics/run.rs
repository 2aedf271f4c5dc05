use alloc::vec::Vec;

use crate::model::ParameterVector;

/// Post-burn-in output of a single chain. All per-sample arrays are parallel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleRun {
    pub samples: Vec<ParameterVector>,
    /// 1-based iteration at which each stored sample was produced.
    pub iterations: Vec<u64>,
    pub accepted: Vec<bool>,
    /// Euclidean length of the proposed move.
    pub proposed_steps: Vec<f64>,
    /// Cumulative per-datum evaluations (including burn-in and initialisation).
    pub evaluations: Vec<u64>,
    /// Post-burn-in proposal and acceptance totals, thinning ignored.
    pub proposals: u64,
    pub acceptances: u64,
    pub burn_in_evaluations: u64,
    pub total_evaluations: u64,
    pub seed: u64,
    pub final_step: f64,
}

impl SampleRun {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Builds a run from samples alone, as when reloading stored output.
    pub fn from_samples(samples: Vec<ParameterVector>, accepted: Vec<bool>) -> Self {
        let k = samples.len();
        assert_eq!(accepted.len(), k);
        let acceptances = accepted.iter().filter(|&&a| a).count() as u64;
        Self {
            iterations: (1..=k as u64).collect(),
            proposed_steps: alloc::vec![f64::NAN; k],
            evaluations: alloc::vec![0; k],
            proposals: k as u64,
            acceptances,
            accepted,
            samples,
            ..Self::default()
        }
    }

    pub(crate) fn push(&mut self, iteration: u64, theta: &[f64], accepted: bool, step: f64, evaluations: u64) {
        self.samples.push(ParameterVector::from_finite(theta.to_vec()));
        self.iterations.push(iteration);
        self.accepted.push(accepted);
        self.proposed_steps.push(step);
        self.evaluations.push(evaluations);
    }

    /// Post-burn-in acceptance rate over all proposals.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return f64::NAN;
        }
        self.acceptances as f64 / self.proposals as f64
    }
}
