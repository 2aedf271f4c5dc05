use alloc::vec::Vec;

use crate::error::{config_error, Result};
use crate::model::ParameterVector;

/// A cached past state with its mini-batch energy and the batch that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct RingEntry {
    pub theta: ParameterVector,
    pub h_hat: f64,
    pub mu_hat: f64,
    pub batch_seed: u64,
}

/// Level `j` with `H_j ≤ ĥ < H_{j+1}`; `H_K = +∞` and energies below `H_0` map to 0.
pub fn ring_index(h_hat: f64, bounds: &[f64]) -> usize {
    bounds.partition_point(|&b| b <= h_hat).saturating_sub(1)
}

/// Read access to a chain's rings, shared by the sequential and threaded drivers.
pub trait RingView {
    fn level_len(&self, level: usize) -> usize;
    fn entry(&self, level: usize, index: usize) -> RingEntry;
}

/// Append-only per-level store of one chain's visited states.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRings {
    bounds: Vec<f64>,
    levels: Vec<Vec<RingEntry>>,
}

impl EnergyRings {
    pub fn new(bounds: Vec<f64>) -> Self {
        let levels = bounds.iter().map(|_| Vec::new()).collect();
        Self { bounds, levels }
    }

    /// Appends at the entry's level and returns that level.
    pub fn append(&mut self, entry: RingEntry) -> Result<usize> {
        if !entry.h_hat.is_finite() {
            return Err(config_error("ring entries need a finite energy"));
        }
        let level = ring_index(entry.h_hat, &self.bounds);
        debug_assert!(
            entry.h_hat < self.bounds.get(level + 1).copied().unwrap_or(f64::INFINITY)
                && (level == 0 || entry.h_hat >= self.bounds[level])
        );
        self.levels[level].push(entry);
        Ok(level)
    }

    pub fn level(&self, level: usize) -> &[RingEntry] {
        &self.levels[level]
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn occupancy(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

impl RingView for EnergyRings {
    fn level_len(&self, level: usize) -> usize {
        self.levels[level].len()
    }

    fn entry(&self, level: usize, index: usize) -> RingEntry {
        self.levels[level][index].clone()
    }
}
