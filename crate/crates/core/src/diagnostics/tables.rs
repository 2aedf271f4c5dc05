use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::exp;
use crate::mintee::MinteeRun;
use crate::model::ParameterVector;
use crate::models::{LabeledPoint, LogisticRegression};

use super::SampleRun;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub acceptance_rate: f64,
    /// Mean length of accepted moves; `None` when nothing was accepted.
    pub mean_accepted_step: Option<f64>,
}

pub fn acceptance_and_step_stats(run: &SampleRun) -> StepStats {
    let (mut sum, mut count) = (0.0, 0usize);
    for (a, s) in run.accepted.iter().zip(&run.proposed_steps) {
        if *a {
            sum += s;
            count += 1;
        }
    }
    StepStats {
        acceptance_rate: run.acceptance_rate(),
        mean_accepted_step: (count > 0).then(|| sum / count as f64),
    }
}

/// Percentage of each chain's post-burn-in states in each energy ring.
#[derive(Clone, Debug, PartialEq)]
pub struct RingTable {
    pub temperatures: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    /// `percentages[k][j]`: chain `k`, ring `j`.
    pub percentages: Vec<Vec<f64>>,
}

pub fn ring_table(run: &MinteeRun) -> RingTable {
    ring_table_from_counts(&run.ring_counts, run.ladder.temperature.clone(), run.ladder.m.clone())
}

pub fn ring_table_from_counts(counts: &[Vec<usize>], temperatures: Vec<f64>, batch_sizes: Vec<usize>) -> RingTable {
    let percentages = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect();
    RingTable {
        temperatures,
        batch_sizes,
        percentages,
    }
}

/// Accuracy of the posterior-mean predictive probability thresholded at ½,
/// averaging over every `thin`-th sample. An exact ½ predicts the majority
/// label of `test`.
pub fn test_accuracy(model: &LogisticRegression, samples: &[ParameterVector], test: &[LabeledPoint], thin: usize) -> f64 {
    let used: Vec<&ParameterVector> = samples.iter().step_by(thin.max(1)).collect();
    if used.is_empty() || test.is_empty() {
        return f64::NAN;
    }
    let ones = test.iter().filter(|p| p.label == 1).count();
    let majority = if 2 * ones > test.len() { 1 } else { 0 };
    let correct = test
        .iter()
        .filter(|p| {
            let prob = used.iter().map(|theta| model.predict(theta, &p.features)).sum::<f64>() / used.len() as f64;
            let label = if prob > 0.5 {
                1
            } else if prob < 0.5 {
                0
            } else {
                majority
            };
            label == p.label
        })
        .count();
    correct as f64 / test.len() as f64
}

/// Kolmogorov–Smirnov distance between 1-d samples and the distribution with
/// the given unnormalised log density on an increasing grid. The grid CDF
/// integrates the density by the trapezoid rule and is linear between nodes.
pub fn ks_against_grid(samples: &[f64], grid: &[f64], log_density: &[f64]) -> Result<f64> {
    assert_eq!(grid.len(), log_density.len());
    assert!(grid.len() >= 2 && !samples.is_empty());
    if let Some(index) = log_density.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGrid { index });
    }
    let cdf = grid_cdf(grid, log_density);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = interpolate(grid, &cdf, *x);
        d = d.max(f - i as f64 / k).max((i + 1) as f64 / k - f);
    }
    Ok(d)
}

/// Normalised CDF values at the grid nodes.
pub fn grid_cdf(grid: &[f64], log_density: &[f64]) -> Vec<f64> {
    let top = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = log_density.iter().map(|l| exp(l - top)).collect();
    let mut cdf = alloc::vec![0.0; grid.len()];
    for i in 1..grid.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
    }
    let total = cdf[grid.len() - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    cdf
}

fn interpolate(grid: &[f64], cdf: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return 0.0;
    }
    if x >= grid[grid.len() - 1] {
        return 1.0;
    }
    let j = grid.partition_point(|&g| g <= x);
    let (x0, x1) = (grid[j - 1], grid[j]);
    cdf[j - 1] + (cdf[j] - cdf[j - 1]) * (x - x0) / (x1 - x0)
}
