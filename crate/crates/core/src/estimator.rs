//! Mini-batch sampling and the mini-batch mean estimator `μ̂`.
//!
//! A batch is a pure function of `(batch_seed, n, m)`: indices are produced by
//! a partial Fisher–Yates shuffle driven by a ChaCha stream keyed on the seed.
//! Because the shuffle emits indices one at a time, the batch of size `m` is a
//! prefix of the batch of any larger size under the same seed, and the extra
//! indices of an extension are uniform draws from the complement of the
//! prefix. Ring entries can therefore store only a seed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Model, ParameterVector, Posterior};
use crate::rng::RngStream;

/// `m` distinct indices in `[0, n)` regenerable from `batch_seed`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiniBatch {
    indices: Vec<usize>,
    batch_seed: u64,
    n: usize,
}

impl MiniBatch {
    /// Rebuilds the batch for `(batch_seed, n, m)`.
    pub fn regenerate(batch_seed: u64, n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidBatchSize { m, n });
        }
        Ok(Self {
            indices: shuffle_prefix(batch_seed, n, m),
            batch_seed,
            n,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Indices in ascending order. Summing in this order makes a batch with
    /// `m = n` reproduce the full-data mean bit for bit.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx = self.indices.clone();
        idx.sort_unstable();
        idx
    }

    pub fn batch_seed(&self) -> u64 {
        self.batch_seed
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

enum Slots {
    Dense(Vec<usize>),
    Sparse(BTreeMap<usize, usize>),
}

impl Slots {
    fn get(&self, i: usize) -> usize {
        match self {
            Slots::Dense(v) => v[i],
            Slots::Sparse(map) => *map.get(&i).unwrap_or(&i),
        }
    }

    fn set(&mut self, i: usize, value: usize) {
        match self {
            Slots::Dense(v) => v[i] = value,
            Slots::Sparse(map) => {
                map.insert(i, value);
            }
        }
    }
}

fn shuffle_prefix(seed: u64, n: usize, m: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Representation only affects speed; the emitted sequence is identical.
    let mut slots = if n <= 4 * m {
        Slots::Dense((0..n).collect())
    } else {
        Slots::Sparse(BTreeMap::new())
    };
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let j = i + rng.random_range(0..(n - i) as u64) as usize;
        let picked = slots.get(j);
        let displaced = slots.get(i);
        slots.set(j, displaced);
        out.push(picked);
    }
    out
}

/// Draws a fresh batch of `m` distinct indices out of `n`.
pub fn sample_batch(n: usize, m: usize, rng: &mut RngStream) -> Result<MiniBatch> {
    MiniBatch::regenerate(rng.next_u64(), n, m)
}

/// Extends `batch` to `target_m` indices; the first `batch.m()` indices are
/// unchanged and the new ones come from the complement.
pub fn extend_batch(batch: &MiniBatch, target_m: usize) -> Result<MiniBatch> {
    if target_m < batch.m() {
        return Err(Error::BatchLineage("target size is smaller than the batch"));
    }
    if target_m == batch.m() {
        return Ok(batch.clone());
    }
    MiniBatch::regenerate(batch.batch_seed, batch.n, target_m)
}

/// `μ̂(θ) = (1/m) Σ_{i ∈ batch} l(x_i; θ)`; costs `m` evaluations.
pub fn mu_hat<M: Model>(posterior: &mut Posterior<'_, M>, batch: &MiniBatch, theta: &[f64]) -> Result<f64> {
    check_batch(posterior, batch)?;
    Ok(posterior.sum_loglik(batch.sorted_indices(), theta)? / batch.m() as f64)
}

/// `μ̂(θ)` and the batch-mean gradient `(1/m) Σ ∇l` in one pass.
pub fn mu_hat_and_grad<M: Model>(
    posterior: &mut Posterior<'_, M>,
    batch: &MiniBatch,
    theta: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    check_batch(posterior, batch)?;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let s = posterior.sum_loglik_and_grad(batch.sorted_indices(), theta, grad)?;
    let inv = 1.0 / batch.m() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok(s * inv)
}

fn check_batch<M: Model>(posterior: &Posterior<'_, M>, batch: &MiniBatch) -> Result<()> {
    if batch.n != posterior.n() {
        return Err(Error::InvalidBatchSize {
            m: batch.m(),
            n: posterior.n(),
        });
    }
    Ok(())
}

/// Updates a mean computed on `batch` to the mean on `extended`, evaluating
/// the likelihood only on the indices `extended` adds.
pub fn refine_mu_hat<M: Model>(
    posterior: &mut Posterior<'_, M>,
    old_estimate: f64,
    batch: &MiniBatch,
    extended: &MiniBatch,
    theta: &[f64],
) -> Result<f64> {
    if extended.batch_seed != batch.batch_seed || extended.n != batch.n {
        return Err(Error::BatchLineage("extended batch has a different seed or population"));
    }
    if extended.m() < batch.m() || extended.indices[..batch.m()] != batch.indices[..] {
        return Err(Error::BatchLineage("extended batch does not start with the original indices"));
    }
    check_batch(posterior, extended)?;
    if extended.m() == batch.m() {
        return Ok(old_estimate);
    }
    let mut fresh: Vec<usize> = extended.indices[batch.m()..].to_vec();
    fresh.sort_unstable();
    let added = posterior.sum_loglik(fresh, theta)?;
    Ok((batch.m() as f64 * old_estimate + added) / extended.m() as f64)
}

/// One draw of the scaled estimator deviation `t = √m (μ̂ − μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TStatSample {
    pub t: f64,
    pub mu_hat: f64,
    pub mu: f64,
    pub m: usize,
}

impl TStatSample {
    pub fn new(mu_hat: f64, mu: f64, m: usize) -> Self {
        Self {
            t: math::sqrt(m as f64) * (mu_hat - mu),
            mu_hat,
            mu,
            m,
        }
    }
}

/// Draws one batch and returns `t = √m (μ̂(θ) − μ(θ))`. Costs `n + m` evaluations.
pub fn t_statistic<M: Model>(
    posterior: &mut Posterior<'_, M>,
    m: usize,
    theta: &ParameterVector,
    rng: &mut RngStream,
) -> Result<TStatSample> {
    theta.check_dim(posterior.dim())?;
    let batch = sample_batch(posterior.n(), m, rng)?;
    let mu = posterior.full_mean_loglik(theta)?;
    let mu_hat = mu_hat(posterior, &batch, theta)?;
    Ok(TStatSample::new(mu_hat, mu, m))
}

/// `(n − m)/(n − 1)`, the variance deflation from sampling without replacement.
pub fn finite_population_factor(n: usize, m: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    (n - m) as f64 / (n - 1) as f64
}
