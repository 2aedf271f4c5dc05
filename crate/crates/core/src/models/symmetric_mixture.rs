use alloc::vec::Vec;

use super::Generative;
use crate::error::{config_error, Result};
use crate::math::{exp, ln, LN_2PI};
use crate::model::{Model, ParameterVector};
use crate::rng::RngStream;

const STACK: usize = 64;

/// Equal-weight mixture `(1/d) Σⱼ N(θⱼ, 1)`; the posterior is invariant under
/// permutations of θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricMixture {
    d: usize,
}

impl SymmetricMixture {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1, "mixture needs at least one component");
        Self { d }
    }

    pub fn components(&self) -> usize {
        self.d
    }

    /// Log-sum-exp of `−(x − θⱼ)²/2`, leaving `exp(aⱼ − max)` in `weights`.
    fn lse(&self, x: f64, theta: &[f64], weights: &mut [f64]) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for (w, t) in weights.iter_mut().zip(theta) {
            *w = -0.5 * (x - t) * (x - t);
            hi = hi.max(*w);
        }
        let mut s = 0.0;
        for w in weights.iter_mut() {
            *w = exp(*w - hi);
            s += *w;
        }
        for w in weights.iter_mut() {
            *w /= s;
        }
        hi + ln(s)
    }

    fn with_weights<R>(&self, f: impl FnOnce(&mut [f64]) -> R) -> R {
        if self.d <= STACK {
            let mut buf = [0.0; STACK];
            f(&mut buf[..self.d])
        } else {
            f(&mut alloc::vec![0.0; self.d])
        }
    }

    fn constant(&self) -> f64 {
        -ln(self.d as f64) - 0.5 * LN_2PI
    }
}

impl Model for SymmetricMixture {
    type Point = f64;

    fn dim(&self) -> usize {
        self.d
    }

    fn loglik(&self, x: &f64, theta: &[f64]) -> f64 {
        self.with_weights(|w| self.lse(*x, theta, w)) + self.constant()
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn loglik_and_grad(&self, x: &f64, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let lse = self.with_weights(|w| {
            let lse = self.lse(*x, theta, w);
            for ((g, t), w) in grad.iter_mut().zip(theta).zip(w.iter()) {
                *g += w * (x - t);
            }
            lse
        });
        Ok(lse + self.constant())
    }

    fn in_domain(&self, x: &f64) -> bool {
        x.is_finite()
    }
}

impl Generative for SymmetricMixture {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        theta[rng.below(self.d)] + rng.standard_normal()
    }

    /// Every distinct coordinate permutation of θ*.
    fn true_modes(&self, theta_star: &ParameterVector) -> Result<Vec<ParameterVector>> {
        if self.d > 12 {
            let distinct = {
                let mut v: Vec<f64> = theta_star.to_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v.len()
            };
            if distinct > 2 {
                return Err(config_error("mode catalogue limited to θ* with two distinct values when d > 12"));
            }
        }
        let mut current: Vec<f64> = theta_star.to_vec();
        current.sort_by(f64::total_cmp);
        let mut modes = Vec::new();
        loop {
            modes.push(ParameterVector::new(current.clone())?);
            if !next_permutation(&mut current) {
                break;
            }
        }
        Ok(modes)
    }
}

/// Lexicographic successor; returns `false` after the last permutation.
fn next_permutation(v: &mut [f64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
