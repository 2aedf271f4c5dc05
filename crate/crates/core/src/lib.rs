//! Mini-batch tempered Markov chain Monte Carlo.
//!
//! Replacing the full-data log-likelihood difference in a Metropolis–Hastings
//! ratio by a mini-batch mean scaled by `n^λ` yields a chain whose stationary
//! law is (asymptotically) the posterior raised to the temperature
//! `T = n^(1-λ)`. This crate implements that sampler ([`mint`]), its
//! equi-energy extension over a ladder of batch sizes ([`mintee`]), full-batch
//! and stochastic-gradient baselines ([`baselines`]), the benchmark models
//! ([`models`]) and the diagnostics used to evaluate them ([`diagnostics`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line runner live in the companion `mint` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod math;
pub mod mint;
pub mod mintee;
pub mod model;
pub mod models;
pub mod proposals;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Dataset, Model, ParameterVector, Posterior};
pub use rng::RngStream;
