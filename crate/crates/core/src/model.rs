//! Model, data and evaluation contracts shared by every sampler.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// A point θ in the model's parameter space. All entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteParameter { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    /// Checks the dimension against a model.
    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.0.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ParameterVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An immutable i.i.d. dataset of `n ≥ 1` observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<X> {
    points: Vec<X>,
}

impl<X> Dataset<X> {
    pub fn new(points: Vec<X>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { points })
    }

    /// Builds a dataset after checking every observation against the model's domain.
    pub fn for_model<M: Model<Point = X>>(model: &M, points: Vec<X>) -> Result<Self> {
        if let Some(index) = points.iter().position(|x| !model.in_domain(x)) {
            return Err(Error::InvalidObservation { index });
        }
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[X] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &X {
        &self.points[i]
    }
}

/// Per-datum log-likelihood model with an optional gradient and prior.
///
/// The default prior is uniform (`log π₀ = 0`).
pub trait Model: Sync {
    type Point: Sync;

    fn dim(&self) -> usize;

    /// `l(x; θ) = log p(x | θ)`.
    fn loglik(&self, x: &Self::Point, theta: &[f64]) -> f64;

    fn has_gradient(&self) -> bool {
        false
    }

    /// Returns `l(x; θ)` and adds `∇_θ l(x; θ)` into `grad`.
    fn loglik_and_grad(&self, _x: &Self::Point, _theta: &[f64], _grad: &mut [f64]) -> Result<f64> {
        Err(Error::GradientUnavailable)
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    /// Adds `∇ log π₀(θ)` into `grad`.
    fn add_grad_log_prior(&self, _theta: &[f64], _grad: &mut [f64]) {}

    fn in_domain(&self, _x: &Self::Point) -> bool {
        true
    }
}

/// A model bound to its dataset, with a per-datum evaluation counter.
///
/// Each sampler chain owns one `Posterior`; the counter records how many
/// times a single observation was touched (a value, or a value together with
/// its gradient, counts once).
pub struct Posterior<'a, M: Model> {
    model: &'a M,
    data: &'a Dataset<M::Point>,
    evaluations: u64,
}

impl<M: Model> Clone for Posterior<'_, M> {
    fn clone(&self) -> Self {
        Self {
            model: self.model,
            data: self.data,
            evaluations: self.evaluations,
        }
    }
}

impl<'a, M: Model> Posterior<'a, M> {
    pub fn new(model: &'a M, data: &'a Dataset<M::Point>) -> Self {
        Self {
            model,
            data,
            evaluations: 0,
        }
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn data(&self) -> &'a Dataset<M::Point> {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn reset_evaluations(&mut self) {
        self.evaluations = 0;
    }

    /// `l(x_i; θ)` for one index.
    pub fn point_loglik(&mut self, index: usize, theta: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let l = self.model.loglik(self.data.get(index), theta);
        if !l.is_finite() {
            return Err(Error::NonFiniteLikelihood { index });
        }
        Ok(l)
    }

    /// Sum of `l(x_i; θ)` over `indices`.
    pub fn sum_loglik<I: IntoIterator<Item = usize>>(&mut self, indices: I, theta: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for i in indices {
            s += self.point_loglik(i, theta)?;
        }
        Ok(s)
    }

    /// Sum of `l(x_i; θ)` over `indices`, accumulating the summed gradient into `grad`.
    pub fn sum_loglik_and_grad<I: IntoIterator<Item = usize>>(
        &mut self,
        indices: I,
        theta: &[f64],
        grad: &mut [f64],
    ) -> Result<f64> {
        let mut s = 0.0;
        for i in indices {
            self.evaluations += 1;
            let l = self.model.loglik_and_grad(self.data.get(i), theta, grad)?;
            if !l.is_finite() {
                return Err(Error::NonFiniteLikelihood { index: i });
            }
            s += l;
        }
        if let Some(coordinate) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { coordinate });
        }
        Ok(s)
    }

    /// `μ(θ) = (1/n) Σ l(x_i; θ)` over the full dataset; costs `n` evaluations.
    pub fn full_mean_loglik(&mut self, theta: &[f64]) -> Result<f64> {
        let n = self.n();
        Ok(self.sum_loglik(0..n, theta)? / n as f64)
    }

    /// Full-data `μ(θ)` together with the mean per-point gradient.
    pub fn full_mean_loglik_and_grad(&mut self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.n();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let s = self.sum_loglik_and_grad(0..n, theta, grad)?;
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok(s * inv)
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        self.model.log_prior(theta)
    }

    /// Unnormalised `log π_T(θ) = (n μ(θ) + log π₀(θ)) / T`.
    pub fn log_posterior_tempered(&mut self, theta: &[f64], temperature: f64) -> Result<f64> {
        if !(temperature >= 1.0) {
            return Err(crate::error::config_error("temperature must be at least 1"));
        }
        let mu = self.full_mean_loglik(theta)?;
        Ok((self.n() as f64 * mu + self.log_prior(theta)) / temperature)
    }
}

/// Free-function form of [`Posterior::full_mean_loglik`].
pub fn full_mean_loglik<M: Model>(posterior: &mut Posterior<'_, M>, theta: &ParameterVector) -> Result<f64> {
    theta.check_dim(posterior.dim())?;
    posterior.full_mean_loglik(theta)
}

/// Free-function form of [`Posterior::log_posterior_tempered`].
pub fn log_posterior_tempered<M: Model>(
    posterior: &mut Posterior<'_, M>,
    theta: &ParameterVector,
    temperature: f64,
) -> Result<f64> {
    theta.check_dim(posterior.dim())?;
    posterior.log_posterior_tempered(theta, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GaussianLocation, TiedMeansMixture};
    use alloc::vec;
    use approx::assert_relative_eq;

    struct Blowup;

    impl Model for Blowup {
        type Point = f64;
        fn dim(&self) -> usize {
            1
        }
        fn loglik(&self, x: &f64, _theta: &[f64]) -> f64 {
            if *x > 0.0 { f64::NAN } else { 0.0 }
        }
    }

    #[test]
    fn parameter_vector_rejects_non_finite() {
        assert_eq!(
            ParameterVector::new(vec![0.0, f64::INFINITY]),
            Err(Error::NonFiniteParameter { index: 1 })
        );
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert_eq!(Dataset::<f64>::new(vec![]), Err(Error::EmptyDataset));
    }

    #[test]
    fn single_point_mean_is_the_point_loglik() {
        let model = TiedMeansMixture::default();
        let data = Dataset::new(vec![0.7]).unwrap();
        let mut post = Posterior::new(&model, &data);
        let theta = [0.3, -0.4];
        assert_eq!(post.full_mean_loglik(&theta).unwrap(), model.loglik(&0.7, &theta));
    }

    #[test]
    fn tied_means_mean_matches_hand_evaluated_mixture() {
        // 0.5 N(x; 0, 2) + 0.5 N(x; 1, 2) evaluated by hand for x = 0 and x = 1.
        let pdf = |x: f64, m: f64| libm::exp(-(x - m) * (x - m) / 4.0) / libm::sqrt(4.0 * core::f64::consts::PI);
        let l0 = libm::log(0.5 * pdf(0.0, 0.0) + 0.5 * pdf(0.0, 1.0));
        let l1 = libm::log(0.5 * pdf(1.0, 0.0) + 0.5 * pdf(1.0, 1.0));
        let model = TiedMeansMixture::default();
        let data = Dataset::new(vec![0.0, 1.0]).unwrap();
        let mut post = Posterior::new(&model, &data);
        assert_relative_eq!(post.full_mean_loglik(&[0.0, 1.0]).unwrap(), 0.5 * (l0 + l1), epsilon = 1e-14);
    }

    #[test]
    fn duplicating_points_leaves_mean_unchanged() {
        let model = TiedMeansMixture::default();
        let pts = vec![-1.0, 0.2, 2.5, 0.9];
        let doubled: Vec<f64> = pts.iter().chain(pts.iter()).copied().collect();
        let a = Dataset::new(pts).unwrap();
        let b = Dataset::new(doubled).unwrap();
        let theta = [0.1, 0.8];
        let ma = Posterior::new(&model, &a).full_mean_loglik(&theta).unwrap();
        let mb = Posterior::new(&model, &b).full_mean_loglik(&theta).unwrap();
        assert_relative_eq!(ma, mb, epsilon = 1e-14);
    }

    #[test]
    fn evaluation_counter_increments_by_n() {
        let model = GaussianLocation;
        let data = Dataset::new(vec![0.0; 37]).unwrap();
        let mut post = Posterior::new(&model, &data);
        post.full_mean_loglik(&[0.5]).unwrap();
        assert_eq!(post.evaluations(), 37);
        post.full_mean_loglik(&[0.5]).unwrap();
        assert_eq!(post.evaluations(), 74);
    }

    #[test]
    fn non_finite_likelihood_names_the_index() {
        let data = Dataset::new(vec![-1.0, -2.0, 3.0, -1.0]).unwrap();
        let mut post = Posterior::new(&Blowup, &data);
        assert_eq!(post.full_mean_loglik(&[0.0]), Err(Error::NonFiniteLikelihood { index: 2 }));
    }

    #[test]
    fn tempered_log_posterior_scaling() {
        let model = GaussianLocation;
        let data = Dataset::new(vec![0.3, -0.2, 1.1]).unwrap();
        let mut post = Posterior::new(&model, &data);
        let theta = [0.4];
        let mu = post.full_mean_loglik(&theta).unwrap();
        let t1 = post.log_posterior_tempered(&theta, 1.0).unwrap();
        assert_relative_eq!(t1, 3.0 * mu, epsilon = 1e-14);
        let t2 = post.log_posterior_tempered(&theta, 2.0).unwrap();
        assert_relative_eq!(t2, t1 / 2.0, epsilon = 1e-14);
        assert!(post.log_posterior_tempered(&theta, 0.5).is_err());
    }

    #[test]
    fn tempered_posterior_on_grid_matches_brute_force_power() {
        // Normalising exp(log π_T) on a grid equals normalising (grid posterior)^(1/T).
        let model = TiedMeansMixture::default();
        let mut rng = crate::RngStream::new(11, 0);
        let data = crate::models::generate_data(&model, &ParameterVector::new(vec![0.0, 1.0]).unwrap(), 50, &mut rng).unwrap();
        let mut post = Posterior::new(&model, &data);
        let temperature = 7.0;
        let grid: Vec<[f64; 2]> = (0..21)
            .flat_map(|i| (0..21).map(move |j| [-1.0 + 0.15 * i as f64, -1.5 + 0.15 * j as f64]))
            .collect();
        let tempered: Vec<f64> = grid.iter().map(|t| post.log_posterior_tempered(t, temperature).unwrap()).collect();
        // brute force: product of point densities times prior, then raised to 1/T
        let brute: Vec<f64> = grid
            .iter()
            .map(|t| {
                let mut density = libm::exp(model.log_prior(t));
                let mut log_scale = 0.0;
                for x in data.points() {
                    density *= libm::exp(model.loglik(x, t));
                    if density < 1e-200 {
                        density *= 1e200;
                        log_scale -= 200.0 * core::f64::consts::LN_10;
                    }
                }
                (libm::log(density) + log_scale) / temperature
            })
            .collect();
        let normalise = |v: &[f64]| {
            let z = crate::math::log_sum_exp(v);
            v.iter().map(|x| libm::exp(x - z)).collect::<Vec<_>>()
        };
        for (a, b) in normalise(&tempered).iter().zip(normalise(&brute)) {
            assert_relative_eq!(*a, b, epsilon = 1e-10, max_relative = 1e-8);
        }
    }
}
