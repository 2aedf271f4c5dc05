//! Benchmark models with synthetic-data generators and mode catalogues.

mod gaussian_location;
mod logistic;
mod symmetric_mixture;
mod tied_means;

use alloc::vec::Vec;

pub use gaussian_location::GaussianLocation;
pub use logistic::{FeatureDesign, LabeledPoint, LogisticRegression};
pub use symmetric_mixture::SymmetricMixture;
pub use tied_means::TiedMeansMixture;

use crate::error::Result;
use crate::model::{Dataset, Model, ParameterVector};
use crate::rng::RngStream;

/// A model that can simulate observations and knows its symmetry-induced modes.
pub trait Generative: Model {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> Self::Point;

    /// Posterior modes implied by the model's symmetry when data come from `theta_star`.
    fn true_modes(&self, theta_star: &ParameterVector) -> Result<Vec<ParameterVector>>;
}

/// `n` i.i.d. draws from the model at `theta_star`.
pub fn generate_data<G: Generative>(
    model: &G,
    theta_star: &ParameterVector,
    n: usize,
    rng: &mut RngStream,
) -> Result<Dataset<G::Point>> {
    theta_star.check_dim(model.dim())?;
    let points = (0..n).map(|_| model.sample_point(theta_star, rng)).collect();
    Dataset::for_model(model, points)
}

pub fn true_modes<G: Generative>(model: &G, theta_star: &ParameterVector) -> Result<Vec<ParameterVector>> {
    theta_star.check_dim(model.dim())?;
    model.true_modes(theta_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Posterior;
    use alloc::vec;

    fn pv(v: Vec<f64>) -> ParameterVector {
        ParameterVector::new(v).unwrap()
    }

    fn gradient_check<M: Model>(model: &M, points: &[M::Point], thetas: &[Vec<f64>]) {
        let h = 1e-5;
        for (x, theta) in points.iter().zip(thetas) {
            let mut grad = vec![0.0; theta.len()];
            let l = model.loglik_and_grad(x, theta, &mut grad).unwrap();
            assert!((l - model.loglik(x, theta)).abs() <= 1e-12 * l.abs().max(1.0));
            for k in 0..theta.len() {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[k] += h;
                down[k] -= h;
                let fd = (model.loglik(x, &up) - model.loglik(x, &down)) / (2.0 * h);
                let denom = fd.abs().max(grad[k].abs()).max(1e-3);
                assert!(
                    (fd - grad[k]).abs() / denom < 1e-4,
                    "coordinate {k}: analytic {} vs finite difference {fd}",
                    grad[k]
                );
            }
        }
    }

    fn random_thetas(rng: &mut RngStream, d: usize, count: usize, scale: f64) -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..d).map(|_| scale * rng.standard_normal()).collect()).collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngStream::new(100, 0);

        let tied = TiedMeansMixture::default();
        let thetas = random_thetas(&mut rng, 2, 100, 1.5);
        let points: Vec<f64> = (0..100).map(|_| 3.0 * rng.standard_normal()).collect();
        gradient_check(&tied, &points, &thetas);

        let mix = SymmetricMixture::new(5);
        let thetas = random_thetas(&mut rng, 5, 100, 1.5);
        let points: Vec<f64> = (0..100).map(|_| 3.0 * rng.standard_normal()).collect();
        gradient_check(&mix, &points, &thetas);

        let logit = LogisticRegression::new(4);
        let thetas = random_thetas(&mut rng, 4, 100, 1.0);
        let star = pv(vec![1.0, -0.5, 0.3, 0.2]);
        let points: Vec<LabeledPoint> = (0..100).map(|_| logit.sample_point(&star, &mut rng)).collect();
        gradient_check(&logit, &points, &thetas);

        let loc = GaussianLocation;
        let thetas = random_thetas(&mut rng, 1, 100, 2.0);
        let points: Vec<f64> = (0..100).map(|_| rng.standard_normal()).collect();
        gradient_check(&loc, &points, &thetas);
    }

    #[test]
    fn prior_gradients_match_finite_differences() {
        let tied = TiedMeansMixture::default();
        let theta = [0.7, -1.3];
        let mut g = [0.0; 2];
        tied.add_grad_log_prior(&theta, &mut g);
        for k in 0..2 {
            let mut up = theta;
            let mut down = theta;
            up[k] += 1e-5;
            down[k] -= 1e-5;
            let fd = (tied.log_prior(&up) - tied.log_prior(&down)) / 2e-5;
            assert!((fd - g[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn tied_means_sample_mean_is_mixture_mean() {
        let model = TiedMeansMixture::default();
        let mut rng = RngStream::new(8, 0);
        let n = 1_000_000;
        let data = generate_data(&model, &pv(vec![0.0, 1.0]), n, &mut rng).unwrap();
        let mean = data.points().iter().sum::<f64>() / n as f64;
        // Var = σx² + Var(component mean) = 2 + 0.25
        let se = libm::sqrt(2.25 / n as f64);
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn symmetric_mixture_tails_are_bounded_by_one_component() {
        let model = SymmetricMixture::new(10);
        let mut theta = vec![0.0; 10];
        theta[0] = 2.0;
        for &x in &[8.0, 12.0, -9.0] {
            // density ≤ max_j N(x; θ_j, 1), which decays like a Gaussian tail
            let l = model.loglik(&x, &theta);
            let bound = theta.iter().map(|t| crate::math::normal_logpdf(x, *t, 1.0)).fold(f64::NEG_INFINITY, f64::max);
            assert!(l <= bound + 1e-12);
        }
        let mut rng = RngStream::new(3, 0);
        let data = generate_data(&model, &pv(theta), 2000, &mut rng).unwrap();
        assert!(data.points().iter().all(|x| x.abs() < 10.0));
    }

    #[test]
    fn logistic_positive_rate_matches_analytic_mean() {
        // Gaussian features: z = w·x + b ~ N(b, |w|²); E[σ(z)] by quadrature.
        let model = LogisticRegression::new(4);
        let star = pv(vec![0.8, -0.6, 0.4, 0.3]);
        let mut rng = RngStream::new(19, 0);
        let n = 100_000;
        let data = generate_data(&model, &star, n, &mut rng).unwrap();
        let rate = data.points().iter().filter(|p| p.label == 1).count() as f64 / n as f64;
        let s = libm::sqrt(0.8 * 0.8 + 0.6 * 0.6 + 0.4 * 0.4);
        let steps = 20_000;
        let (lo, hi) = (-12.0, 12.0);
        let dz = (hi - lo) / steps as f64;
        let mut analytic = 0.0;
        for i in 0..steps {
            let z = lo + (i as f64 + 0.5) * dz;
            analytic += crate::math::sigmoid(0.3 + s * z) * libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI) * dz;
        }
        let se = libm::sqrt(analytic * (1.0 - analytic) / n as f64);
        assert!((rate - analytic).abs() < 3.0 * se, "rate {rate} vs {analytic}");
    }

    #[test]
    fn mode_catalogues() {
        let tied = TiedMeansMixture::default();
        assert_eq!(
            true_modes(&tied, &pv(vec![0.0, 1.0])).unwrap(),
            vec![pv(vec![0.0, 1.0]), pv(vec![1.0, -1.0])]
        );
        let mix = SymmetricMixture::new(3);
        let modes = true_modes(&mix, &pv(vec![2.0, 0.0, 0.0])).unwrap();
        assert_eq!(modes.len(), 3);
        for m in [vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 2.0]] {
            assert!(modes.contains(&pv(m)));
        }
        let logit = LogisticRegression::new(3);
        assert!(true_modes(&logit, &pv(vec![1.0, 0.0, 0.0])).unwrap().is_empty());
    }

    #[test]
    fn symmetric_mixture_is_permutation_invariant() {
        let model = SymmetricMixture::new(6);
        let mut rng = RngStream::new(55, 0);
        let mut star = vec![0.0; 6];
        star[0] = 2.0;
        let data = generate_data(&model, &pv(star), 300, &mut rng).unwrap();
        let mut post = Posterior::new(&model, &data);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
            let mut perm: Vec<usize> = (0..6).collect();
            for i in (1..6).rev() {
                perm.swap(i, rng.below(i + 1));
            }
            let permuted: Vec<f64> = perm.iter().map(|&i| theta[i]).collect();
            let a = post.full_mean_loglik(&theta).unwrap();
            let b = post.full_mean_loglik(&permuted).unwrap();
            // logsumexp over a permuted set: equal up to summation order
            assert!((a - b).abs() <= 1e-13 * a.abs());
        }
    }

    #[test]
    fn catalogued_modes_are_near_stationary() {
        let mut rng = RngStream::new(91, 0);
        let n = 2_000_000;
        let tied = TiedMeansMixture::default();
        let data = generate_data(&tied, &pv(vec![0.0, 1.0]), n, &mut rng).unwrap();
        check_stationary(&tied, &data, &true_modes(&tied, &pv(vec![0.0, 1.0])).unwrap(), n);

        let mix = SymmetricMixture::new(4);
        let star = pv(vec![2.0, 0.0, 0.0, 0.0]);
        let data = generate_data(&mix, &star, n, &mut rng).unwrap();
        check_stationary(&mix, &data, &true_modes(&mix, &star).unwrap(), n);
    }

    fn check_stationary<M: Model>(model: &M, data: &Dataset<M::Point>, modes: &[ParameterVector], n: usize) {
        let mut post = Posterior::new(model, data);
        for mode in modes {
            let mut g = vec![0.0; mode.dim()];
            post.full_mean_loglik_and_grad(mode, &mut g).unwrap();
            let mut total: Vec<f64> = g.iter().map(|x| x * n as f64).collect();
            model.add_grad_log_prior(mode, &mut total);
            let norm = libm::sqrt(total.iter().map(|x| x * x).sum::<f64>());
            // the score at θ* is O(√n) noise, so this needs n well above 10⁶·Var(score)
            assert!(norm < 1e-3 * n as f64, "gradient norm {norm} at {mode:?}");
        }
    }
}
