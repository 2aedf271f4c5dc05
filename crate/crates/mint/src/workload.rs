//! Model and dataset selected by a config.

use mint_core::models::{
    generate_data, FeatureDesign, GaussianLocation, Generative, LabeledPoint, LogisticRegression, SymmetricMixture,
    TiedMeansMixture,
};
use mint_core::{Dataset, Model, ParameterVector, RngStream};

use crate::config::{DataSpec, DesignSpec, ExperimentConfig, ModelSpec};
use crate::data::{load_csv, load_idx, resolve_data_path, Observations, Schema};
use crate::error::{config_error, Result};

/// Stream of the random source that generates training data; test data use
/// the next one.
const DATA_STREAM: u64 = 0xda7a;

/// The one-dimensional-observation models behind a single type.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarModel {
    TiedMeans(TiedMeansMixture),
    GaussianLocation(GaussianLocation),
    SymmetricMixture(SymmetricMixture),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            ScalarModel::TiedMeans($m) => $body,
            ScalarModel::GaussianLocation($m) => $body,
            ScalarModel::SymmetricMixture($m) => $body,
        }
    };
}

impl Model for ScalarModel {
    type Point = f64;

    fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }

    fn loglik(&self, x: &f64, theta: &[f64]) -> f64 {
        dispatch!(self, m => m.loglik(x, theta))
    }

    fn has_gradient(&self) -> bool {
        dispatch!(self, m => m.has_gradient())
    }

    fn loglik_and_grad(&self, x: &f64, theta: &[f64], grad: &mut [f64]) -> mint_core::Result<f64> {
        dispatch!(self, m => m.loglik_and_grad(x, theta, grad))
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        dispatch!(self, m => m.log_prior(theta))
    }

    fn add_grad_log_prior(&self, theta: &[f64], grad: &mut [f64]) {
        dispatch!(self, m => m.add_grad_log_prior(theta, grad))
    }

    fn in_domain(&self, x: &f64) -> bool {
        dispatch!(self, m => m.in_domain(x))
    }
}

impl Generative for ScalarModel {
    fn sample_point(&self, theta: &[f64], rng: &mut RngStream) -> f64 {
        dispatch!(self, m => m.sample_point(theta, rng))
    }

    fn true_modes(&self, theta_star: &ParameterVector) -> mint_core::Result<Vec<ParameterVector>> {
        dispatch!(self, m => m.true_modes(theta_star))
    }
}

pub enum Workload {
    Scalar {
        model: ScalarModel,
        data: Dataset<f64>,
    },
    Logistic {
        model: LogisticRegression,
        data: Dataset<LabeledPoint>,
        test: Option<Vec<LabeledPoint>>,
    },
}

impl Workload {
    pub fn n(&self) -> usize {
        match self {
            Workload::Scalar { data, .. } => data.len(),
            Workload::Logistic { data, .. } => data.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Workload::Scalar { model, .. } => model.dim(),
            Workload::Logistic { model, .. } => model.dim(),
        }
    }
}

pub fn scalar_model(spec: &ModelSpec) -> Option<ScalarModel> {
    match *spec {
        ModelSpec::TiedMeans {
            sigma1_sq,
            sigma2_sq,
            sigmax_sq,
        } => Some(ScalarModel::TiedMeans(TiedMeansMixture {
            sigma1_sq,
            sigma2_sq,
            sigmax_sq,
        })),
        ModelSpec::GaussianLocation => Some(ScalarModel::GaussianLocation(GaussianLocation)),
        ModelSpec::SymmetricMixture { d } => Some(ScalarModel::SymmetricMixture(SymmetricMixture::new(d))),
        ModelSpec::Logistic { .. } => None,
    }
}

fn logistic_model(features: usize, prior_variance: Option<f64>, design: DesignSpec) -> Result<LogisticRegression> {
    let mut model = LogisticRegression::new(features + 1);
    if let Some(v) = prior_variance {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_error("prior_variance must be positive"));
        }
        model = model.with_gaussian_prior(v);
    }
    Ok(match design {
        DesignSpec::Gaussian => model,
        DesignSpec::Clustered { separation } => model.with_design(FeatureDesign::Clustered { separation }),
    })
}

fn generate<G: Generative>(model: &G, spec: &DataSpec, stream: u64) -> Result<Option<Dataset<G::Point>>> {
    match spec {
        DataSpec::Generate { n, theta_star, seed } => {
            let theta = ParameterVector::new(theta_star.clone())?;
            Ok(Some(generate_data(model, &theta, *n, &mut RngStream::new(*seed, stream))?))
        }
        _ => Ok(None),
    }
}

fn scalar_data(model: &ScalarModel, spec: &DataSpec) -> Result<Dataset<f64>> {
    if let Some(data) = generate(model, spec, DATA_STREAM)? {
        return Ok(data);
    }
    match spec {
        DataSpec::Csv { path, column } => match load_csv(&resolve_data_path(path), &Schema::Scalar { column: column.clone() })? {
            Observations::Scalar(values) => Ok(Dataset::for_model(model, values)?),
            Observations::Labeled(_) => unreachable!("scalar schema"),
        },
        DataSpec::Idx { .. } => Err(config_error("IDX files hold labelled images; use a logistic model")),
        DataSpec::Generate { .. } => unreachable!("handled above"),
    }
}

fn labeled_data(model: &LogisticRegression, features: usize, spec: &DataSpec, stream: u64) -> Result<Vec<LabeledPoint>> {
    if let Some(data) = generate(model, spec, stream)? {
        return Ok(data.points().to_vec());
    }
    let points = match spec {
        DataSpec::Csv { path, .. } => match load_csv(&resolve_data_path(path), &Schema::Labeled { features })? {
            Observations::Labeled(points) => points,
            Observations::Scalar(_) => unreachable!("labelled schema"),
        },
        DataSpec::Idx { images, labels, digits } => {
            load_idx(&resolve_data_path(images), &resolve_data_path(labels), digits[0], digits[1])?
        }
        DataSpec::Generate { .. } => unreachable!("handled above"),
    };
    if let Some(p) = points.iter().find(|p| p.features.len() != features + 1) {
        return Err(config_error(format!(
            "model expects {features} features but the data have {}",
            p.features.len() - 1
        )));
    }
    Ok(points)
}

pub fn load_workload(config: &ExperimentConfig) -> Result<Workload> {
    if let Some(model) = scalar_model(&config.model) {
        if config.test_data.is_some() {
            return Err(config_error("test data are only used by the logistic model"));
        }
        let data = scalar_data(&model, &config.data)?;
        return Ok(Workload::Scalar { model, data });
    }
    let ModelSpec::Logistic {
        features,
        prior_variance,
        design,
    } = config.model
    else {
        unreachable!("scalar models handled above")
    };
    let model = logistic_model(features, prior_variance, design)?;
    let data = Dataset::for_model(&model, labeled_data(&model, features, &config.data, DATA_STREAM)?)?;
    let test = match &config.test_data {
        Some(spec) => Some(labeled_data(&model, features, spec, DATA_STREAM + 1)?),
        None => None,
    };
    Ok(Workload::Logistic { model, data, test })
}
