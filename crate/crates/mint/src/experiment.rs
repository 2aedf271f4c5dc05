//! Runs one configured experiment: validates the sampler settings against
//! the dataset, resolves the starting point, runs the chain and writes
//! `samples.csv`, `run.json` and the diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mint_core::baselines::{mh_init, mh_step, run_mh, run_sgld, MhConfig, SgldConfig, StepSchedule};
use mint_core::mint::{mint_init, mint_step, run_mint, ChainState, ExponentScale, MintConfig};
use mint_core::mintee::{build_ladder, default_energy_floor, pilot_min_energy, run_mintee, ChainStats, LadderConfig, MinteeRun};
use mint_core::models::Generative;
use mint_core::proposals::{ProposalKernel, ProposalKind};
use mint_core::{Dataset, Model, ParameterVector, Posterior, RngStream};

use crate::config::{EnergyFloorSpec, ExperimentConfig, InitSpec, ProposalSection, SamplerKind, ScaleSpec, ScheduleSpec, TuneSpec};
use crate::data::write_samples;
use crate::error::{config_error, Error, Result};
use crate::parallel::run_mintee_parallel;
use crate::report::{diagnose, Diagnostics};
use crate::workload::{load_workload, Workload};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const RUN_FILE: &str = "run.json";

const TUNE_STREAM: u64 = 0x7e5e;
const INIT_STREAM: u64 = 0x1417;

/// Everything `diagnose` needs besides the samples themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// The config with size-dependent defaults filled in.
    pub config: ExperimentConfig,
    pub n: usize,
    pub dim: usize,
    /// Temperature of the distribution the stored chain targets.
    pub target_temperature: f64,
    pub init: Vec<f64>,
    /// Step of the main run, after pilot tuning when enabled.
    pub step: Option<f64>,
    pub samples_written: usize,
    pub proposals: u64,
    pub acceptances: u64,
    pub burn_in_evaluations: u64,
    /// Sampling cost, excluding tuning and pilot searches.
    pub evaluations_total: u64,
    pub pilot_evaluations: u64,
    pub mintee: Option<MinteeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinteeRecord {
    pub temperatures: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub energies: Vec<f64>,
    pub initial_steps: Vec<f64>,
    pub final_steps: Vec<f64>,
    pub ring_counts: Vec<Vec<usize>>,
    pub stats: Vec<ChainStatsRecord>,
    pub chain_evaluations: Vec<u64>,
    pub window_evaluations: u64,
    pub pilot_min_energy: Option<f64>,
    pub parallel: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStatsRecord {
    pub mh_proposals: u64,
    pub mh_accepts: u64,
    pub ee_attempts: u64,
    pub ee_accepts: u64,
    pub empty_ring_fallbacks: u64,
}

impl From<ChainStats> for ChainStatsRecord {
    fn from(s: ChainStats) -> Self {
        Self {
            mh_proposals: s.mh_proposals,
            mh_accepts: s.mh_accepts,
            ee_attempts: s.ee_attempts,
            ee_accepts: s.ee_accepts,
            empty_ring_fallbacks: s.empty_ring_fallbacks,
        }
    }
}

impl RunRecord {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
    }
}

pub struct Outcome {
    pub out_dir: PathBuf,
    pub record: RunRecord,
    pub diagnostics: Diagnostics,
    /// The full in-memory MINTEE result, for callers that need every chain.
    pub mintee: Option<MinteeRun>,
}

/// Single-chain sampler settings, fixed before any sampling happens.
#[derive(Clone, Debug)]
enum Plan {
    Mint(MintConfig),
    Mh(MhConfig),
    Sgld(SgldConfig),
    Mintee(Box<LadderConfig>),
}

impl Plan {
    fn with_step(&self, step: f64) -> Plan {
        match self {
            Plan::Mint(c) => {
                let mut c = c.clone();
                c.proposal.step = step;
                Plan::Mint(c)
            }
            Plan::Mh(c) => Plan::Mh(MhConfig {
                proposal: ProposalKernel { step, ..c.proposal },
                ..c.clone()
            }),
            other => other.clone(),
        }
    }

    fn init<M: Model>(&self, posterior: &mut Posterior<'_, M>, theta: ParameterVector, rng: &RngStream) -> Result<ChainState> {
        Ok(match self {
            Plan::Mint(c) => mint_init(posterior, c, theta, rng)?,
            Plan::Mh(c) => mh_init(posterior, c, theta)?,
            _ => unreachable!("only MH-type chains are tuned"),
        })
    }

    fn step<M: Model>(&self, posterior: &mut Posterior<'_, M>, state: &mut ChainState, rng: &mut RngStream) -> Result<()> {
        match self {
            Plan::Mint(c) => mint_step(posterior, c, state, rng)?,
            Plan::Mh(c) => mh_step(posterior, c, state, rng)?,
            _ => unreachable!("only MH-type chains are tuned"),
        };
        Ok(())
    }
}

fn kernel(section: &ProposalSection) -> ProposalKernel {
    ProposalKernel {
        kind: section.kernel.into(),
        step: section.step,
    }
}

fn plan(config: &ExperimentConfig, n: usize, dim: usize, has_gradient: bool) -> Result<Plan> {
    let (burn_in, samples, thin) = (config.burn_in, config.samples, config.thin);
    let plan = match config.sampler {
        SamplerKind::Mint => {
            let lambda = config.mint.lambda.expect("resolved");
            let scale = match config.mint.scale {
                ScaleSpec::Corrected => ExponentScale::Corrected,
                ScaleSpec::Naive => ExponentScale::Naive,
            };
            Plan::Mint(
                MintConfig::new(n, config.mint.m, lambda, kernel(&config.mint.proposal))?
                    .with_scale(scale)
                    .with_run_length(burn_in, samples)
                    .with_thin(thin),
            )
        }
        SamplerKind::Mh => Plan::Mh(MhConfig::new(1.0, kernel(&config.mh.proposal))?.with_run_length(burn_in, samples).with_thin(thin)),
        SamplerKind::TemperedMh => {
            let t = config.tempered_mh.temperature.expect("resolved");
            Plan::Mh(MhConfig::new(t, kernel(&config.tempered_mh.proposal))?.with_run_length(burn_in, samples).with_thin(thin))
        }
        SamplerKind::Sgld => {
            let schedule = match config.sgld.schedule {
                ScheduleSpec::Constant { step } => StepSchedule::Constant(step),
                ScheduleSpec::Polynomial { a, b, gamma } => StepSchedule::Polynomial { a, b, gamma },
            };
            let c = SgldConfig::new(config.sgld.m, schedule)?.with_run_length(burn_in, samples).with_thin(thin);
            if c.m > n {
                return Err(mint_core::Error::InvalidBatchSize { m: c.m, n }.into());
            }
            Plan::Sgld(c)
        }
        SamplerKind::Mintee => {
            let s = &config.mintee;
            // the floor is a placeholder until the pilot or θ* fixes it
            let mut ladder = build_ladder(n, s.chains, s.m_min.unwrap_or(n), s.gamma, s.alpha, s.c, 0.0)?
                .with_run_length(burn_in, samples);
            ladder.thin = thin;
            ladder.p_ee = s.p_ee;
            ladder.kernel = s.kernel.into();
            ladder.initial_step = match &s.initial_step {
                Some(steps) if steps.len() == s.chains => steps.clone(),
                Some(_) => return Err(config_error("initial_step needs one value per chain")),
                None => ladder.temperature.iter().map(|t| 5e-4 * s.step_scale * t.sqrt()).collect(),
            };
            ladder.validate()?;
            Plan::Mintee(Box::new(ladder))
        }
    };
    let needs_gradient = match &plan {
        Plan::Mint(c) => c.proposal.needs_gradient(),
        Plan::Mh(c) => c.proposal.needs_gradient(),
        Plan::Sgld(_) => true,
        Plan::Mintee(l) => l.kernel == ProposalKind::Langevin,
    };
    if needs_gradient && !has_gradient {
        return Err(mint_core::Error::GradientUnavailable.into());
    }
    if let InitSpec::Point { theta } = &config.init {
        if theta.len() != dim {
            return Err(config_error(format!("init point has {} coordinates, model has {dim}", theta.len())));
        }
    }
    Ok(plan)
}

fn tuning(config: &ExperimentConfig) -> Option<&TuneSpec> {
    match config.sampler {
        SamplerKind::Mint => config.mint.proposal.tune.as_ref(),
        SamplerKind::Mh => config.mh.proposal.tune.as_ref(),
        SamplerKind::TemperedMh => config.tempered_mh.proposal.tune.as_ref(),
        _ => None,
    }
}

/// Pilot run on its own random stream: after each window the log step moves
/// by the gap between observed and target acceptance. Returns the final
/// step and the evaluations spent.
fn tune_step<M: Model>(
    model: &M,
    data: &Dataset<M::Point>,
    plan: &Plan,
    spec: &TuneSpec,
    start: f64,
    init: &ParameterVector,
    rng: &RngStream,
) -> Result<(f64, u64)> {
    let mut posterior = Posterior::new(model, data);
    let mut rng = rng.substream(TUNE_STREAM);
    let mut step = start;
    let mut state = plan.with_step(step).init(&mut posterior, init.clone(), &rng)?;
    for _ in 0..spec.rounds {
        let current = plan.with_step(step);
        let mut accepted = 0usize;
        for _ in 0..spec.window {
            current.step(&mut posterior, &mut state, &mut rng)?;
            accepted += state.accepted as usize;
        }
        let rate = accepted as f64 / spec.window as f64;
        step *= (rate - spec.target).exp();
        log::debug!("tuning: acceptance {rate:.3}, step {step:.4e}");
    }
    Ok((step, posterior.evaluations()))
}

fn random_starts(dim: usize, count: usize, rng: &RngStream) -> Result<Vec<ParameterVector>> {
    let mut r = rng.substream(INIT_STREAM);
    (0..count.max(1))
        .map(|_| ParameterVector::new((0..dim).map(|_| r.standard_normal()).collect()))
        .collect::<mint_core::Result<_>>()
        .map_err(Into::into)
}

struct Pilot {
    min_energy: f64,
    argmin: ParameterVector,
    evaluations: u64,
}

struct Runner<'a, M: Generative> {
    config: &'a ExperimentConfig,
    model: &'a M,
    data: &'a Dataset<M::Point>,
    rng: RngStream,
    pilot: Option<Pilot>,
}

impl<'a, M: Generative> Runner<'a, M> {
    fn theta_star(&self) -> Result<ParameterVector> {
        let star = self.config.theta_star().ok_or_else(|| config_error("no generating parameter is known"))?;
        let star = ParameterVector::new(star.to_vec())?;
        star.check_dim(self.model.dim())?;
        Ok(star)
    }

    fn pilot(&mut self) -> Result<&Pilot> {
        if self.pilot.is_none() {
            let starts = random_starts(self.model.dim(), self.config.mintee.pilot_restarts, &self.rng)?;
            let (min_energy, evaluations, argmin) =
                pilot_min_energy(self.model, self.data, &starts, self.config.mintee.pilot_iterations, &self.rng)?;
            self.pilot = Some(Pilot {
                min_energy,
                argmin,
                evaluations,
            });
        }
        Ok(self.pilot.as_ref().expect("set above"))
    }

    fn init(&mut self) -> Result<ParameterVector> {
        let dim = self.model.dim();
        Ok(match &self.config.init {
            InitSpec::Zeros => ParameterVector::zeros(dim),
            InitSpec::ThetaStar => self.theta_star()?,
            InitSpec::Point { theta } => ParameterVector::new(theta.clone())?,
            InitSpec::Mode { index } => {
                let modes = self.model.true_modes(&self.theta_star()?)?;
                modes
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| config_error(format!("mode {index} requested but the model has {}", modes.len())))?
            }
            InitSpec::PilotOptimum => self.pilot()?.argmin.clone(),
        })
    }

    fn energy_floor(&mut self, ladder: &LadderConfig) -> Result<f64> {
        Ok(match self.config.mintee.energy_floor {
            EnergyFloorSpec::Pilot => default_energy_floor(self.pilot()?.min_energy, ladder),
            EnergyFloorSpec::ThetaStar => {
                let star = self.theta_star()?;
                let mut p = Posterior::new(self.model, self.data);
                -(p.n() as f64) * p.full_mean_loglik(&star)? - p.log_prior(&star)
            }
            EnergyFloorSpec::Value { h0 } => h0,
        })
    }

    fn run(mut self, plan: Plan, out_dir: &Path) -> Result<(RunRecord, Option<MinteeRun>)> {
        let init = self.init()?;
        let n = self.data.len();
        let dim = self.model.dim();
        let mut posterior = Posterior::new(self.model, self.data);
        let mut tune_evaluations = 0;
        let (plan, step) = match (&plan, tuning(self.config)) {
            (Plan::Mint(c), Some(spec)) => {
                let (s, e) = tune_step(self.model, self.data, &plan, spec, c.proposal.step, &init, &self.rng)?;
                tune_evaluations = e;
                (plan.with_step(s), Some(s))
            }
            (Plan::Mh(c), Some(spec)) => {
                let (s, e) = tune_step(self.model, self.data, &plan, spec, c.proposal.step, &init, &self.rng)?;
                tune_evaluations = e;
                (plan.with_step(s), Some(s))
            }
            (Plan::Mint(c), None) => (plan.clone(), Some(c.proposal.step)),
            (Plan::Mh(c), None) => (plan.clone(), Some(c.proposal.step)),
            _ => (plan.clone(), None),
        };
        let mut rng = self.rng.clone();
        let mut mintee = None;
        let (run, target_temperature) = match &plan {
            Plan::Mint(c) => (run_mint(&mut posterior, c, init.clone(), &mut rng)?, c.temperature()),
            Plan::Mh(c) => (run_mh(&mut posterior, c, init.clone(), &mut rng)?, c.temperature),
            Plan::Sgld(c) => (run_sgld(&mut posterior, c, init.clone(), &mut rng)?, 1.0),
            Plan::Mintee(ladder) => {
                let mut ladder = (**ladder).clone();
                let h0 = self.energy_floor(&ladder)?;
                ladder.set_energy_floor(h0);
                let inits = [init.clone()];
                let result = if self.config.mintee.parallel_chains {
                    run_mintee_parallel(self.model, self.data, &ladder, &inits, &self.rng)?
                } else {
                    run_mintee(self.model, self.data, &ladder, &inits, &self.rng)?
                };
                let chain0 = result.posterior_samples().clone();
                mintee = Some(result);
                (chain0, 1.0)
            }
        };
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        write_samples(&out_dir.join(SAMPLES_FILE), &run, dim)?;
        let pilot_evaluations = tune_evaluations + self.pilot.as_ref().map_or(0, |p| p.evaluations);
        let record = RunRecord {
            config: self.config.clone(),
            n,
            dim,
            target_temperature,
            init: init.into_inner(),
            step,
            samples_written: run.len(),
            proposals: run.proposals,
            acceptances: run.acceptances,
            burn_in_evaluations: run.burn_in_evaluations,
            evaluations_total: mintee.as_ref().map_or(run.total_evaluations, |m| m.total_evaluations),
            pilot_evaluations,
            mintee: mintee.as_ref().map(|m| mintee_record(m, self.pilot.as_ref(), self.config.mintee.parallel_chains)),
        };
        let path = out_dir.join(RUN_FILE);
        let text = serde_json::to_string_pretty(&record).expect("record serialises");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok((record, mintee))
    }
}

fn mintee_record(run: &MinteeRun, pilot: Option<&Pilot>, parallel: bool) -> MinteeRecord {
    let l = &run.ladder;
    MinteeRecord {
        temperatures: l.temperature.clone(),
        batch_sizes: l.m.clone(),
        lambdas: l.lambda.clone(),
        energies: l.energy.clone(),
        initial_steps: l.initial_step.clone(),
        final_steps: run.final_steps.clone(),
        ring_counts: run.ring_counts.clone(),
        stats: run.stats.iter().copied().map(Into::into).collect(),
        chain_evaluations: run.chain_evaluations.clone(),
        window_evaluations: run.window_evaluations,
        pilot_min_energy: pilot.map(|p| p.min_energy),
        parallel,
    }
}

/// Where a run writes its files: the explicit directory, else the config's
/// `out`, else `runs/<sampler>-<seed>`.
pub fn output_dir(config: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", config.sampler.name(), config.seed)))
}

/// Validates every setting against the data before sampling, then runs.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    config.validate()?;
    let workload = load_workload(config)?;
    let mut resolved = config.clone();
    resolved.resolve(workload.n())?;
    let rng = RngStream::new(resolved.seed, 0);
    let (record, mintee) = match &workload {
        Workload::Scalar { model, data } => {
            let plan = plan(&resolved, data.len(), model.dim(), model.has_gradient())?;
            Runner {
                config: &resolved,
                model,
                data,
                rng,
                pilot: None,
            }
            .run(plan, out_dir)?
        }
        Workload::Logistic { model, data, .. } => {
            let plan = plan(&resolved, data.len(), model.dim(), model.has_gradient())?;
            Runner {
                config: &resolved,
                model,
                data,
                rng,
                pilot: None,
            }
            .run(plan, out_dir)?
        }
    };
    let diagnostics = diagnose(out_dir)?;
    Ok(Outcome {
        out_dir: out_dir.to_path_buf(),
        record,
        diagnostics,
        mintee,
    })
}
