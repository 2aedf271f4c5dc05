use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mint::config::{DataSpec, ExperimentConfig, SamplerKind};
use mint::data::{write_labeled_csv, write_scalar_csv};
use mint::workload::{load_workload, Workload};
use mint::{diagnose, output_dir, run_experiment, Error};
use mint_core::diagnostics::normality_report;
use mint_core::{Model, ParameterVector, Posterior, RngStream};

#[derive(Parser)]
#[command(name = "mint", version, about = "Mini-batch tempered MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler named in the config.
    Run(RunArgs),
    RunMint(RunArgs),
    RunMh(RunArgs),
    RunTempered(RunArgs),
    RunSgld(RunArgs),
    RunMintee(RunArgs),
    /// Write the config's generated dataset to a CSV file.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the test set instead of the training set.
        #[arg(long)]
        test: bool,
    },
    /// Recompute diagnostics for a finished run directory.
    Diagnose { dir: PathBuf },
    /// Distribution of the mini-batch t-statistic at one parameter value.
    Normality {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 5000)]
        draws: usize,
        /// Comma-separated parameter; defaults to the generating one.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    parallel_chains: bool,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn run(args: RunArgs, sampler: Option<SamplerKind>) -> Result<(), Error> {
    let mut config = load(&args.config, args.seed)?;
    if let Some(s) = sampler {
        config.sampler = s;
    }
    if let Some(v) = args.samples {
        config.samples = v;
    }
    if let Some(v) = args.burn_in {
        config.burn_in = v;
    }
    if let Some(v) = args.thin {
        config.thin = v;
    }
    config.mintee.parallel_chains |= args.parallel_chains;
    let dir = output_dir(&config, args.out.as_deref());
    let outcome = run_experiment(&config, &dir)?;
    let d = &outcome.diagnostics;
    println!(
        "{}: {} samples, acceptance {:.3}, {} evaluations -> {}",
        d.sampler,
        d.samples,
        d.acceptance_rate,
        d.evaluations_total,
        dir.display()
    );
    Ok(())
}

fn gen_data(config: PathBuf, out: PathBuf, seed: Option<u64>, test: bool) -> Result<(), Error> {
    let mut config = ExperimentConfig::load(&config)?;
    config.validate()?;
    if test {
        config.data = config
            .test_data
            .clone()
            .ok_or_else(|| Error::Config("config has no test_data section".into()))?;
        config.test_data = None;
    }
    match &mut config.data {
        DataSpec::Generate { seed: s, .. } => {
            if let Some(v) = seed {
                *s = v;
            }
        }
        _ => return Err(Error::Config("gen-data needs a generated dataset".into())),
    }
    // a test set is generated on its own stream, so load it the same way a run would
    let workload = if test {
        let mut full = config.clone();
        full.test_data = Some(config.data.clone());
        load_workload(&full).map(|w| match w {
            Workload::Logistic { model, test, .. } => Workload::Logistic {
                model,
                data: mint_core::Dataset::new(test.expect("requested above")).expect("non-empty"),
                test: None,
            },
            scalar => scalar,
        })?
    } else {
        load_workload(&config)?
    };
    match &workload {
        Workload::Scalar { data, .. } => write_scalar_csv(&out, "x", data.points())?,
        Workload::Logistic { data, .. } => write_labeled_csv(&out, data.points())?,
    }
    println!("wrote {} rows to {}", workload.n(), out.display());
    Ok(())
}

fn normality<M: Model>(
    model: &M,
    data: &mint_core::Dataset<M::Point>,
    theta: ParameterVector,
    m: usize,
    draws: usize,
    seed: u64,
) -> Result<serde_json::Value, Error> {
    let mut posterior = Posterior::new(model, data);
    let mut rng = RngStream::new(seed, 0);
    let r = normality_report(&mut posterior, &theta, m, draws, &mut rng)?;
    Ok(json!({
        "m": m,
        "draws": r.draws,
        "mean": r.mean,
        "sd": r.sd,
        "skewness": r.skewness,
        "excess_kurtosis": r.excess_kurtosis,
        "ks": r.ks,
        "degenerate": r.degenerate,
        "passes": r.passes(),
    }))
}

fn run_normality(config: PathBuf, m: usize, draws: usize, theta: Option<Vec<f64>>, seed: Option<u64>) -> Result<(), Error> {
    let config = load(&config, seed)?;
    config.validate()?;
    let theta = match theta.or_else(|| config.theta_star().map(<[f64]>::to_vec)) {
        Some(t) => ParameterVector::new(t)?,
        None => return Err(Error::Config("give --theta or a config with a generating parameter".into())),
    };
    let workload = load_workload(&config)?;
    theta.check_dim(workload.dim())?;
    let report = match &workload {
        Workload::Scalar { model, data } => normality(model, data, theta, m, draws, config.seed)?,
        Workload::Logistic { model, data, .. } => normality(model, data, theta, m, draws, config.seed)?,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a, None),
        Command::RunMint(a) => run(a, Some(SamplerKind::Mint)),
        Command::RunMh(a) => run(a, Some(SamplerKind::Mh)),
        Command::RunTempered(a) => run(a, Some(SamplerKind::TemperedMh)),
        Command::RunSgld(a) => run(a, Some(SamplerKind::Sgld)),
        Command::RunMintee(a) => run(a, Some(SamplerKind::Mintee)),
        Command::GenData { config, out, seed, test } => gen_data(config, out, seed, test),
        Command::Diagnose { dir } => diagnose(&dir).map(|d| {
            println!("{}", serde_json::to_string_pretty(&d).expect("json"));
        }),
        Command::Normality {
            config,
            m,
            draws,
            theta,
            seed,
        } => run_normality(config, m, draws, theta, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
