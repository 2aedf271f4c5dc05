//! JSON experiment configuration. Every section has defaults; `resolve`
//! fills in the values that depend on the dataset size so the echoed config
//! fully describes the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mint_core::mint::tau_from_batch;

use crate::error::{config_error, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub test_data: Option<DataSpec>,
    pub sampler: SamplerKind,
    #[serde(default)]
    pub mint: MintSection,
    #[serde(default)]
    pub mh: MhSection,
    #[serde(default)]
    pub tempered_mh: TemperedSection,
    #[serde(default)]
    pub sgld: SgldSection,
    #[serde(default)]
    pub mintee: MinteeSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

fn default_samples() -> usize {
    1000
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TiedMeans {
        #[serde(default = "ten")]
        sigma1_sq: f64,
        #[serde(default = "one_f")]
        sigma2_sq: f64,
        #[serde(default = "two")]
        sigmax_sq: f64,
    },
    GaussianLocation,
    SymmetricMixture {
        #[serde(default = "ten_usize")]
        d: usize,
    },
    /// `features` raw inputs; a bias weight is added on top.
    Logistic {
        features: usize,
        #[serde(default)]
        prior_variance: Option<f64>,
        #[serde(default)]
        design: DesignSpec,
    },
}

fn ten() -> f64 {
    10.0
}

fn one_f() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn ten_usize() -> usize {
    10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    #[default]
    Gaussian,
    Clustered { separation: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Generate {
        n: usize,
        theta_star: Vec<f64>,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        /// Header of a one-column file; ignored for labelled data.
        #[serde(default = "default_column")]
        column: String,
    },
    Idx { images: PathBuf, labels: PathBuf, digits: [u8; 2] },
}

fn default_column() -> String {
    "x".into()
}

impl DataSpec {
    pub fn theta_star(&self) -> Option<&[f64]> {
        match self {
            DataSpec::Generate { theta_star, .. } => Some(theta_star),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Mint,
    Mh,
    TemperedMh,
    Sgld,
    Mintee,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Mint => "mint",
            SamplerKind::Mh => "mh",
            SamplerKind::TemperedMh => "tempered-mh",
            SamplerKind::Sgld => "sgld",
            SamplerKind::Mintee => "mintee",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    RandomWalk,
    Langevin,
}

impl From<KernelKind> for mint_core::proposals::ProposalKind {
    fn from(k: KernelKind) -> Self {
        match k {
            KernelKind::RandomWalk => Self::RandomWalk,
            KernelKind::Langevin => Self::Langevin,
        }
    }
}

/// Pilot tuning: the step is scaled by the acceptance-rate error over short
/// windows before the chain proper starts; the main run uses a fixed step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_target() -> f64 {
    0.3
}

fn default_rounds() -> usize {
    40
}

fn default_window() -> usize {
    200
}

impl Default for TuneSpec {
    fn default() -> Self {
        Self {
            target: default_target(),
            rounds: default_rounds(),
            window: default_window(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalSection {
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub tune: Option<TuneSpec>,
}

fn default_step() -> f64 {
    0.1
}

impl Default for ProposalSection {
    fn default() -> Self {
        Self {
            kernel: KernelKind::RandomWalk,
            step: default_step(),
            tune: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleSpec {
    #[default]
    Corrected,
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MintSection {
    #[serde(default = "default_batch")]
    pub m: usize,
    /// Defaults to `alpha·τ`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub scale: ScaleSpec,
    #[serde(default)]
    pub proposal: ProposalSection,
}

fn default_batch() -> usize {
    100
}

fn default_alpha() -> f64 {
    0.99
}

impl Default for MintSection {
    fn default() -> Self {
        Self {
            m: default_batch(),
            lambda: None,
            alpha: default_alpha(),
            scale: ScaleSpec::Corrected,
            proposal: ProposalSection::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhSection {
    #[serde(default)]
    pub proposal: ProposalSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperedSection {
    /// Defaults to `n^(1−λ)` with the MINT section's λ.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub proposal: ProposalSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant { step: f64 },
    Polynomial { a: f64, b: f64, gamma: f64 },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Polynomial {
            a: 0.01,
            b: 100.0,
            gamma: 1.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgldSection {
    #[serde(default = "default_batch")]
    pub m: usize,
    #[serde(default)]
    pub schedule: ScheduleSpec,
}

impl Default for SgldSection {
    fn default() -> Self {
        Self {
            m: default_batch(),
            schedule: ScheduleSpec::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyFloorSpec {
    /// Pilot minimum energy less `2·c·T_0`.
    #[default]
    Pilot,
    /// Energy at the generating parameter.
    ThetaStar,
    Value { h0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinteeSection {
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Defaults to the largest `m` with `m·γ^(K−1) ≤ n`.
    #[serde(default)]
    pub m_min: Option<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_mintee_alpha")]
    pub alpha: f64,
    #[serde(default = "ten")]
    pub c: f64,
    #[serde(default = "default_p_ee")]
    pub p_ee: f64,
    #[serde(default = "langevin")]
    pub kernel: KernelKind,
    /// Initial steps are `5e-4 · step_scale · √T_k` unless given per chain.
    #[serde(default = "one_f")]
    pub step_scale: f64,
    #[serde(default)]
    pub initial_step: Option<Vec<f64>>,
    #[serde(default)]
    pub energy_floor: EnergyFloorSpec,
    #[serde(default = "default_pilot_iterations")]
    pub pilot_iterations: usize,
    #[serde(default = "default_pilot_restarts")]
    pub pilot_restarts: usize,
    #[serde(default)]
    pub parallel_chains: bool,
}

fn default_chains() -> usize {
    5
}

fn default_gamma() -> f64 {
    1.4
}

fn default_mintee_alpha() -> f64 {
    0.995
}

fn default_p_ee() -> f64 {
    0.1
}

fn langevin() -> KernelKind {
    KernelKind::Langevin
}

fn default_pilot_iterations() -> usize {
    200
}

fn default_pilot_restarts() -> usize {
    5
}

impl Default for MinteeSection {
    fn default() -> Self {
        Self {
            chains: default_chains(),
            m_min: None,
            gamma: default_gamma(),
            alpha: default_mintee_alpha(),
            c: ten(),
            p_ee: default_p_ee(),
            kernel: KernelKind::Langevin,
            step_scale: 1.0,
            initial_step: None,
            energy_floor: EnergyFloorSpec::Pilot,
            pilot_iterations: default_pilot_iterations(),
            pilot_restarts: default_pilot_restarts(),
            parallel_chains: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zeros,
    ThetaStar,
    Point {
        theta: Vec<f64>,
    },
    /// One of the catalogued modes of the generating parameter.
    Mode {
        index: usize,
    },
    /// Best point of a short full-batch ascent from random starts.
    PilotOptimum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Defaults to `0.01·√(10⁶/n)`.
    #[serde(default)]
    pub mode_radius: Option<f64>,
    #[serde(default = "default_pair")]
    pub mode_pair: [usize; 2],
    /// Nearest-mode assignment when absent.
    #[serde(default)]
    pub assign_radius: Option<f64>,
    #[serde(default = "ten_usize")]
    pub test_thin: usize,
    /// Mode catalogue source for data that were not generated.
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub ks_grid_points: usize,
}

fn default_pair() -> [usize; 2] {
    [0, 1]
}

fn default_grid() -> usize {
    4001
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            mode_radius: None,
            mode_pair: default_pair(),
            assign_radius: None,
            test_thin: ten_usize(),
            theta_star: None,
            ks_grid_points: default_grid(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Parameter used for mode catalogues and `θ*`-based settings.
    pub fn theta_star(&self) -> Option<&[f64]> {
        self.diagnostics.theta_star.as_deref().or_else(|| self.data.theta_star())
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(config_error("thin must be at least 1"));
        }
        if let ModelSpec::SymmetricMixture { d: 0 } = self.model {
            return Err(config_error("symmetric mixture needs d ≥ 1"));
        }
        if let DataSpec::Generate { n: 0, .. } = self.data {
            return Err(config_error("generated datasets need n ≥ 1"));
        }
        for proposal in [&self.mint.proposal, &self.mh.proposal, &self.tempered_mh.proposal] {
            if !(proposal.step > 0.0 && proposal.step.is_finite()) {
                return Err(config_error("proposal step must be positive"));
            }
            if let Some(t) = &proposal.tune {
                if !(t.target > 0.0 && t.target < 1.0) || t.window == 0 {
                    return Err(config_error("tuning needs a target in (0, 1) and a positive window"));
                }
            }
        }
        if self.diagnostics.mode_pair[0] == self.diagnostics.mode_pair[1] {
            return Err(config_error("mode_pair must name two different modes"));
        }
        if self.diagnostics.ks_grid_points < 2 {
            return Err(config_error("ks_grid_points must be at least 2"));
        }
        if self.mintee.chains == 0 {
            return Err(config_error("mintee needs at least one chain"));
        }
        if matches!(self.mintee.energy_floor, EnergyFloorSpec::ThetaStar) && self.theta_star().is_none() {
            return Err(config_error("energy_floor theta_star needs a generating parameter"));
        }
        Ok(())
    }

    /// Fills size-dependent defaults. Constraint checks that involve `n`
    /// happen when the samplers are configured.
    pub fn resolve(&mut self, n: usize) -> Result<()> {
        let tempered = matches!(self.sampler, SamplerKind::Mint | SamplerKind::TemperedMh);
        if tempered && self.mint.lambda.is_none() {
            let tau = tau_from_batch(self.mint.m, n)?;
            self.mint.lambda = Some(self.mint.alpha * tau);
        }
        if self.sampler == SamplerKind::TemperedMh && self.tempered_mh.temperature.is_none() {
            let lambda = self.mint.lambda.expect("resolved above");
            self.tempered_mh.temperature = Some((n as f64).powf(1.0 - lambda));
        }
        if self.mintee.m_min.is_none() && self.mintee.chains > 1 {
            let span = self.mintee.gamma.powi(self.mintee.chains as i32 - 1);
            self.mintee.m_min = Some((n as f64 / span).floor() as usize);
        }
        if self.diagnostics.mode_radius.is_none() {
            self.diagnostics.mode_radius = Some(mint_core::diagnostics::scaled_radius(1e-2, 1e6, n as f64));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"kind": "tied_means"},
        "data": {"source": "generate", "n": 100, "theta_star": [0, 1]},
        "sampler": "mint"
    }"#;

    #[test]
    fn defaults_expand_and_round_trip() {
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(
            config.model,
            ModelSpec::TiedMeans {
                sigma1_sq: 10.0,
                sigma2_sq: 1.0,
                sigmax_sq: 2.0
            }
        );
        assert_eq!(config.mintee.p_ee, 0.1);
        assert_eq!(config.mintee.c, 10.0);
        config.resolve(10_000).unwrap();
        assert!((config.mint.lambda.unwrap() - 0.99 * 0.5).abs() < 1e-12);
        assert_eq!(config.mintee.m_min, Some(2603));
        assert!((config.diagnostics.mode_radius.unwrap() - 0.1).abs() < 1e-12);
        let echoed = ExperimentConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(echoed, config);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"sampler\"", "\"bogus\": 1, \"sampler\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = MINIMAL.replace("\"kind\": \"tied_means\"", "\"kind\": \"tied_means\", \"sigma\": 3");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn sampler_names_are_kebab_case() {
        let text = MINIMAL.replace("\"mint\"", "\"tempered-mh\"");
        assert_eq!(ExperimentConfig::from_json(&text).unwrap().sampler, SamplerKind::TemperedMh);
    }

    #[test]
    fn structural_errors() {
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        config.thin = 0;
        assert!(config.validate().unwrap_err().is_validation());
        let mut config = ExperimentConfig::from_json(MINIMAL).unwrap();
        config.diagnostics.mode_pair = [1, 1];
        assert!(config.validate().is_err());
    }
}
