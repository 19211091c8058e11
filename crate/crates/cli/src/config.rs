//! Run configuration, read from a TOML file and overridden by flags.
//!
//! ```toml
//! kind = "ecs"              # ecs | evolve | entropy | wigner | feasibility | validate
//! angular = true            # read plain Hz literals as rad/s
//!
//! [params]
//! lambda = "3e5Hz"          # number (rad/s) or frequency literal
//! delta = 3.75e6
//! omega_rabi = "3e5Hz"
//! n_atoms = 1
//!
//! [state]
//! alpha = "3"
//! beta = "2"
//! atoms = "plus"            # ground | excited | plus | minus
//!
//! [schedule]
//! r = 2
//! s = 3
//!
//! [time]
//! t_max = 0.5
//! points = 200
//! unit = "tau_mu"           # seconds | tau_mu
//!
//! [truncation]
//! n_max_a = "auto"          # integer or "auto"
//! n_max_b = 40
//!
//! [grid]
//! half_width = 8.0
//! points = 161
//! threshold = 0.1
//!
//! [output]
//! dir = "out"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bimodal_core::hamiltonian::PhysicalParams;
use bimodal_core::hilbert::{auto_cutoff, AtomicState};
use bimodal_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::freq::{parse_complex, parse_frequency};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Ecs,
    Evolve,
    Entropy,
    Wigner,
    Feasibility,
    Validate,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// A number in rad/s or a frequency literal such as `"2pi*47kHz"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Value(f64),
    Literal(String),
}

impl Frequency {
    pub fn resolve(&self, angular: bool) -> Result<f64, CliError> {
        match self {
            Frequency::Value(v) => Ok(*v),
            Frequency::Literal(s) => parse_frequency(s, angular),
        }
    }
}

/// A real number or a complex literal such as `"1+2i"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Real(f64),
    Literal(String),
}

impl Complex {
    pub fn resolve(&self) -> Result<C64, CliError> {
        match self {
            Complex::Real(v) => Ok(C64::from(*v)),
            Complex::Literal(s) => parse_complex(s),
        }
    }
}

/// Fock cutoff for one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TruncationRepr", into = "TruncationRepr")]
pub enum Truncation {
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TruncationRepr {
    Fixed(usize),
    Word(String),
}

impl TryFrom<TruncationRepr> for Truncation {
    type Error = String;
    fn try_from(r: TruncationRepr) -> Result<Self, String> {
        match r {
            TruncationRepr::Fixed(n) => Ok(Truncation::Fixed(n)),
            TruncationRepr::Word(w) => w.parse(),
        }
    }
}

impl From<Truncation> for TruncationRepr {
    fn from(t: Truncation) -> Self {
        match t {
            Truncation::Auto => TruncationRepr::Word("auto".into()),
            Truncation::Fixed(n) => TruncationRepr::Fixed(n),
        }
    }
}

impl FromStr for Truncation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Truncation::Auto);
        }
        s.parse().map(Truncation::Fixed).map_err(|_| format!("expected an integer or \"auto\", got {s:?}"))
    }
}

impl Truncation {
    /// Cutoff for a mode whose photon number is Poisson with `mean`.
    pub fn resolve(self, mean: f64) -> usize {
        match self {
            Truncation::Auto => auto_cutoff(mean),
            Truncation::Fixed(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: Frequency,
    pub delta: Frequency,
    pub omega_rabi: Frequency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Frequency>,
    #[serde(default = "one")]
    pub n_atoms: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomPrep {
    Ground,
    Excited,
    Plus,
    Minus,
}

impl From<AtomPrep> for AtomicState {
    fn from(p: AtomPrep) -> Self {
        match p {
            AtomPrep::Ground => AtomicState::Ground,
            AtomPrep::Excited => AtomicState::Excited,
            AtomPrep::Plus => AtomicState::Plus,
            AtomPrep::Minus => AtomicState::Minus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub alpha: Complex,
    pub beta: Complex,
    pub atoms: AtomPrep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub r: u64,
    pub s: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    TauMu,
}

/// `points` samples from 0 to `t_max`, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
    pub unit: TimeUnit,
}

impl TimeGrid {
    pub fn times(&self, tau_mu: f64) -> Result<Vec<f64>, CliError> {
        if self.points == 0 {
            return Err(CliError::Validation("time grid has zero length".into()));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(CliError::Validation(format!("t_max must be finite and non-negative, got {}", self.t_max)));
        }
        let scale = match self.unit {
            TimeUnit::Seconds => 1.0,
            TimeUnit::TauMu => tau_mu,
        };
        let end = self.t_max * scale;
        if self.points == 1 {
            return Ok(vec![end]);
        }
        Ok((0..self.points).map(|k| end * k as f64 / (self.points - 1) as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub n_max_a: Truncation,
    pub n_max_b: Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    /// Packet threshold as a fraction of the grid maximum.
    pub threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 8.0, points: 161, threshold: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Time-dependent N-atom interaction Hamiltonian.
    Exact,
    BeamSplitter,
    Qbs,
    /// `N·μO²`, with `N` from `params.n_atoms`.
    Aqbs,
    /// `μO²J̃_z` with the atoms.
    ManyAtomEffective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Experiment,
    #[serde(default = "yes")]
    pub angular: bool,
    /// Reserved; every command is deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u32>,
    /// Snapshot times `τ_μ/k` for `wigner`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<u64>,
    /// `Δ/λ` sweep for `validate`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detunings: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    /// Fixed RK4 step in seconds; the default follows the generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub params: ParamsConfig,
    pub state: StateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeGrid>,
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub output: OutputConfig,
}

fn yes() -> bool {
    true
}

/// Second-stage example in units of `λ`: `Δ = 12.5λ`, `Ω = λ`.
fn unit_params(n_atoms: usize) -> ParamsConfig {
    ParamsConfig {
        lambda: Frequency::Value(1.0),
        delta: Frequency::Value(12.5),
        omega_rabi: Frequency::Value(1.0),
        epsilon: None,
        n_atoms,
    }
}

fn state(alpha: &str, beta: &str, atoms: AtomPrep) -> StateConfig {
    StateConfig { alpha: Complex::Literal(alpha.into()), beta: Complex::Literal(beta.into()), atoms }
}

fn cutoff(n: Truncation) -> TruncationConfig {
    TruncationConfig { n_max_a: n, n_max_b: n }
}

impl RunConfig {
    /// Defaults that reproduce the reference figure or table for each command.
    pub fn preset(kind: Experiment) -> Self {
        let base = RunConfig {
            kind,
            angular: true,
            seed: None,
            params: unit_params(1),
            state: state("3", "2", AtomPrep::Plus),
            schedule: None,
            time: None,
            truncation: cutoff(Truncation::Auto),
            grid: GridConfig::default(),
            snapshots: Vec::new(),
            detunings: Vec::new(),
            model: None,
            dt: None,
            output: OutputConfig { dir: PathBuf::from("out") },
        };
        match kind {
            Experiment::Ecs => RunConfig {
                schedule: Some(ScheduleConfig { r: 2, s: 3 }),
                truncation: cutoff(Truncation::Fixed(40)),
                ..base
            },
            Experiment::Wigner => RunConfig {
                state: state("3", "0", AtomPrep::Plus),
                snapshots: vec![107, 61, 37, 17, 11, 7, 5, 3],
                ..base
            },
            Experiment::Entropy => RunConfig {
                params: ParamsConfig {
                    lambda: Frequency::Literal("3e5Hz".into()),
                    delta: Frequency::Literal("3.75e6Hz".into()),
                    omega_rabi: Frequency::Literal("3e5Hz".into()),
                    epsilon: None,
                    n_atoms: 3,
                },
                state: state("1", "i", AtomPrep::Plus),
                time: Some(TimeGrid { t_max: 0.5, points: 200, unit: TimeUnit::TauMu }),
                truncation: cutoff(Truncation::Fixed(8)),
                ..base
            },
            Experiment::Evolve => RunConfig {
                state: state("1", "0.5", AtomPrep::Ground),
                time: Some(TimeGrid { t_max: 1.0, points: 101, unit: TimeUnit::TauMu }),
                truncation: cutoff(Truncation::Fixed(12)),
                model: Some(Model::Qbs),
                ..base
            },
            Experiment::Validate => RunConfig {
                params: unit_params(2),
                state: state("1", "i", AtomPrep::Plus),
                time: Some(TimeGrid { t_max: 0.2, points: 11, unit: TimeUnit::TauMu }),
                truncation: cutoff(Truncation::Fixed(8)),
                detunings: vec![10.0, 20.0, 40.0],
                ..base
            },
            Experiment::Feasibility => base,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.params;
        let mut out = PhysicalParams::new(
            p.lambda.resolve(self.angular)?,
            p.delta.resolve(self.angular)?,
            p.omega_rabi.resolve(self.angular)?,
        )
        .with_atoms(p.n_atoms);
        if let Some(eps) = &p.epsilon {
            out = out.with_epsilon(eps.resolve(self.angular)?);
        }
        Ok(out)
    }

    pub fn alpha(&self) -> Result<C64, CliError> {
        self.state.alpha.resolve()
    }

    pub fn beta(&self) -> Result<C64, CliError> {
        self.state.beta.resolve()
    }

    /// Cutoffs for modes A and B given their mean photon numbers.
    pub fn cutoffs(&self, mean_a: f64, mean_b: f64) -> (usize, usize) {
        (self.truncation.n_max_a.resolve(mean_a), self.truncation.n_max_b.resolve(mean_b))
    }

    pub fn schedule(&self) -> Result<ScheduleConfig, CliError> {
        self.schedule.ok_or_else(|| CliError::Validation("this command needs [schedule] r and s".into()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        self.time.ok_or_else(|| CliError::Validation("this command needs a [time] grid".into()))
    }
}
