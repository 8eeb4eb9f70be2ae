//! JSON run configuration.
//!
//! ```json
//! {
//!   "potential": { "slow_roll": { "a": 5.0, "lambda": 0.01 } },
//!   "basis": { "n_basis": [6, 8, 10], "omega": "pms", "sigma": 0.0 },
//!   "evolution": { "m_init": "ground-of-harmonic",
//!                  "times": { "start": 0.0, "stop": 30.0, "step": 0.05 } },
//!   "oracle": { "half_width": 15.0, "n_points": 3000, "dt": 0.002 },
//!   "output": { "dir": "out" }
//! }
//! ```
//!
//! Every section is optional; the defaults describe the slow-roll run above.

use std::path::{Path, PathBuf};

use pmsqm::basis::PolynomialPotential;
use pmsqm::evolution::time_grid;
use pmsqm::oracle::GridSpec;
use pmsqm::pms::DEFAULT_OMEGA_BOUNDS;
use pmsqm::spectrum::{OmegaMode, SigmaMode};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `p^2/2 + lambda (x^2 - a^2)^2 / 24`.
    SlowRoll { a: f64, lambda: f64 },
    /// `p^2 + x^2 + 2 g x^4`.
    Quartic { g: f64 },
    /// `p^2/2 + omega^2 x^2 / 2`.
    Harmonic { omega: f64 },
    /// `kinetic p^2 + sum_j v[j] x^j`.
    Coefficients { kinetic: f64, v: Vec<f64> },
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig::SlowRoll {
            a: 5.0,
            lambda: 0.01,
        }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PolynomialPotential, CliError> {
        let built = match self {
            PotentialConfig::SlowRoll { a, lambda } => PolynomialPotential::slow_roll(*a, *lambda),
            PotentialConfig::Quartic { g } => PolynomialPotential::quartic_benchmark(*g),
            PotentialConfig::Harmonic { omega } => PolynomialPotential::harmonic(*omega),
            PotentialConfig::Coefficients { kinetic, v } => {
                PolynomialPotential::new(*kinetic, v.clone())
            }
        };
        built.map_err(|e| CliError::Config(format!("potential: {e}")))
    }
}

/// A number, or one of the named modes.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumberOrName {
    Number(f64),
    Name(String),
}

/// Frequency selection as written in the config or on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaChoice {
    /// Closed form when the potential is an even quartic, numeric otherwise.
    Pms,
    PmsNumeric,
    Fixed(f64),
}

impl OmegaChoice {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "pms" => Ok(OmegaChoice::Pms),
            "pms-numeric" => Ok(OmegaChoice::PmsNumeric),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .map(OmegaChoice::Fixed)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "omega must be 'pms', 'pms-numeric' or a positive number, got '{other}'"
                    ))
                }),
        }
    }

    fn from_config(value: &NumberOrName) -> Result<Self, CliError> {
        match value {
            NumberOrName::Number(w) => OmegaChoice::parse(&w.to_string()),
            NumberOrName::Name(name) => OmegaChoice::parse(name),
        }
    }

    /// Optimizing the center always goes through the numeric search.
    pub fn mode(
        self,
        potential: &PolynomialPotential,
        sigma: SigmaMode,
        bounds: (f64, f64),
    ) -> OmegaMode {
        let centered = sigma == SigmaMode::Fixed(0.0);
        match self {
            OmegaChoice::Pms if centered && potential.as_double_well().is_some() => {
                OmegaMode::PmsClosed
            }
            OmegaChoice::Pms | OmegaChoice::PmsNumeric => OmegaMode::PmsNumeric { bounds },
            OmegaChoice::Fixed(w) => OmegaMode::Fixed(w),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_n_basis")]
    pub n_basis: Vec<usize>,
    #[serde(default = "default_omega")]
    pub omega: NumberOrName,
    /// A fixed center, or `"pms"`.
    #[serde(default = "default_sigma")]
    pub sigma: NumberOrName,
    #[serde(default = "default_bounds")]
    pub omega_bounds: (f64, f64),
    /// Include eigenvectors in the spectrum report.
    #[serde(default)]
    pub eigenvectors: bool,
}

fn default_n_basis() -> Vec<usize> {
    vec![6, 8, 10]
}

fn default_omega() -> NumberOrName {
    NumberOrName::Name("pms".into())
}

fn default_sigma() -> NumberOrName {
    NumberOrName::Number(0.0)
}

fn default_bounds() -> (f64, f64) {
    DEFAULT_OMEGA_BOUNDS
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            n_basis: default_n_basis(),
            omega: default_omega(),
            sigma: default_sigma(),
            omega_bounds: default_bounds(),
            eigenvectors: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TimesConfig {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl TimesConfig {
    /// `START:STOP:STEP`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let numbers: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
        match numbers.as_deref() {
            Some(&[start, stop, step]) => Ok(TimesConfig::Range { start, stop, step }),
            _ => Err(CliError::Config(format!(
                "times must be START:STOP:STEP, got '{text}'"
            ))),
        }
    }

    pub fn samples(&self) -> Result<Vec<f64>, CliError> {
        let times = match self {
            TimesConfig::Range { start, stop, step } => time_grid(*start, *stop, *step)
                .map_err(|e| CliError::Config(format!("times: {e}")))?,
            TimesConfig::List(list) => list.clone(),
        };
        if times.is_empty() {
            return Err(CliError::Config("times: empty time grid".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(CliError::Config(
                "times: samples must be finite and non-negative".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "times: grid must be strictly increasing".into(),
            ));
        }
        Ok(times)
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Width `m` of `exp(-m x^2/2)`, or `"ground-of-harmonic"` for
    /// `m = sqrt(|v2| / kinetic)`.
    #[serde(default = "default_m_init")]
    pub m_init: NumberOrName,
    #[serde(default = "default_times")]
    pub times: TimesConfig,
    /// Also write the grid-propagator reference curve.
    #[serde(default)]
    pub oracle: bool,
}

fn default_m_init() -> NumberOrName {
    NumberOrName::Name("ground-of-harmonic".into())
}

fn default_times() -> TimesConfig {
    TimesConfig::Range {
        start: 0.0,
        stop: 30.0,
        step: 0.05,
    }
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            m_init: default_m_init(),
            times: default_times(),
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub half_width: f64,
    pub n_points: usize,
    pub dt: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let grid = GridSpec::slow_roll_default();
        Self {
            half_width: grid.half_width(),
            n_points: grid.n_points(),
            dt: grid.dt(),
        }
    }
}

impl OracleConfig {
    pub fn grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.half_width, self.n_points, self.dt)
            .map_err(|e| CliError::Config(format!("oracle: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            omega_min: 0.05,
            omega_max: 1.0,
            points: 200,
        }
    }
}

impl ScanConfig {
    /// Uniform grid with `points` samples including both ends.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min && self.omega_max.is_finite())
        {
            return Err(CliError::Config(format!(
                "scan: need 0 < omega_min < omega_max, got {} and {}",
                self.omega_min, self.omega_max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config("scan: need at least two points".into()));
        }
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.omega_min + (self.omega_max - self.omega_min) * i as f64 / last)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Basis size for the spectrum-vs-grid check.
    pub spectrum_n: usize,
    /// Relative tolerance of the spectrum-vs-grid check.
    pub spectrum_tol: f64,
    /// Pair of basis sizes compared in the self-convergence check.
    pub convergence_pair: (usize, usize),
    /// Tolerance on the max `<x^2>^{1/2}` deviation, as a fraction of the
    /// curve's range.
    pub dynamics_tol: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            spectrum_n: 20,
            spectrum_tol: 1e-6,
            convergence_pair: (14, 20),
            dynamics_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn n_basis(&self) -> Result<Vec<usize>, CliError> {
        let mut n = self.basis.n_basis.clone();
        if n.is_empty() || n.contains(&0) {
            return Err(CliError::Config(
                "basis: n_basis must be a non-empty list of positive sizes".into(),
            ));
        }
        n.sort_unstable();
        n.dedup();
        Ok(n)
    }

    pub fn omega_choice(&self) -> Result<OmegaChoice, CliError> {
        OmegaChoice::from_config(&self.basis.omega)
    }

    pub fn sigma_mode(&self) -> Result<SigmaMode, CliError> {
        match &self.basis.sigma {
            NumberOrName::Number(s) if s.is_finite() => Ok(SigmaMode::Fixed(*s)),
            NumberOrName::Name(name) if name == "pms" => Ok(SigmaMode::Pms),
            other => Err(CliError::Config(format!(
                "basis: sigma must be a number or 'pms', got {other:?}"
            ))),
        }
    }

    pub fn m_init(&self, potential: &PolynomialPotential) -> Result<f64, CliError> {
        let m = match &self.evolution.m_init {
            NumberOrName::Number(m) => *m,
            NumberOrName::Name(name) if name == "ground-of-harmonic" => {
                let v2 = potential.coeffs().get(2).copied().unwrap_or(0.0);
                (v2.abs() / potential.kinetic_coeff()).sqrt()
            }
            NumberOrName::Name(name) => {
                return Err(CliError::Config(format!(
                    "evolution: m_init must be a number or 'ground-of-harmonic', got '{name}'"
                )))
            }
        };
        if !(m.is_finite() && m > 0.0) {
            return Err(CliError::Config(format!(
                "evolution: initial width must be positive, got {m}"
            )));
        }
        Ok(m)
    }
}
