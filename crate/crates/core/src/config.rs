//! Run configuration shared by the command-line tools.
//!
//! Values are resolved as defaults, then an optional JSON file, then
//! command-line flags; the resolved configuration is echoed with every
//! output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attack::AttackParams;
use crate::error::{Error, Result};
use crate::optimizer::{AttackFamily, LinkParams, SearchSettings};
use crate::strategies::{StatisticsMode, STRICT_TOLERANCE};

/// Alice's intensity: a fixed value or optimised per channel length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MuAValue", into = "MuAValue")]
pub enum MuASetting {
    Fixed(f64),
    Optimize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MuAValue {
    Number(f64),
    Text(String),
}

impl TryFrom<MuAValue> for MuASetting {
    type Error = Error;

    fn try_from(v: MuAValue) -> Result<Self> {
        match v {
            MuAValue::Number(x) => Self::fixed(x),
            MuAValue::Text(s) => s.parse(),
        }
    }
}

impl From<MuASetting> for MuAValue {
    fn from(m: MuASetting) -> Self {
        match m {
            MuASetting::Fixed(x) => MuAValue::Number(x),
            MuASetting::Optimize => MuAValue::Text("optimize".into()),
        }
    }
}

impl MuASetting {
    fn fixed(x: f64) -> Result<Self> {
        if x.is_finite() && x > 0.0 {
            Ok(Self::Fixed(x))
        } else {
            Err(Error::Config(format!("mu_a must be positive and finite, got {x}")))
        }
    }
}

impl FromStr for MuASetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("optimize") {
            return Ok(Self::Optimize);
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("mu_a must be a number or \"optimize\", got {s:?}")))?;
        Self::fixed(x)
    }
}

impl fmt::Display for MuASetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(x) => write!(f, "{x}"),
            Self::Optimize => f.write_str("optimize"),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eta: f64,
    pub delta: f64,
    pub f: f64,
    /// `None` leaves the choice to the command: optimised for `curve`,
    /// [`RunConfig::DEFAULT_FIXED_MU_A`] elsewhere.
    pub mu_a: Option<MuASetting>,
    /// Upper end of the intensity bracket `(0, mu_a_max]`.
    pub mu_a_max: f64,
    pub mode: StatisticsMode,
    pub lmin: f64,
    pub lmax: f64,
    pub lstep: f64,
    /// Channel length for single-point commands.
    pub length: f64,
    pub attacks: Vec<AttackFamily>,
    pub seed: u64,
    pub budget: usize,
    pub tolerance: f64,
    pub signals: usize,
    pub attack: AttackParams,
    pub out: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            delta: 0.25,
            f: 0.1,
            mu_a: None,
            mu_a_max: 1.0,
            mode: StatisticsMode::Strict,
            lmin: 10.0,
            lmax: 250.0,
            lstep: 25.0,
            length: 50.0,
            attacks: vec![
                AttackFamily::SoftFilter,
                AttackFamily::BeamSplitting,
                AttackFamily::UsdLike,
            ],
            seed: 1,
            budget: 20_000,
            tolerance: STRICT_TOLERANCE,
            signals: 1_000_000,
            attack: AttackParams::from_values(1, 3, 0.2, 0.4, 0.4).expect("valid default attack"),
            out: None,
            overlay: None,
            svg: None,
        }
    }
}

impl RunConfig {
    pub const DEFAULT_FIXED_MU_A: f64 = 0.5;

    /// Reads a (possibly partial) configuration file; missing fields keep
    /// their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn link(&self) -> LinkParams {
        LinkParams {
            f: self.f,
            eta: self.eta,
            delta_db_per_km: self.delta,
        }
    }

    /// Intensity for commands working at one fixed value.
    pub fn fixed_mu_a(&self) -> Option<f64> {
        match self.mu_a {
            None => Some(Self::DEFAULT_FIXED_MU_A),
            Some(MuASetting::Fixed(x)) => Some(x),
            Some(MuASetting::Optimize) => None,
        }
    }

    pub fn search_settings(&self, family: AttackFamily) -> SearchSettings {
        SearchSettings {
            budget: self.budget,
            seed: self.seed,
            family,
            tolerance: self.tolerance,
            ..SearchSettings::default()
        }
    }

    /// Length grid: `lmin`, every multiple of `lstep` strictly between
    /// `lmin` and `lmax`, and `lmax`.
    pub fn lengths(&self) -> Result<Vec<f64>> {
        if !(self.lmin >= 0.0 && self.lmax >= self.lmin && self.lstep > 0.0) {
            return Err(Error::Config(format!(
                "invalid length grid lmin={} lmax={} lstep={}",
                self.lmin, self.lmax, self.lstep
            )));
        }
        let mut out = vec![self.lmin];
        let mut k = (self.lmin / self.lstep).floor() + 1.0;
        while k * self.lstep < self.lmax {
            out.push(k * self.lstep);
            k += 1.0;
        }
        if self.lmax > self.lmin {
            out.push(self.lmax);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.link()
            .protocol(self.fixed_mu_a().unwrap_or(self.mu_a_max), self.length)?;
        if !(self.mu_a_max > 0.0 && self.mu_a_max.is_finite()) {
            return Err(Error::Config(format!(
                "mu_a_max must be positive, got {}",
                self.mu_a_max
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.attacks.is_empty() {
            return Err(Error::Config("at least one attack is required".into()));
        }
        self.lengths()?;
        Ok(())
    }
}
