//! Coherent-state algebra and the information quantities built on it.
//!
//! Every quantity in the attack model reduces to exponentials of mean photon
//! numbers: the vacuum overlap of a coherent state of intensity `mu` is
//! `exp(-mu)`, and the overlap between two coherent states that share a vacuum
//! slot arrangement is `exp(-mu / 2)`. Infinite intensities are kept as a
//! distinct value so that the orthogonal-state limit is exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_probability, ensure, Error, Result};

/// Mean photon number of a coherent pulse. `Infinite` is ordered above every
/// finite value and behaves as the orthogonal-state limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhotonNumber(f64);

impl MeanPhotonNumber {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        ensure(!value.is_nan() && value >= 0.0, || {
            format!("mean photon number must be non-negative, got {value}")
        })?;
        Ok(Self(value))
    }

    /// Finite intensity; rejects infinity as well as negative and NaN input.
    pub fn finite(value: f64) -> Result<Self> {
        ensure(value.is_finite(), || {
            format!("expected a finite mean photon number, got {value}")
        })?;
        Self::new(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `exp(-mu)`, exactly 0 for the infinite intensity.
    pub fn vacuum_overlap(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            (-self.0).exp()
        }
    }

    /// `exp(-mu / 2)`, the overlap `<0|alpha>`.
    pub fn amplitude_overlap(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            (-0.5 * self.0).exp()
        }
    }
}

impl std::ops::Add for MeanPhotonNumber {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Eq for MeanPhotonNumber {}

impl PartialOrd for MeanPhotonNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeanPhotonNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for MeanPhotonNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for MeanPhotonNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "+inf" => Ok(Self::INFINITE),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("cannot parse mean photon number {s:?}")))?;
                Self::new(v)
            }
        }
    }
}

impl Serialize for MeanPhotonNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for MeanPhotonNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Self::new(v),
            Repr::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Alice, Bob and channel configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Alice's mean photon number per pulse.
    pub mu_a: MeanPhotonNumber,
    /// Probability of sending a control state.
    pub f: f64,
    /// Bob's detector efficiency.
    pub eta: f64,
    pub delta_db_per_km: f64,
    pub length_km: f64,
}

impl ProtocolParams {
    pub fn new(mu_a: f64, f: f64, eta: f64, delta_db_per_km: f64, length_km: f64) -> Result<Self> {
        let params = Self {
            mu_a: MeanPhotonNumber::finite(mu_a)?,
            f,
            eta,
            delta_db_per_km,
            length_km,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.mu_a.value() > 0.0 && !self.mu_a.is_infinite(), || {
            format!("mu_a must be positive and finite, got {}", self.mu_a)
        })?;
        ensure((0.0..1.0).contains(&self.f), || {
            format!("control probability f must lie in [0, 1), got {}", self.f)
        })?;
        ensure(self.eta > 0.0 && self.eta <= 1.0, || {
            format!("detector efficiency must lie in (0, 1], got {}", self.eta)
        })?;
        ensure(self.delta_db_per_km >= 0.0, || {
            format!("attenuation must be non-negative, got {}", self.delta_db_per_km)
        })?;
        ensure(self.length_km >= 0.0, || {
            format!("length must be non-negative, got {}", self.length_km)
        })
    }

    pub fn with_mu_a(&self, mu_a: f64) -> Result<Self> {
        Self::new(mu_a, self.f, self.eta, self.delta_db_per_km, self.length_km)
    }

    pub fn with_length(&self, length_km: f64) -> Result<Self> {
        Self::new(self.mu_a.value(), self.f, self.eta, self.delta_db_per_km, length_km)
    }

    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.delta_db_per_km * self.length_km / 10.0)
    }
}

/// Channel transmittance `10^(-delta * L / 10)` for attenuation in dB/km.
pub fn transmittance(delta_db_per_km: f64, length_km: f64) -> Result<f64> {
    ensure(delta_db_per_km >= 0.0 && length_km >= 0.0, || {
        format!("attenuation and length must be non-negative, got {delta_db_per_km}, {length_km}")
    })?;
    Ok(10f64.powf(-delta_db_per_km * length_km / 10.0))
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("x", x)?;
    Ok(h2(x))
}

pub(crate) fn h2(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    (term(x) + term(1.0 - x)).min(1.0)
}

/// Holevo quantity of the equiprobable pair `|0>|eps>`, `|eps>|0>` with
/// `|eps|^2 = mu_e`: `h2((1 - exp(-mu_e)) / 2)`.
pub fn holevo_binary(mu_e: MeanPhotonNumber) -> f64 {
    if mu_e.is_infinite() {
        return 1.0;
    }
    // -expm1(-mu) keeps precision for tiny intensities.
    h2(-(-mu_e.value()).exp_m1() / 2.0)
}

/// Threshold-detector click probability `1 - exp(-eta * mu)`.
pub fn click_probability(eta: f64, mu: MeanPhotonNumber) -> f64 {
    if mu.is_infinite() {
        return if eta > 0.0 { 1.0 } else { 0.0 };
    }
    -(-eta * mu.value()).exp_m1()
}

/// Probability `1 - exp(-mu)` of conclusively finding the vacuum slot.
pub fn vacuum_search_success(mu: MeanPhotonNumber) -> f64 {
    if mu.is_infinite() {
        1.0
    } else {
        -(-mu.value()).exp_m1()
    }
}
