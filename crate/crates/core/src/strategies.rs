//! Baseline attacks, Bob's reference statistics and the key-rate model.

use serde::{Deserialize, Serialize};

use crate::analytic::{expected_statistics, StrategyPoint};
use crate::attack::AttackParams;
use crate::error::{ensure, Error, Result};
use crate::optimizer::{optimize_attack, AttackFamily, LinkParams, SearchSettings};
use crate::photonics::{click_probability, holevo_binary, MeanPhotonNumber, ProtocolParams};

/// Default tolerance on constraint residuals: relative for the click rate,
/// absolute for the control fraction.
pub const STRICT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsMode {
    /// Preserve Bob's click rate and the control-state fraction.
    Strict,
    /// Preserve Bob's click rate only.
    Free,
}

impl std::str::FromStr for StatisticsMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "free" => Ok(Self::Free),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown statistics mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for StatisticsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::Free => "free",
        })
    }
}

/// Signed deviations from the statistics Bob expects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    pub click_residual: f64,
    pub control_residual: f64,
}

impl ConstraintResiduals {
    /// Within `tolerance`: the click residual relative to Bob's reference
    /// rate, the control residual absolute.
    pub fn satisfied(&self, protocol: &ProtocolParams, tolerance: f64) -> bool {
        let reference = bob_reference_click_rate(protocol);
        self.click_residual.abs() <= tolerance * reference && self.control_residual.abs() <= tolerance
    }
}

/// Bob's per-signal click probability without Eve: `1 - exp(-eta t mu_a)`.
pub fn bob_reference_click_rate(protocol: &ProtocolParams) -> f64 {
    let mean = protocol.transmittance() * protocol.mu_a.value();
    click_probability(
        protocol.eta,
        MeanPhotonNumber::new(mean).unwrap_or(MeanPhotonNumber::ZERO),
    )
}

/// Bob's click probability per signal sent by Alice when Eve delivers the
/// strategy over a lossless line.
pub fn strategy_click_rate(point: &StrategyPoint, protocol: &ProtocolParams) -> f64 {
    point.emit_fraction * click_probability(protocol.eta, point.mu_delivered)
}

/// Clicks on information states per signal sent by Alice.
pub fn bit_click_rate(point: &StrategyPoint, protocol: &ProtocolParams) -> f64 {
    strategy_click_rate(point, protocol) * (1.0 - point.control_fraction)
}

pub fn constraint_residuals(
    point: &StrategyPoint,
    protocol: &ProtocolParams,
    mode: StatisticsMode,
) -> ConstraintResiduals {
    ConstraintResiduals {
        click_residual: strategy_click_rate(point, protocol) - bob_reference_click_rate(protocol),
        control_residual: match mode {
            StatisticsMode::Strict => point.control_fraction - protocol.f,
            StatisticsMode::Free => 0.0,
        },
    }
}

/// Beam-splitting attack: Eve keeps the lost fraction `1 - t` and forwards
/// the rest losslessly.
pub fn bs_point(protocol: &ProtocolParams) -> StrategyPoint {
    let t = protocol.transmittance();
    let mu_a = protocol.mu_a.value();
    StrategyPoint {
        emit_fraction: 1.0,
        control_fraction: protocol.f,
        eve_info_per_emitted_bit: holevo_binary(
            MeanPhotonNumber::new((1.0 - t) * mu_a).unwrap_or(MeanPhotonNumber::ZERO),
        ),
        mu_delivered: MeanPhotonNumber::new(t * mu_a).unwrap_or(MeanPhotonNumber::ZERO),
    }
}

/// No attack at all: Bob receives the channel output and Eve learns nothing.
pub fn passive_point(protocol: &ProtocolParams) -> StrategyPoint {
    StrategyPoint {
        eve_info_per_emitted_bit: 0.0,
        ..bs_point(protocol)
    }
}

/// USD-like attack point; `attack` must have infinite Eve intensities and a
/// single SF2 trial.
pub fn usd_like_point(protocol: &ProtocolParams, attack: &AttackParams) -> Result<StrategyPoint> {
    ensure(attack.is_usd_like(), || {
        "USD-like attack needs mu_e1 = mu_e2 = inf and t_sf2 = 1".to_string()
    })?;
    expected_statistics(protocol, attack)
}

/// Secret key per signal sent by Alice: information-state clicks times
/// `1 - I_E`. The attack introduces no errors, so there is no error-correction
/// term.
pub fn key_rate(protocol: &ProtocolParams, point: &StrategyPoint) -> f64 {
    (bit_click_rate(point, protocol) * (1.0 - point.eve_info_per_emitted_bit)).max(0.0)
}

/// Smallest Alice intensity from which a USD-like attack reproduces Bob's
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "mu_a", rename_all = "snake_case")]
pub enum UsdThreshold {
    Found(MeanPhotonNumber),
    /// No intensity in the searched bracket admits the attack.
    NotInBracket,
}

const THRESHOLD_GRID_POINTS: usize = 20;
const THRESHOLD_BISECTIONS: usize = 30;

/// Feasibility of the USD-like family over `(0, mu_a_max]` is monotone in
/// `mu_a` (a stronger pulse gives Eve more conclusive events), so a grid
/// scan locates the first feasible cell and bisection refines its left edge.
/// The returned intensity is feasible.
pub fn usd_feasibility_threshold(
    link: &LinkParams,
    length_km: f64,
    mode: StatisticsMode,
    settings: &SearchSettings,
    mu_a_max: f64,
) -> Result<UsdThreshold> {
    ensure(mu_a_max > 0.0, || {
        format!("upper intensity bound must be positive, got {mu_a_max}")
    })?;
    let settings = settings.clone().with_family(AttackFamily::UsdLike);
    let feasible = |mu_a: f64| -> Result<bool> {
        match optimize_attack(&link.protocol(mu_a, length_km)?, mode, &settings) {
            Ok(_) => Ok(true),
            Err(Error::NoFeasiblePoint { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let grid: Vec<f64> = (1..=THRESHOLD_GRID_POINTS)
        .map(|k| mu_a_max * k as f64 / THRESHOLD_GRID_POINTS as f64)
        .collect();
    let mut first = None;
    for (i, &mu) in grid.iter().enumerate() {
        if feasible(mu)? {
            first = Some(i);
            break;
        }
    }
    let Some(i) = first else {
        return Ok(UsdThreshold::NotInBracket);
    };
    let (mut lo, mut hi) = (if i == 0 { 0.0 } else { grid[i - 1] }, grid[i]);
    for _ in 0..THRESHOLD_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(UsdThreshold::Found(MeanPhotonNumber::new(hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protocol(mu_a: f64, l: f64) -> ProtocolParams {
        ProtocolParams::new(mu_a, 0.1, 0.1, 0.25, l).unwrap()
    }

    #[test]
    fn reference_click_rate() {
        let p = ProtocolParams::new(0.5, 0.1, 0.1, 0.25, 40.0).unwrap();
        assert!((bob_reference_click_rate(&p) - 0.004_987_520_807_317_687).abs() < 1e-15);
        let lossless = ProtocolParams::new(1e6, 0.1, 1.0, 0.25, 0.0).unwrap();
        assert_eq!(bob_reference_click_rate(&lossless), 1.0);
        let p0 = protocol(0.5, 0.0);
        assert_eq!(
            bob_reference_click_rate(&p0),
            click_probability(0.1, MeanPhotonNumber::new(0.5).unwrap())
        );
        assert!(bob_reference_click_rate(&protocol(0.5, 10.0)) > bob_reference_click_rate(&protocol(0.5, 20.0)));
    }

    #[test]
    fn strategy_click_examples() {
        let p = protocol(0.5, 40.0);
        let mut point = bs_point(&p);
        assert_eq!(strategy_click_rate(&point, &p), bob_reference_click_rate(&p));
        point.emit_fraction = 0.0;
        assert_eq!(strategy_click_rate(&point, &p), 0.0);
        let half = StrategyPoint {
            emit_fraction: 0.5,
            control_fraction: 0.1,
            eve_info_per_emitted_bit: 0.3,
            mu_delivered: MeanPhotonNumber::new(1.0).unwrap(),
        };
        assert!((strategy_click_rate(&half, &p) - 0.047_581_290_982_020_21).abs() < 1e-15);
    }

    #[test]
    fn residuals() {
        let p = protocol(0.5, 40.0);
        for mode in [StatisticsMode::Strict, StatisticsMode::Free] {
            let r = constraint_residuals(&bs_point(&p), &p, mode);
            assert_eq!(r.click_residual, 0.0);
            assert!(r.control_residual.abs() < 1e-15);
        }
        let odd = StrategyPoint {
            control_fraction: 0.7,
            ..bs_point(&p)
        };
        assert_eq!(
            constraint_residuals(&odd, &p, StatisticsMode::Free).control_residual,
            0.0
        );
        let blocked = StrategyPoint::blocking();
        let r = constraint_residuals(&blocked, &p, StatisticsMode::Strict);
        assert_eq!(r.click_residual, -bob_reference_click_rate(&p));
    }

    #[test]
    fn bs_information() {
        assert_eq!(bs_point(&protocol(0.5, 0.0)).eve_info_per_emitted_bit, 0.0);
        let far = bs_point(&protocol(0.5, 4000.0)).eve_info_per_emitted_bit;
        assert!((far - holevo_binary(MeanPhotonNumber::new(0.5).unwrap())).abs() < 1e-12);
        let p = protocol(0.5, 100.0);
        let t = 10f64.powf(-2.5);
        let expected = holevo_binary(MeanPhotonNumber::new(0.5 * (1.0 - t)).unwrap());
        assert_eq!(bs_point(&p).eve_info_per_emitted_bit, expected);
    }

    #[test]
    fn key_rate_examples() {
        let p = protocol(0.5, 100.0);
        let full = StrategyPoint {
            eve_info_per_emitted_bit: 1.0,
            ..bs_point(&p)
        };
        assert_eq!(key_rate(&p, &full), 0.0);
        let passive = passive_point(&p);
        let expected = 0.9 * bob_reference_click_rate(&p);
        assert!((key_rate(&p, &passive) - expected).abs() < 1e-12 * expected);

        let chi = bs_point(&p).eve_info_per_emitted_bit;
        let expected = 0.9 * (1.0 - (-0.1 * 10f64.powf(-2.5) * 0.5).exp()) * (1.0 - chi);
        assert!((key_rate(&p, &bs_point(&p)) - expected).abs() < 1e-12 * expected);
        assert!(key_rate(&p, &bs_point(&p)) > 0.0);
    }

    #[test]
    fn usd_shape_is_enforced() {
        let p = protocol(0.5, 100.0);
        let bad = AttackParams::from_values(1, 2, 0.3, f64::INFINITY, f64::INFINITY).unwrap();
        assert!(usd_like_point(&p, &bad).is_err());
        let good = AttackParams::usd_like(1, MeanPhotonNumber::new(0.3).unwrap()).unwrap();
        assert!(usd_like_point(&p, &good).is_ok());
    }
}
