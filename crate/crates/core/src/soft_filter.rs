//! Success probabilities of the soft-filtering operations.
//!
//! A soft filter maps a pair of states with overlap `s_in` onto a pair with a
//! smaller overlap `s_out`, succeeding with probability
//! `(1 - s_in) / (1 - s_out)`. The two three-state families used by the attack
//! act on the information states `|alpha>|0>`, `|0>|alpha>` (success `p`) and
//! the control state `|alpha>|alpha>` (success `q`); `q` is fixed by requiring
//! the information/control overlap to be preserved.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ensure, Error, Result};
use crate::photonics::MeanPhotonNumber;

/// Residual above which a candidate root of the unitarity condition is
/// rejected.
const ROOT_TOLERANCE: f64 = 1e-9;

/// Success probabilities of one soft-filtering stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SFOutcomeProbs {
    /// Success on information states.
    pub p_info: f64,
    /// Success on the control state.
    pub q_control: f64,
}

impl SFOutcomeProbs {
    pub fn new(p_info: f64, q_control: f64) -> Result<Self> {
        check_probability("p_info", p_info)?;
        check_probability("q_control", q_control)?;
        Ok(Self { p_info, q_control })
    }

    /// Success probability for a signal of the given kind.
    pub fn for_control(&self, is_control: bool) -> f64 {
        if is_control {
            self.q_control
        } else {
            self.p_info
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Sf1,
    Sf2,
}

/// Kind-averaged success of a stage and the control share among its
/// successes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageAggregates {
    pub p_stage: f64,
    pub control_fraction_after: f64,
}

/// `(1 - overlap_in) / (1 - overlap_out)`.
pub fn generic_success_probability(overlap_in: f64, overlap_out: f64) -> Result<f64> {
    ensure((0.0..1.0).contains(&overlap_in), || {
        format!("input overlap must lie in [0, 1), got {overlap_in}")
    })?;
    ensure((0.0..1.0).contains(&overlap_out), || {
        format!("output overlap must lie in [0, 1), got {overlap_out}")
    })?;
    if overlap_out > overlap_in {
        return Err(Error::Infeasible(format!(
            "output overlap {overlap_out} exceeds input overlap {overlap_in}"
        )));
    }
    Ok((1.0 - overlap_in) / (1.0 - overlap_out))
}

/// Information-state success shared by both stages:
/// `(1 - exp(-mu_a)) / (1 - exp(-(mu_b + mu_e)))`.
fn info_success(mu_a: MeanPhotonNumber, mu_b: MeanPhotonNumber, mu_e: MeanPhotonNumber) -> Result<f64> {
    ensure(mu_a.value() > 0.0 && !mu_a.is_infinite(), || {
        format!("mu_a must be positive and finite, got {mu_a}")
    })?;
    ensure(!mu_b.is_infinite(), || "mu_b must be finite".to_string())?;
    let out = mu_b + mu_e;
    if out < mu_a {
        return Err(Error::Infeasible(format!("mu_b + mu_e = {out} is below mu_a = {mu_a}")));
    }
    let numerator = -(-mu_a.value()).exp_m1();
    let denominator = if out.is_infinite() {
        1.0
    } else {
        -(-out.value()).exp_m1()
    };
    Ok((numerator / denominator).min(1.0))
}

/// Overlap factor `sqrt((1 + exp(-mu_e1)) / 2)` between Eve's SF1 record of a
/// control state and of an information state.
fn sf1_eve_overlap(mu_e1: MeanPhotonNumber) -> f64 {
    if mu_e1.is_infinite() {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        ((1.0 + mu_e1.vacuum_overlap()) / 2.0).sqrt()
    }
}

/// Overlap factor of Eve's SF2 record, `exp(-mu_e2 / 2)`.
fn sf2_eve_overlap(mu_e2: MeanPhotonNumber) -> f64 {
    mu_e2.amplitude_overlap()
}

fn eve_overlap(stage: Stage, mu_e: MeanPhotonNumber) -> f64 {
    match stage {
        Stage::Sf1 => sf1_eve_overlap(mu_e),
        Stage::Sf2 => sf2_eve_overlap(mu_e),
    }
}

/// SF1 success probabilities.
///
/// `q_control` solves
/// `exp(-mu_a/2) = sqrt(p q) exp(-mu_b/2) k + sqrt((1-p)(1-q))`
/// with `k = sqrt((1 + exp(-mu_e1)) / 2)`. Writing `sqrt(q) = cos(theta)` turns
/// the right side into `R cos(theta - phi)`, so the two candidate roots are
/// `theta = phi -+ arccos(c / R)`. The root with the smaller residual wins,
/// ties going to the larger `q`.
pub fn sf1_probs(mu_a: MeanPhotonNumber, mu_b: MeanPhotonNumber, mu_e1: MeanPhotonNumber) -> Result<SFOutcomeProbs> {
    let p = info_success(mu_a, mu_b, mu_e1)?;
    let a = p.sqrt() * mu_b.amplitude_overlap() * sf1_eve_overlap(mu_e1);
    let b = (1.0 - p).sqrt();
    let r = a.hypot(b);
    let c = mu_a.amplitude_overlap();
    if c > r * (1.0 + 1e-15) {
        return Err(Error::Infeasible(format!(
            "no unitary SF1 exists: overlap {c} exceeds reachable {r}"
        )));
    }
    let phi = (a / r).clamp(-1.0, 1.0).acos();
    let spread = (c / r).clamp(-1.0, 1.0).acos();

    let mut best: Option<(f64, f64)> = None;
    for theta in [phi - spread, phi + spread] {
        let q = theta.cos().powi(2).clamp(0.0, 1.0);
        let residual = sf1_residual(mu_a, mu_b, mu_e1, p, q);
        best = match best {
            Some((bq, br)) if br < residual - 1e-12 => Some((bq, br)),
            Some((bq, br)) if (br - residual).abs() <= 1e-12 && bq >= q => Some((bq, br)),
            _ => Some((q, residual)),
        };
    }
    let (q, residual) = best.expect("two candidates examined");
    if residual > ROOT_TOLERANCE {
        return Err(Error::Infeasible(format!(
            "SF1 unitarity cannot be met (residual {residual:e})"
        )));
    }
    Ok(SFOutcomeProbs {
        p_info: p,
        q_control: q,
    })
}

fn sf1_residual(mu_a: MeanPhotonNumber, mu_b: MeanPhotonNumber, mu_e1: MeanPhotonNumber, p: f64, q: f64) -> f64 {
    let rhs = (p * q).sqrt() * mu_b.amplitude_overlap() * sf1_eve_overlap(mu_e1) + ((1.0 - p) * (1.0 - q)).sqrt();
    (mu_a.amplitude_overlap() - rhs).abs()
}

/// SF2 success probabilities: `q = p exp(mu_a - mu_b - mu_e2)`.
pub fn sf2_probs(mu_a: MeanPhotonNumber, mu_b: MeanPhotonNumber, mu_e2: MeanPhotonNumber) -> Result<SFOutcomeProbs> {
    let p = info_success(mu_a, mu_b, mu_e2)?;
    let q = if mu_e2.is_infinite() {
        0.0
    } else {
        (p * (mu_a.value() - mu_b.value() - mu_e2.value()).exp()).min(1.0)
    };
    Ok(SFOutcomeProbs {
        p_info: p,
        q_control: q,
    })
}

pub fn stage_probs(
    stage: Stage,
    mu_a: MeanPhotonNumber,
    mu_b: MeanPhotonNumber,
    mu_e: MeanPhotonNumber,
) -> Result<SFOutcomeProbs> {
    match stage {
        Stage::Sf1 => sf1_probs(mu_a, mu_b, mu_e),
        Stage::Sf2 => sf2_probs(mu_a, mu_b, mu_e),
    }
}

/// Absolute error in the preserved information/control overlap for the
/// given stage and probabilities.
pub fn unitarity_residual(
    stage: Stage,
    mu_a: MeanPhotonNumber,
    mu_b: MeanPhotonNumber,
    mu_e: MeanPhotonNumber,
    probs: SFOutcomeProbs,
) -> f64 {
    let (p, q) = (probs.p_info, probs.q_control);
    let rhs = (p * q).sqrt() * mu_b.amplitude_overlap() * eve_overlap(stage, mu_e) + ((1.0 - p) * (1.0 - q)).sqrt();
    (mu_a.amplitude_overlap() - rhs).abs()
}

pub fn stage_aggregates(f: f64, probs: SFOutcomeProbs) -> Result<StageAggregates> {
    ensure((0.0..1.0).contains(&f), || {
        format!("control probability f must lie in [0, 1), got {f}")
    })?;
    let p_stage = (1.0 - f) * probs.p_info + f * probs.q_control;
    if p_stage <= 0.0 {
        return Err(Error::DegenerateStage);
    }
    Ok(StageAggregates {
        p_stage,
        control_fraction_after: f * probs.q_control / p_stage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mu(v: f64) -> MeanPhotonNumber {
        MeanPhotonNumber::new(v).unwrap()
    }

    /// Solves the SF1 overlap condition for `q` by bisection on each monotone
    /// branch of the right-hand side, independently of the closed form.
    fn sf1_q_by_bisection(mu_a: f64, mu_b: f64, mu_e1: f64, p: f64) -> Vec<f64> {
        let k = ((1.0 + (-mu_e1).exp()) / 2.0).sqrt();
        let g =
            |q: f64| (p * q).sqrt() * (-mu_b / 2.0).exp() * k + ((1.0 - p) * (1.0 - q)).sqrt() - (-mu_a / 2.0).exp();
        // The right side is concave in q with its maximum at q* = a^2 / R^2.
        let a2 = p * (-mu_b).exp() * k * k;
        let q_star = a2 / (a2 + 1.0 - p);
        let bisect = |mut lo: f64, mut hi: f64| {
            let rising = g(hi) > g(lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) < 0.0) == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut roots = Vec::new();
        if g(0.0) * g(q_star) <= 0.0 {
            roots.push(bisect(0.0, q_star));
        }
        if g(q_star) * g(1.0) <= 0.0 {
            roots.push(bisect(q_star, 1.0));
        }
        roots
    }

    #[test]
    fn generic_success_cases() {
        assert_eq!(generic_success_probability(0.8, 0.8).unwrap(), 1.0);
        assert!((generic_success_probability(0.8, 0.0).unwrap() - 0.2).abs() < 1e-15);
        let p = generic_success_probability((-0.2f64).exp(), (-0.3f64).exp()).unwrap();
        assert!((p - 0.699_390_394_644_272_9).abs() < 1e-12);
        assert!(matches!(
            generic_success_probability(0.5, 0.6),
            Err(Error::Infeasible(_))
        ));
        assert!(generic_success_probability(1.0, 0.2).is_err());
    }

    #[test]
    fn sf1_example_matches_bisection() {
        let probs = sf1_probs(mu(0.2), mu(0.1), mu(0.2)).unwrap();
        assert!((probs.p_info - 0.699_390_394_644_272_9).abs() < 1e-12);
        let roots = sf1_q_by_bisection(0.2, 0.1, 0.2, probs.p_info);
        let larger = roots.iter().cloned().fold(f64::MIN, f64::max);
        assert!((probs.q_control - larger).abs() < 1e-9);
        assert!((probs.q_control - 0.871_194_385_965_965_4).abs() < 1e-9);
        assert!(probs.q_control > probs.p_info);
        assert!(unitarity_residual(Stage::Sf1, mu(0.2), mu(0.1), mu(0.2), probs) < 1e-9);
    }

    #[test]
    fn sf1_on_beam_splitter_boundary_keeps_p_at_one() {
        // p = 1 but the control state is still filtered: Eve's SF1 record
        // of a control state is closer to the information records than a
        // beam-splitter copy would be.
        let probs = sf1_probs(mu(0.5), mu(0.3), mu(0.2)).unwrap();
        assert_eq!(probs.p_info, 1.0);
        let k2 = (1.0 + (-0.2f64).exp()) / 2.0;
        let expected_q = (-0.5f64 + 0.3).exp() / k2;
        assert!((probs.q_control - expected_q).abs() < 1e-12);
        assert!((probs.q_control - 0.900_332_005_375_044_3).abs() < 1e-12);
        assert!(unitarity_residual(Stage::Sf1, mu(0.5), mu(0.3), mu(0.2), probs) < 1e-12);
        let naive = SFOutcomeProbs::new(1.0, 1.0).unwrap();
        assert!(unitarity_residual(Stage::Sf1, mu(0.5), mu(0.3), mu(0.2), naive) > 0.01);
    }

    #[test]
    fn sf1_with_zero_eve_intensity_is_the_identity() {
        let probs = sf1_probs(mu(0.5), mu(0.5), mu(0.0)).unwrap();
        assert_eq!(probs.p_info, 1.0);
        assert!((probs.q_control - 1.0).abs() < 1e-12);
        let residual = unitarity_residual(
            Stage::Sf1,
            mu(0.5),
            mu(0.5),
            mu(0.0),
            SFOutcomeProbs::new(1.0, 1.0).unwrap(),
        );
        assert!(residual < 1e-12);
    }

    #[test]
    fn sf1_infinite_eve_uses_exact_overlap() {
        let probs = sf1_probs(mu(0.4), mu(0.05), MeanPhotonNumber::INFINITE).unwrap();
        assert_eq!(probs.p_info, -(-0.4f64).exp_m1());
        assert!(unitarity_residual(Stage::Sf1, mu(0.4), mu(0.05), MeanPhotonNumber::INFINITE, probs) < 1e-12);
    }

    #[test]
    fn denominator_without_square_root_breaks_unitarity() {
        // The closed form with an un-rooted normaliser and exp(-mu_a) in the
        // second arccos gives a q that does not preserve the overlap.
        let (mu_a, mu_b, mu_e1) = (0.2f64, 0.1f64, 0.2f64);
        let p = sf1_probs(mu(mu_a), mu(mu_b), mu(mu_e1)).unwrap().p_info;
        let k2 = (1.0 + (-mu_e1).exp()) / 2.0;
        let norm = p * (-mu_b).exp() * k2 + 1.0 - p;
        let first = (p.sqrt() * k2.sqrt() * (-mu_b / 2.0).exp() / norm).acos();
        let second = ((-mu_a).exp() / norm).acos();
        let q_unrooted = (first - second).cos().powi(2);
        let residual = unitarity_residual(
            Stage::Sf1,
            mu(mu_a),
            mu(mu_b),
            mu(mu_e1),
            SFOutcomeProbs::new(p, q_unrooted).unwrap(),
        );
        assert!(residual > 1e-3, "residual {residual}");

        let first = (p.sqrt() * k2.sqrt() * (-mu_b / 2.0).exp() / norm.sqrt()).acos();
        let second = ((-mu_a / 2.0).exp() / norm.sqrt()).acos();
        let q_rooted = (first - second).cos().powi(2);
        let q = sf1_probs(mu(mu_a), mu(mu_b), mu(mu_e1)).unwrap().q_control;
        assert!((q_rooted - q).abs() < 1e-12);
    }

    #[test]
    fn sf1_infeasible_intensities() {
        assert!(matches!(
            sf1_probs(mu(0.5), mu(0.1), mu(0.2)),
            Err(Error::Infeasible(_))
        ));
        assert!(sf1_probs(mu(0.5), MeanPhotonNumber::INFINITE, mu(0.2)).is_err());
    }

    #[test]
    fn sf2_examples() {
        let bs = sf2_probs(mu(0.5), mu(0.3), mu(0.2)).unwrap();
        assert_eq!((bs.p_info, bs.q_control), (1.0, 1.0));

        let probs = sf2_probs(mu(0.2), mu(0.1), mu(0.2)).unwrap();
        assert!((probs.p_info - 0.699_390_394_644_272_9).abs() < 1e-12);
        assert!((probs.q_control - 0.632_834_598_889_074_7).abs() < 1e-12);
        assert!(probs.q_control <= probs.p_info);
        assert!(unitarity_residual(Stage::Sf2, mu(0.2), mu(0.1), mu(0.2), probs) < 1e-12);

        let usd = sf2_probs(mu(0.2), mu(0.1), MeanPhotonNumber::INFINITE).unwrap();
        assert_eq!(usd.p_info, -(-0.2f64).exp_m1());
        assert!((usd.p_info - 0.181_269_246_922_018_1).abs() < 1e-12);
        assert_eq!(usd.q_control, 0.0);

        assert!(matches!(
            sf2_probs(mu(0.5), mu(0.1), mu(0.1)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn residual_examples() {
        let good = SFOutcomeProbs::new(0.699390, 0.632834).unwrap();
        assert!(unitarity_residual(Stage::Sf2, mu(0.2), mu(0.1), mu(0.2), good) < 1e-6);
        let wrong = SFOutcomeProbs::new(0.5, 0.5).unwrap();
        assert!(unitarity_residual(Stage::Sf2, mu(0.2), mu(0.1), mu(0.2), wrong) > 0.01);
    }

    #[test]
    fn aggregates() {
        let zero_f = stage_aggregates(0.0, SFOutcomeProbs::new(0.3, 0.9).unwrap()).unwrap();
        assert_eq!(zero_f.control_fraction_after, 0.0);
        let even = stage_aggregates(0.5, SFOutcomeProbs::new(0.4, 0.4).unwrap()).unwrap();
        assert!((even.control_fraction_after - 0.5).abs() < 1e-15);
        let agg = stage_aggregates(0.1, SFOutcomeProbs::new(0.699390, 0.87).unwrap()).unwrap();
        assert!((agg.p_stage - 0.716_451).abs() < 1e-12);
        assert!((agg.control_fraction_after - 0.121_431_891_364_5).abs() < 1e-9);
        assert!(matches!(
            stage_aggregates(0.1, SFOutcomeProbs::new(0.0, 0.0).unwrap()),
            Err(Error::DegenerateStage)
        ));
        assert!(stage_aggregates(1.0, SFOutcomeProbs::new(0.5, 0.5).unwrap()).is_err());
    }
}
