//! Exact long-run statistics of the attack.
//!
//! One renewal cycle is a vacuum search followed by one tuple attempt. The
//! long-run ratios the simulator estimates are ratios of per-cycle
//! expectations (renewal-reward theorem), computed here by a forward pass
//! over the SF2 run length with a running closing-search term.

use serde::{Deserialize, Serialize};

use crate::attack::{AttackParams, StageModel};
use crate::error::{ensure, Error, Result};
use crate::photonics::{MeanPhotonNumber, ProtocolParams};

/// Aggregate outcome of an attack, per signal sent by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyPoint {
    /// Non-vacuum signals delivered to Bob per signal consumed.
    pub emit_fraction: f64,
    /// Share of control states among delivered signals.
    pub control_fraction: f64,
    /// Eve's information per delivered information state.
    pub eve_info_per_emitted_bit: f64,
    /// Intensity of the delivered signals.
    pub mu_delivered: MeanPhotonNumber,
}

impl StrategyPoint {
    /// Blocks everything.
    pub fn blocking() -> Self {
        Self {
            emit_fraction: 0.0,
            control_fraction: 0.0,
            eve_info_per_emitted_bit: 0.0,
            mu_delivered: MeanPhotonNumber::ZERO,
        }
    }
}

/// Expectations over one renewal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleExpectations {
    pub consumed: f64,
    pub emitted: f64,
    pub emitted_controls: f64,
    pub eve_info: f64,
    /// Probability that the tuple is delivered rather than aborted.
    pub completion: f64,
}

impl CycleExpectations {
    pub fn to_point(&self, mu_b: MeanPhotonNumber) -> StrategyPoint {
        let bits = self.emitted - self.emitted_controls;
        StrategyPoint {
            emit_fraction: ratio(self.emitted, self.consumed),
            control_fraction: ratio(self.emitted_controls, self.emitted),
            eve_info_per_emitted_bit: ratio(self.eve_info, bits),
            mu_delivered: mu_b,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn cycle_expectations(protocol: &ProtocolParams, attack: &AttackParams) -> Result<CycleExpectations> {
    let model = StageModel::resolve(protocol, attack)?;
    Ok(model_cycle_expectations(&model))
}

pub(crate) fn model_cycle_expectations(m: &StageModel) -> CycleExpectations {
    let f = m.f;
    let t1 = m.t_sf1 as f64;

    // Stage 1: geometric search, the opening signal included.
    let search = 1.0 / ((1.0 - f) * m.search_success);

    // Stage 2: all t_sf1 trials must succeed.
    let p_sf1 = (1.0 - f) * m.sf1.p_info + f * m.sf1.q_control;
    let d1 = if p_sf1 > 0.0 { f * m.sf1.q_control / p_sf1 } else { 0.0 };
    let mut sf1_consumed = 0.0;
    let mut survive = 1.0;
    for _ in 0..m.t_sf1 {
        sf1_consumed += survive;
        survive *= p_sf1;
    }

    // Stage 3 and closing search: K successes in a row, capped at t_sf2;
    // each success is a control with probability d2. Walking right to left a
    // signal closes the tuple with probability r; `left` is E[(K - J) 1{J <= K}],
    // the number of SF2 signals left of the closing position.
    let p_sf2 = (1.0 - f) * m.sf2.p_info + f * m.sf2.q_control;
    let d2 = if p_sf2 > 0.0 { f * m.sf2.q_control / p_sf2 } else { 0.0 };
    let r = (1.0 - d2) * m.closing_success;

    let mut run_prob = 1.0; // P(K >= k)
    let mut all_fail = 1.0; // (1 - r)^k
    let mut left = 0.0;
    let mut sf2_consumed = 0.0;
    let mut completion = 0.0;
    let mut emitted = 0.0;
    let mut controls = 0.0;
    let mut info = 0.0;
    for k in 0..=m.t_sf2 {
        let (p_k, extra) = if k < m.t_sf2 {
            (run_prob * (1.0 - p_sf2), 1.0)
        } else {
            (run_prob, 0.0)
        };
        let closes = 1.0 - all_fail;
        sf2_consumed += p_k * (k as f64 + extra);
        completion += p_k * closes;
        emitted += p_k * (closes * (1.0 + t1) + left);
        controls += p_k * (closes * t1 * d1 + left * d2);
        info += p_k * (closes * (0.5 + t1 * (1.0 - d1) * m.chi1) + left * (1.0 - d2) * m.chi2);

        left += 1.0 - all_fail;
        all_fail *= 1.0 - r;
        run_prob *= p_sf2;
    }

    CycleExpectations {
        consumed: search + sf1_consumed + survive * sf2_consumed,
        emitted: survive * emitted,
        emitted_controls: survive * controls,
        eve_info: survive * info,
        completion: survive * completion,
    }
}

/// Long-run strategy point of a soft-filtering attack.
pub fn expected_statistics(protocol: &ProtocolParams, attack: &AttackParams) -> Result<StrategyPoint> {
    Ok(cycle_expectations(protocol, attack)?.to_point(attack.mu_b))
}

/// Result of brute-force enumeration, with the probability mass of the
/// truncated paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedPoint {
    pub point: StrategyPoint,
    pub residual_mass: f64,
}

/// Largest truncated mass accepted by [`enumerate_small`].
pub const ENUMERATION_RESIDUAL_LIMIT: f64 = 1e-9;

/// Largest SF2 cap the explicit enumeration accepts.
pub const ENUMERATION_MAX_T_SF2: u32 = 8;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Bit,
    Control,
}

/// Weighted enumeration of every outcome path of one renewal cycle up to
/// `max_cycle_len` signals, summing exactly the quantities the simulator
/// counts. Each signal kind and each draw is branched explicitly; only the
/// vacuum-search prefix is walked as a chain.
pub fn enumerate_small(
    protocol: &ProtocolParams,
    attack: &AttackParams,
    max_cycle_len: usize,
) -> Result<EnumeratedPoint> {
    ensure(
        attack.t_sf2 <= ENUMERATION_MAX_T_SF2 && attack.t_sf1 <= ENUMERATION_MAX_T_SF2,
        || format!("enumeration supports t_sf1, t_sf2 <= {ENUMERATION_MAX_T_SF2}"),
    )?;
    let m = StageModel::resolve(protocol, attack)?;
    let f = m.f;
    let kinds = [
        (Kind::Bit, (1.0 - f) / 2.0),
        (Kind::Bit, (1.0 - f) / 2.0),
        (Kind::Control, f),
    ];

    let mut paths = Vec::new();
    let tuple = PathState {
        prob: 1.0,
        len: 0,
        emitted: 1.0,
        controls: 0.0,
        info: 0.5,
    };
    enumerate_sf1(&m, &kinds, tuple, 0, &mut paths);

    // Vacuum search: a signal fails with probability f + (1 - f)(1 - Z).
    let fail = f + (1.0 - f) * (1.0 - m.search_success);
    let succeed = (1.0 - f) * m.search_success;
    let mut cum_prob = vec![0.0; max_cycle_len + 1];
    let mut cum_len = vec![0.0; max_cycle_len + 1];
    let mut w = succeed;
    for len in 1..=max_cycle_len {
        cum_prob[len] = cum_prob[len - 1] + w;
        cum_len[len] = cum_len[len - 1] + w * len as f64;
        w *= fail;
    }

    let (mut mass, mut consumed, mut emitted, mut controls, mut info) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for path in &paths {
        if path.len >= max_cycle_len {
            continue;
        }
        let budget = max_cycle_len - path.len;
        let search_mass = cum_prob[budget];
        let weight = path.prob * search_mass;
        mass += weight;
        consumed += path.prob * (cum_len[budget] + search_mass * path.len as f64);
        emitted += weight * path.emitted;
        controls += weight * path.controls;
        info += weight * path.info;
    }
    let residual = (1.0 - mass).max(0.0);
    if residual > ENUMERATION_RESIDUAL_LIMIT {
        return Err(Error::Truncated { residual });
    }
    let expectations = CycleExpectations {
        consumed,
        emitted,
        emitted_controls: controls,
        eve_info: info,
        completion: f64::NAN,
    };
    Ok(EnumeratedPoint {
        point: expectations.to_point(attack.mu_b),
        residual_mass: residual,
    })
}

/// Tallies of one outcome path of a tuple (everything after the opening
/// signal).
#[derive(Clone, Copy)]
struct PathState {
    prob: f64,
    len: usize,
    emitted: f64,
    controls: f64,
    info: f64,
}

impl PathState {
    fn finish(self, delivered: bool, out: &mut Vec<PathState>) {
        out.push(if delivered {
            self
        } else {
            PathState {
                emitted: 0.0,
                controls: 0.0,
                info: 0.0,
                ..self
            }
        });
    }
}

fn enumerate_sf1(m: &StageModel, kinds: &[(Kind, f64); 3], state: PathState, done: u32, out: &mut Vec<PathState>) {
    if done == m.t_sf1 {
        enumerate_sf2(m, kinds, state, &mut Vec::new(), out);
        return;
    }
    for &(kind, w) in kinds {
        let s = if kind == Kind::Control {
            m.sf1.q_control
        } else {
            m.sf1.p_info
        };
        let fail = PathState {
            prob: state.prob * w * (1.0 - s),
            len: state.len + 1,
            ..state
        };
        fail.finish(false, out);
        let ok = PathState {
            prob: state.prob * w * s,
            len: state.len + 1,
            emitted: state.emitted + 1.0,
            controls: state.controls + if kind == Kind::Control { 1.0 } else { 0.0 },
            info: state.info + if kind == Kind::Control { 0.0 } else { m.chi1 },
        };
        enumerate_sf1(m, kinds, ok, done + 1, out);
    }
}

fn enumerate_sf2(
    m: &StageModel,
    kinds: &[(Kind, f64); 3],
    state: PathState,
    run: &mut Vec<Kind>,
    out: &mut Vec<PathState>,
) {
    if run.len() as u32 == m.t_sf2 {
        enumerate_closing(m, state, run, run.len(), out);
        return;
    }
    for &(kind, w) in kinds {
        let s = if kind == Kind::Control {
            m.sf2.q_control
        } else {
            m.sf2.p_info
        };
        let fail = PathState {
            prob: state.prob * w * (1.0 - s),
            len: state.len + 1,
            ..state
        };
        enumerate_closing(m, fail, run, run.len(), out);
        run.push(kind);
        let ok = PathState {
            prob: state.prob * w * s,
            len: state.len + 1,
            ..state
        };
        enumerate_sf2(m, kinds, ok, run, out);
        run.pop();
    }
}

/// Tries positions `untested - 1, untested - 2, ...` of the SF2 run.
fn enumerate_closing(m: &StageModel, state: PathState, run: &[Kind], untested: usize, out: &mut Vec<PathState>) {
    if untested == 0 {
        state.finish(false, out);
        return;
    }
    let j = untested - 1;
    if run[j] == Kind::Control {
        enumerate_closing(m, state, run, j, out);
        return;
    }
    let left = &run[..j];
    let left_controls = left.iter().filter(|k| **k == Kind::Control).count() as f64;
    let left_bits = left.len() as f64 - left_controls;
    let closed = PathState {
        prob: state.prob * m.closing_success,
        emitted: state.emitted + left.len() as f64,
        controls: state.controls + left_controls,
        info: state.info + left_bits * m.chi2,
        ..state
    };
    closed.finish(true, out);
    let missed = PathState {
        prob: state.prob * (1.0 - m.closing_success),
        ..state
    };
    enumerate_closing(m, missed, run, j, out);
}
