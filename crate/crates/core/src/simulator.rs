//! Seeded Monte Carlo execution of the adaptive four-stage attack.
//!
//! The attack is a renewal process over Alice's signal stream:
//!
//! 1. vacuum search, blocking every signal until an information state yields
//!    its vacuum slot (the opening boundary);
//! 2. `t_sf1` SF1 trials, any failure aborting the whole tuple;
//! 3. SF2 trials left to right until the first failure or `t_sf2` successes;
//! 4. a right-to-left vacuum search over the SF2 successes. The first success
//!    closes the tuple; without one the tuple is aborted.
//!
//! Random draws happen in a fixed order: search, boundary-information coin,
//! SF1 draws left to right, SF2 draws left to right, closing draws right to
//! left. Outcomes that are certain (a control state never yields a vacuum
//! slot) consume no draw, so scripted replays list only genuine draws.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::StrategyPoint;
use crate::attack::{AttackParams, StageModel};
use crate::error::{Error, Result};
use crate::photonics::ProtocolParams;

/// One two-slot signal sent by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    /// `|alpha>|0>`
    Bit0,
    /// `|0>|alpha>`
    Bit1,
    /// `|alpha>|alpha>`
    Control,
}

impl SignalKind {
    pub fn is_control(self) -> bool {
        self == SignalKind::Control
    }

    /// Which of the two time slots carry a pulse.
    pub fn slots(self) -> [bool; 2] {
        match self {
            SignalKind::Bit0 => [true, false],
            SignalKind::Bit1 => [false, true],
            SignalKind::Control => [true, true],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            SignalKind::Bit0 => '0',
            SignalKind::Bit1 => '1',
            SignalKind::Control => 'c',
        }
    }

    /// Parses a string such as `"c01c10110"`.
    pub fn parse_sequence(s: &str) -> Result<Vec<SignalKind>> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(SignalKind::Bit0),
                '1' => Ok(SignalKind::Bit1),
                'c' | 'C' => Ok(SignalKind::Control),
                other => Err(Error::InvalidArgument(format!("unknown signal symbol {other:?}"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fate {
    BlockedSearch,
    OpeningBoundary,
    EmittedSF1,
    EmittedSF2,
    ClosingVacuum,
    BlockedVacuumFail,
    BlockedSFFail,
    BlockedTupleAbort,
}

impl Fate {
    /// Delivered to Bob as a non-vacuum signal of intensity `mu_b`.
    pub fn is_emitted(self) -> bool {
        matches!(self, Fate::OpeningBoundary | Fate::EmittedSF1 | Fate::EmittedSF2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Fate::BlockedSearch => "blocked_search",
            Fate::OpeningBoundary => "opening_boundary",
            Fate::EmittedSF1 => "emitted_sf1",
            Fate::EmittedSF2 => "emitted_sf2",
            Fate::ClosingVacuum => "closing_vacuum",
            Fate::BlockedVacuumFail => "blocked_vacuum_fail",
            Fate::BlockedSFFail => "blocked_sf_fail",
            Fate::BlockedTupleAbort => "blocked_tuple_abort",
        }
    }
}

impl fmt::Display for Fate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalFate {
    pub fate: Fate,
    /// Eve's information about the bit carried by this signal.
    pub eve_info: f64,
}

impl SignalFate {
    fn blocked(fate: Fate) -> Self {
        Self { fate, eve_info: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TupleOutcome {
    Completed,
    Aborted,
    /// The input ended during the vacuum search.
    SearchOnly,
}

/// One renewal cycle: the search that preceded a tuple, and the tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TupleRecord {
    /// First signal of the search phase.
    pub cycle_start: usize,
    /// Index of the opening boundary (equal to `end` for `SearchOnly`).
    pub opening: usize,
    /// One past the last signal of the cycle.
    pub end: usize,
    pub outcome: TupleOutcome,
    pub emitted: u64,
    pub emitted_controls: u64,
    pub eve_info: f64,
}

impl TupleRecord {
    pub fn consumed(&self) -> u64 {
        (self.end - self.cycle_start) as u64
    }

    pub fn emitted_bits(&self) -> u64 {
        self.emitted - self.emitted_controls
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub signals_consumed: u64,
    pub signals_emitted: u64,
    pub controls_emitted: u64,
    pub bits_emitted: u64,
    pub eve_info_total: f64,
    pub tuples_completed: u64,
    pub tuples_aborted: u64,
}

impl RunStats {
    /// Sums statistics of independent runs.
    pub fn merge(&self, other: &RunStats) -> RunStats {
        RunStats {
            signals_consumed: self.signals_consumed + other.signals_consumed,
            signals_emitted: self.signals_emitted + other.signals_emitted,
            controls_emitted: self.controls_emitted + other.controls_emitted,
            bits_emitted: self.bits_emitted + other.bits_emitted,
            eve_info_total: self.eve_info_total + other.eve_info_total,
            tuples_completed: self.tuples_completed + other.tuples_completed,
            tuples_aborted: self.tuples_aborted + other.tuples_aborted,
        }
    }

    pub fn from_fates(kinds: &[SignalKind], fates: &[SignalFate], tuples: &[TupleRecord]) -> RunStats {
        let mut stats = RunStats {
            signals_consumed: fates.len() as u64,
            ..RunStats::default()
        };
        for (kind, fate) in kinds.iter().zip(fates) {
            if fate.fate.is_emitted() {
                stats.signals_emitted += 1;
                if kind.is_control() {
                    stats.controls_emitted += 1;
                } else {
                    stats.bits_emitted += 1;
                }
            }
            stats.eve_info_total += fate.eve_info;
        }
        for t in tuples {
            match t.outcome {
                TupleOutcome::Completed => stats.tuples_completed += 1,
                TupleOutcome::Aborted => stats.tuples_aborted += 1,
                TupleOutcome::SearchOnly => {}
            }
        }
        stats
    }
}

/// Fates, per-cycle records and totals of one execution.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRun {
    pub fates: Vec<SignalFate>,
    pub tuples: Vec<TupleRecord>,
    pub stats: RunStats,
}

/// Which random decision a draw resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawKind {
    Search,
    BoundaryInfo,
    Sf1,
    Sf2,
    Closing,
}

/// Source of Bernoulli outcomes for the state machine.
pub trait DrawSource {
    fn draw(&mut self, kind: DrawKind, success_probability: f64) -> Result<bool>;
}

pub struct RngDraws<R: Rng>(pub R);

impl<R: Rng> DrawSource for RngDraws<R> {
    fn draw(&mut self, _kind: DrawKind, p: f64) -> Result<bool> {
        Ok(self.0.random::<f64>() < p)
    }
}

/// Replays a fixed list of outcomes.
pub struct ScriptedDraws<'a> {
    script: &'a [bool],
    next: usize,
}

impl<'a> ScriptedDraws<'a> {
    pub fn new(script: &'a [bool]) -> Self {
        Self { script, next: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl DrawSource for ScriptedDraws<'_> {
    fn draw(&mut self, _kind: DrawKind, _p: f64) -> Result<bool> {
        let outcome = *self
            .script
            .get(self.next)
            .ok_or(Error::ScriptExhausted { index: self.next })?;
        self.next += 1;
        Ok(outcome)
    }
}

/// Alice's random signal sequence: each bit value with probability
/// `(1 - f) / 2`, a control state with probability `f`.
pub fn generate_sequence(n: usize, f: f64, seed: u64) -> Vec<SignalKind> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_bit = (1.0 - f) / 2.0;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if u < f {
                SignalKind::Control
            } else if u < f + half_bit {
                SignalKind::Bit0
            } else {
                SignalKind::Bit1
            }
        })
        .collect()
}

/// Runs the attack over `kinds` with draws from a ChaCha8 stream seeded by
/// `seed`.
pub fn run_attack(
    kinds: &[SignalKind],
    protocol: &ProtocolParams,
    attack: &AttackParams,
    seed: u64,
) -> Result<AttackRun> {
    let model = StageModel::resolve(protocol, attack)?;
    let mut draws = RngDraws(ChaCha8Rng::seed_from_u64(seed));
    execute(kinds, &model, &mut draws)
}

/// Two-slot amplitude emitted towards Bob for one signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Vacuum,
    Beta,
}

/// Re-executes the state machine with every random draw taken from `script`.
/// Returns the fates and the pattern sent to Bob.
pub fn replay_with_outcomes(
    kinds: &[SignalKind],
    attack: &AttackParams,
    script: &[bool],
) -> Result<(Vec<SignalFate>, Vec<[Slot; 2]>)> {
    let model = StageModel::scripted(attack);
    let mut draws = ScriptedDraws::new(script);
    let run = execute(kinds, &model, &mut draws)?;
    let pattern = emitted_pattern(kinds, &run.fates);
    Ok((run.fates, pattern))
}

pub fn emitted_pattern(kinds: &[SignalKind], fates: &[SignalFate]) -> Vec<[Slot; 2]> {
    kinds
        .iter()
        .zip(fates)
        .map(|(kind, fate)| {
            if fate.fate.is_emitted() {
                kind.slots().map(|on| if on { Slot::Beta } else { Slot::Vacuum })
            } else {
                [Slot::Vacuum, Slot::Vacuum]
            }
        })
        .collect()
}

/// The attack state machine, generic over the source of random outcomes.
pub fn execute<D: DrawSource>(kinds: &[SignalKind], model: &StageModel, draws: &mut D) -> Result<AttackRun> {
    let n = kinds.len();
    let mut fates: Vec<SignalFate> = Vec::with_capacity(n);
    let mut tuples = Vec::new();
    let mut i = 0;

    while i < n {
        let cycle_start = i;

        // Stage 1: vacuum search.
        let mut opened = false;
        while i < n {
            let kind = kinds[i];
            let found = !kind.is_control() && draws.draw(DrawKind::Search, model.search_success)?;
            i += 1;
            if found {
                opened = true;
                break;
            }
            fates.push(SignalFate::blocked(Fate::BlockedSearch));
        }
        if !opened {
            tuples.push(TupleRecord {
                cycle_start,
                opening: i,
                end: i,
                outcome: TupleOutcome::SearchOnly,
                emitted: 0,
                emitted_controls: 0,
                eve_info: 0.0,
            });
            break;
        }

        let opening = i - 1;
        let full_info = draws.draw(DrawKind::BoundaryInfo, 0.5)?;
        fates.push(SignalFate {
            fate: Fate::OpeningBoundary,
            eve_info: if full_info { 1.0 } else { 0.0 },
        });

        // Stage 2: SF1 trials; a failure (or running out of input) aborts.
        let mut aborted = false;
        for _ in 0..model.t_sf1 {
            if i >= n {
                aborted = true;
                break;
            }
            let kind = kinds[i];
            let ok = draws.draw(DrawKind::Sf1, model.sf1.for_control(kind.is_control()))?;
            i += 1;
            if !ok {
                fates.push(SignalFate::blocked(Fate::BlockedTupleAbort));
                aborted = true;
                break;
            }
            let eve_info = if kind.is_control() { 0.0 } else { model.chi1 };
            fates.push(SignalFate {
                fate: Fate::EmittedSF1,
                eve_info,
            });
        }

        if !aborted {
            // Stage 3: SF2 run.
            let sf2_start = i;
            let mut successes = 0u32;
            while successes < model.t_sf2 && i < n {
                let kind = kinds[i];
                let ok = draws.draw(DrawKind::Sf2, model.sf2.for_control(kind.is_control()))?;
                i += 1;
                if ok {
                    successes += 1;
                    let eve_info = if kind.is_control() { 0.0 } else { model.chi2 };
                    fates.push(SignalFate {
                        fate: Fate::EmittedSF2,
                        eve_info,
                    });
                } else {
                    fates.push(SignalFate::blocked(Fate::BlockedSFFail));
                    break;
                }
            }
            let sf2_end = sf2_start + successes as usize;

            // Closing vacuum search, right to left.
            let mut closing = None;
            for j in (sf2_start..sf2_end).rev() {
                let found = !kinds[j].is_control() && draws.draw(DrawKind::Closing, model.closing_success)?;
                if found {
                    closing = Some(j);
                    break;
                }
            }
            match closing {
                Some(j) => {
                    fates[j] = SignalFate::blocked(Fate::ClosingVacuum);
                    for fate in &mut fates[j + 1..sf2_end] {
                        *fate = SignalFate::blocked(Fate::BlockedVacuumFail);
                    }
                }
                None => aborted = true,
            }
        }

        if aborted {
            for fate in &mut fates[opening..i] {
                *fate = SignalFate::blocked(Fate::BlockedTupleAbort);
            }
        }

        let mut record = TupleRecord {
            cycle_start,
            opening,
            end: i,
            outcome: if aborted {
                TupleOutcome::Aborted
            } else {
                TupleOutcome::Completed
            },
            emitted: 0,
            emitted_controls: 0,
            eve_info: 0.0,
        };
        for (kind, fate) in kinds[opening..i].iter().zip(&fates[opening..i]) {
            if fate.fate.is_emitted() {
                record.emitted += 1;
                if kind.is_control() {
                    record.emitted_controls += 1;
                }
            }
            record.eve_info += fate.eve_info;
        }
        tuples.push(record);
    }

    debug_assert_eq!(fates.len(), n);
    let stats = RunStats::from_fates(kinds, &fates, &tuples);
    Ok(AttackRun { fates, tuples, stats })
}

/// True iff the emitted signals form tuples that preserve interference on
/// Bob's monitoring line: each tuple is `opening, SF1*, SF2*` on consecutive
/// signals, followed by a closing vacuum, preceded by a non-emitted signal (or
/// the start of the stream), and its opening and closing signals are
/// information states.
pub fn structural_visibility_check(kinds: &[SignalKind], fates: &[SignalFate]) -> bool {
    if kinds.len() != fates.len() {
        return false;
    }
    #[derive(PartialEq)]
    enum State {
        Outside,
        Sf1,
        Sf2,
    }
    let mut state = State::Outside;
    for (kind, fate) in kinds.iter().zip(fates) {
        state = match (state, fate.fate) {
            (State::Outside, Fate::OpeningBoundary) => {
                if kind.is_control() {
                    return false;
                }
                State::Sf1
            }
            (State::Outside, f) if !f.is_emitted() && f != Fate::ClosingVacuum => State::Outside,
            (State::Sf1, Fate::EmittedSF1) => State::Sf1,
            (State::Sf1 | State::Sf2, Fate::EmittedSF2) => State::Sf2,
            (State::Sf1 | State::Sf2, Fate::ClosingVacuum) => {
                if kind.is_control() {
                    return false;
                }
                State::Outside
            }
            _ => return false,
        };
    }
    state == State::Outside
}

/// Writes one tab-separated line per signal: `index kind fate eve_info`.
pub fn write_trace<W: Write>(mut out: W, kinds: &[SignalKind], fates: &[SignalFate]) -> Result<()> {
    writeln!(out, "# index\tkind\tfate\teve_info")?;
    for (i, (kind, fate)) in kinds.iter().zip(fates).enumerate() {
        writeln!(out, "{i}\t{}\t{}\t{}", kind.symbol(), fate.fate, fate.eve_info)?;
    }
    Ok(())
}

/// Standard errors of the ratio estimates in a [`StrategyPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointErrors {
    pub emit_fraction: f64,
    pub control_fraction: f64,
    pub eve_info_per_emitted_bit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub point: StrategyPoint,
    pub std_errors: PointErrors,
    pub cycles: usize,
}

/// Renewal-reward estimate of the strategy point. Cycles are independent, so
/// each ratio `sum(Y) / sum(X)` gets the delta-method standard error
/// `sqrt(sum((Y - r X)^2)) / sum(X)`.
pub fn estimate_point(run: &AttackRun, mu_b: crate::photonics::MeanPhotonNumber) -> PointEstimate {
    let cycles: Vec<&TupleRecord> = run
        .tuples
        .iter()
        .filter(|t| t.outcome != TupleOutcome::SearchOnly)
        .collect();
    let ratio = |y: &dyn Fn(&TupleRecord) -> f64, x: &dyn Fn(&TupleRecord) -> f64| {
        let sy: f64 = cycles.iter().map(|t| y(t)).sum();
        let sx: f64 = cycles.iter().map(|t| x(t)).sum();
        if sx <= 0.0 {
            return (0.0, 0.0);
        }
        let r = sy / sx;
        let ss: f64 = cycles.iter().map(|t| (y(t) - r * x(t)).powi(2)).sum();
        (r, ss.sqrt() / sx)
    };
    let (emit, emit_se) = ratio(&|t| t.emitted as f64, &|t| t.consumed() as f64);
    let (ctrl, ctrl_se) = ratio(&|t| t.emitted_controls as f64, &|t| t.emitted as f64);
    let (info, info_se) = ratio(&|t| t.eve_info, &|t| t.emitted_bits() as f64);
    PointEstimate {
        point: StrategyPoint {
            emit_fraction: emit,
            control_fraction: ctrl,
            eve_info_per_emitted_bit: info,
            mu_delivered: mu_b,
        },
        std_errors: PointErrors {
            emit_fraction: emit_se,
            control_fraction: ctrl_se,
            eve_info_per_emitted_bit: info_se,
        },
        cycles: cycles.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonics::MeanPhotonNumber;

    fn protocol() -> ProtocolParams {
        ProtocolParams::new(0.5, 0.1, 0.1, 0.25, 50.0).unwrap()
    }

    fn attack(t1: u32, t2: u32, mu_b: f64, e1: f64, e2: f64) -> AttackParams {
        AttackParams::from_values(t1, t2, mu_b, e1, e2).unwrap()
    }

    #[test]
    fn sequence_without_controls() {
        let kinds = generate_sequence(10, 0.0, 3);
        assert_eq!(kinds.len(), 10);
        assert!(kinds.iter().all(|k| !k.is_control()));
    }

    #[test]
    fn sequence_is_deterministic() {
        assert_eq!(generate_sequence(5, 0.5, 1), generate_sequence(5, 0.5, 1));
        assert_ne!(generate_sequence(64, 0.5, 1), generate_sequence(64, 0.5, 2));
    }

    #[test]
    fn sequence_control_fraction_within_binomial_bound() {
        let kinds = generate_sequence(1_000_000, 0.1, 7);
        let controls = kinds.iter().filter(|k| k.is_control()).count() as f64;
        let sigma = (1e6f64 * 0.1 * 0.9).sqrt();
        assert!((controls - 1e5).abs() < 4.0 * sigma, "controls = {controls}");
        let bit0 = kinds.iter().filter(|k| **k == SignalKind::Bit0).count() as f64;
        let sigma0 = (1e6f64 * 0.45 * 0.55).sqrt();
        assert!((bit0 - 4.5e5).abs() < 4.0 * sigma0);
    }

    #[test]
    fn all_controls_never_open_a_tuple() {
        let kinds = vec![SignalKind::Control; 100];
        let run = run_attack(&kinds, &protocol(), &attack(1, 3, 0.2, 0.4, 0.4), 5).unwrap();
        assert_eq!(run.stats.signals_emitted, 0);
        assert_eq!(run.stats.eve_info_total, 0.0);
        assert!(run.fates.iter().all(|f| f.fate == Fate::BlockedSearch));
    }

    #[test]
    fn single_sf2_failure_aborts_tuple() {
        let kinds = [SignalKind::Bit0, SignalKind::Bit1];
        // search success, coin, SF2 failure
        let (fates, pattern) =
            replay_with_outcomes(&kinds, &attack(0, 1, 0.2, 0.4, 0.4), &[true, true, false]).unwrap();
        assert!(fates
            .iter()
            .all(|f| f.fate == Fate::BlockedTupleAbort && f.eve_info == 0.0));
        assert!(pattern.iter().all(|s| *s == [Slot::Vacuum, Slot::Vacuum]));
    }

    #[test]
    fn empty_replay() {
        let (fates, pattern) = replay_with_outcomes(&[], &attack(2, 4, 0.2, 0.4, 0.4), &[]).unwrap();
        assert!(fates.is_empty() && pattern.is_empty());
    }

    #[test]
    fn exhausted_script_reports_index() {
        let kinds = SignalKind::parse_sequence("0101").unwrap();
        let err = replay_with_outcomes(&kinds, &attack(1, 2, 0.2, 0.4, 0.4), &[false, true]).unwrap_err();
        assert_eq!(err, Error::ScriptExhausted { index: 2 });
    }

    #[test]
    fn infeasible_attack_is_rejected_before_running() {
        let err = run_attack(&[SignalKind::Bit0], &protocol(), &attack(0, 1, 0.1, 0.1, 0.1), 1).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn run_is_deterministic_and_conserves_signals() {
        let p = protocol();
        let a = attack(1, 3, 0.2, 0.4, 0.4);
        let kinds = generate_sequence(20_000, p.f, 11);
        let r1 = run_attack(&kinds, &p, &a, 99).unwrap();
        let r2 = run_attack(&kinds, &p, &a, 99).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.fates.len(), kinds.len());
        let s = r1.stats;
        assert_eq!(s.signals_emitted, s.controls_emitted + s.bits_emitted);
        assert!(s.signals_emitted <= s.signals_consumed);
        let emitted = r1.fates.iter().filter(|f| f.fate.is_emitted()).count() as u64;
        assert_eq!(emitted, s.signals_emitted);
        let cycle_total: u64 = r1.tuples.iter().map(|t| t.consumed()).sum();
        assert_eq!(cycle_total, kinds.len() as u64);
        assert!(structural_visibility_check(&kinds, &r1.fates));
    }

    #[test]
    fn opening_is_never_a_control() {
        let p = protocol();
        let kinds = generate_sequence(5_000, 0.4, 2);
        let run = run_attack(&kinds, &p, &attack(2, 8, 0.3, 0.5, 0.5), 4).unwrap();
        for (k, f) in kinds.iter().zip(&run.fates) {
            if f.fate == Fate::OpeningBoundary || f.fate == Fate::ClosingVacuum {
                assert!(!k.is_control());
            }
            if f.eve_info > 0.0 {
                assert!(!k.is_control());
                assert!(matches!(
                    f.fate,
                    Fate::OpeningBoundary | Fate::EmittedSF1 | Fate::EmittedSF2
                ));
            }
        }
    }

    #[test]
    fn lossless_sf2_rarely_fails() {
        let p = ProtocolParams::new(0.5, 0.1, 0.1, 0.25, 100.0).unwrap();
        let t = p.transmittance();
        let a = attack(0, 10_000, 0.5 * t, 0.5 * (1.0 - t), 0.5 * (1.0 - t));
        let kinds = generate_sequence(200_000, p.f, 8);
        let run = run_attack(&kinds, &p, &a, 3).unwrap();
        let sf_fail = run.fates.iter().filter(|f| f.fate == Fate::BlockedSFFail).count();
        assert!((sf_fail as f64) / (kinds.len() as f64) < 1e-3);
    }

    #[test]
    fn visibility_rejects_misordered_tuple() {
        let kinds = SignalKind::parse_sequence("010").unwrap();
        let fates = [Fate::EmittedSF2, Fate::OpeningBoundary, Fate::ClosingVacuum]
            .map(|fate| SignalFate { fate, eve_info: 0.0 });
        assert!(!structural_visibility_check(&kinds, &fates));
        let blocked = [Fate::BlockedSearch; 3].map(|fate| SignalFate { fate, eve_info: 0.0 });
        assert!(structural_visibility_check(&kinds, &blocked));
        assert!(!structural_visibility_check(&kinds[..2], &blocked));
        let unclosed = [Fate::OpeningBoundary, Fate::EmittedSF2, Fate::BlockedSFFail]
            .map(|fate| SignalFate { fate, eve_info: 0.0 });
        assert!(!structural_visibility_check(&kinds, &unclosed));
    }

    #[test]
    fn trace_columns() {
        let kinds = SignalKind::parse_sequence("c0").unwrap();
        let fates = [Fate::BlockedSearch, Fate::BlockedSearch].map(|fate| SignalFate { fate, eve_info: 0.0 });
        let mut buf = Vec::new();
        write_trace(&mut buf, &kinds, &fates).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# index\tkind\tfate\teve_info\n0\tc\tblocked_search\t0\n1\t0\tblocked_search\t0\n"
        );
    }

    #[test]
    fn merged_stats_are_order_independent() {
        let p = protocol();
        let a = attack(1, 4, 0.2, 0.4, 0.4);
        let runs: Vec<RunStats> = (0..4)
            .map(|s| {
                run_attack(&generate_sequence(5000, p.f, s), &p, &a, s + 100)
                    .unwrap()
                    .stats
            })
            .collect();
        let fwd = runs.iter().fold(RunStats::default(), |acc, s| acc.merge(s));
        let rev = runs.iter().rev().fold(RunStats::default(), |acc, s| acc.merge(s));
        assert_eq!(fwd.signals_emitted, rev.signals_emitted);
        assert_eq!(fwd.signals_consumed, 20_000);
        assert!((fwd.eve_info_total - rev.eve_info_total).abs() < 1e-9);
        let _ = MeanPhotonNumber::ZERO;
    }
}
