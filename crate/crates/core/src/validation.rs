//! Self-checks run by the `validate` command: unitarity of the soft-filter
//! probabilities, the analytic model against brute-force enumeration, and
//! the scripted nine-signal replay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{enumerate_small, expected_statistics};
use crate::attack::AttackParams;
use crate::error::Result;
use crate::photonics::{holevo_binary, MeanPhotonNumber, ProtocolParams};
use crate::simulator::{replay_with_outcomes, Fate, SignalFate, SignalKind, Slot};
use crate::soft_filter::{sf1_probs, sf2_probs, unitarity_residual, SFOutcomeProbs, Stage};

/// Deliberate fault injected into a check to confirm it can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Scale the SF2 control success probability by 1.01.
    WrongQ2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

pub const UNITARITY_TRIPLES: usize = 10_000;
pub const UNITARITY_TOLERANCE: f64 = 1e-9;
pub const ENUMERATION_CASES: usize = 20;
pub const ENUMERATION_TOLERANCE: f64 = 1e-8;

/// Random feasible `(mu_a, mu_b, mu_e)` triple with `mu_b + mu_e >= mu_a`.
pub fn random_feasible_triple<R: Rng>(rng: &mut R) -> (MeanPhotonNumber, MeanPhotonNumber, MeanPhotonNumber) {
    let mu_a = rng.random_range(0.01..2.0);
    let mu_b = rng.random_range(0.01..2.0);
    let floor = f64::max(mu_a - mu_b, 0.0);
    let mu_e = floor + rng.random_range(0.0..2.0);
    (
        MeanPhotonNumber::new(mu_a).expect("positive"),
        MeanPhotonNumber::new(mu_b).expect("positive"),
        MeanPhotonNumber::new(mu_e).expect("positive"),
    )
}

fn mutate_q2(probs: SFOutcomeProbs, mutation: Option<Mutation>) -> SFOutcomeProbs {
    match mutation {
        Some(Mutation::WrongQ2) => SFOutcomeProbs {
            q_control: (probs.q_control * 1.01).min(1.0),
            ..probs
        },
        None => probs,
    }
}

/// Largest SF1 and SF2 unitarity residuals over `n` seeded random triples.
pub fn unitarity_suite(n: usize, seed: u64, mutation: Option<Mutation>) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let (a, b, e) = random_feasible_triple(&mut rng);
        let p1 = sf1_probs(a, b, e)?;
        worst1 = worst1.max(unitarity_residual(Stage::Sf1, a, b, e, p1));
        let p2 = mutate_q2(sf2_probs(a, b, e)?, mutation);
        worst2 = worst2.max(unitarity_residual(Stage::Sf2, a, b, e, p2));
    }
    Ok((worst1, worst2))
}

/// Random protocol and attack small enough for [`enumerate_small`].
pub fn random_small_case<R: Rng>(rng: &mut R) -> Result<(ProtocolParams, AttackParams)> {
    let mu_a = rng.random_range(0.2..1.0);
    let f = rng.random_range(0.0..0.4);
    let length = rng.random_range(0.0..150.0);
    let protocol = ProtocolParams::new(mu_a, f, 0.1, 0.25, length)?;
    let mu_b = rng.random_range(0.05..1.0);
    let floor = f64::max(mu_a - mu_b, 0.0);
    let attack = AttackParams::from_values(
        rng.random_range(0..=2),
        rng.random_range(1..=3),
        mu_b,
        floor + rng.random_range(0.0..1.0),
        floor + rng.random_range(0.0..1.0),
    )?;
    Ok((protocol, attack))
}

/// Path-length cap used when enumerating the random small cases.
pub const ENUMERATION_CYCLE_CAP: usize = 4_000;

/// Largest field difference between the analytic model and enumeration.
pub fn enumeration_suite(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (protocol, attack) = random_small_case(&mut rng)?;
        let exact = expected_statistics(&protocol, &attack)?;
        let brute = enumerate_small(&protocol, &attack, ENUMERATION_CYCLE_CAP)?.point;
        for (x, y) in [
            (exact.emit_fraction, brute.emit_fraction),
            (exact.control_fraction, brute.control_fraction),
            (exact.eve_info_per_emitted_bit, brute.eve_info_per_emitted_bit),
        ] {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// The nine-signal example `c01c10110` with two SF1 trials.
pub struct ReplayFixture {
    pub kinds: Vec<SignalKind>,
    pub attack: AttackParams,
    /// Search fails on 2, succeeds on 3; SF1 succeeds on 4 and fails on 5;
    /// the resumed search fails on 6 to 9.
    pub abort_script: Vec<bool>,
    /// Search fails on 2, succeeds on 3; SF1 succeeds on 4 and 5, SF2 on
    /// 6, 7, 8 and fails on 9; the closing search fails on 8 and succeeds
    /// on 7.
    pub complete_script: Vec<bool>,
}

impl ReplayFixture {
    pub fn new() -> Result<Self> {
        Ok(Self {
            kinds: SignalKind::parse_sequence("c01c10110")?,
            attack: AttackParams::from_values(2, 8, 0.2, 0.4, 0.6)?,
            // search(2), search(3), coin, sf1(4), sf1(5), search(6..9)
            abort_script: vec![false, true, true, true, false, false, false, false, false],
            // search(2), search(3), coin, sf1(4), sf1(5), sf2(6..9), closing(8), closing(7)
            complete_script: vec![false, true, true, true, true, true, true, true, false, false, true],
        })
    }

    /// Expected pattern for the completed case: signals 3 to 6 are forwarded
    /// at intensity `mu_b`, everything else is vacuum.
    pub fn expected_complete_pattern(&self) -> Vec<[Slot; 2]> {
        use Slot::{Beta as B, Vacuum as V};
        vec![[V, V], [V, V], [V, B], [B, B], [V, B], [B, V], [V, V], [V, V], [V, V]]
    }

    /// Expected information ledger for signals 3 to 9 of the completed case.
    pub fn expected_complete_info(&self) -> [f64; 7] {
        let chi1 = holevo_binary(self.attack.mu_e1);
        let chi2 = holevo_binary(self.attack.mu_e2);
        [1.0, 0.0, chi1, chi2, 0.0, 0.0, 0.0]
    }
}

fn describe(fates: &[SignalFate]) -> String {
    fates.iter().map(|f| f.fate.name()).collect::<Vec<_>>().join(",")
}

/// Replays both scripted cases and compares against the expected outcome.
pub fn replay_check() -> Result<(bool, String)> {
    let fx = ReplayFixture::new()?;
    let (fates_a, pattern_a) = replay_with_outcomes(&fx.kinds, &fx.attack, &fx.abort_script)?;
    let blocked_a = fates_a[..5].iter().all(|f| !f.fate.is_emitted())
        && pattern_a[..5].iter().all(|p| *p == [Slot::Vacuum, Slot::Vacuum])
        && fates_a.iter().all(|f| f.eve_info == 0.0);

    let (fates_b, pattern_b) = replay_with_outcomes(&fx.kinds, &fx.attack, &fx.complete_script)?;
    let info_b: Vec<f64> = fates_b[2..].iter().map(|f| f.eve_info).collect();
    let matches_b = pattern_b == fx.expected_complete_pattern()
        && info_b == fx.expected_complete_info()
        && fates_b[6].fate == Fate::ClosingVacuum;
    Ok((
        blocked_a && matches_b,
        format!("case a: [{}]; case b: [{}]", describe(&fates_a), describe(&fates_b)),
    ))
}

/// Runs every check; `mutation` injects a known fault.
pub fn run_validation(seed: u64, mutation: Option<Mutation>) -> Result<ValidationReport> {
    let mut checks = Vec::new();

    let (r1, r2) = unitarity_suite(UNITARITY_TRIPLES, seed, mutation)?;
    checks.push(CheckResult {
        name: "sf1_unitarity".into(),
        passed: r1 < UNITARITY_TOLERANCE,
        detail: format!("max residual {r1:e} over {UNITARITY_TRIPLES} triples"),
    });
    checks.push(CheckResult {
        name: "sf2_unitarity".into(),
        passed: r2 < UNITARITY_TOLERANCE,
        detail: format!("max residual {r2:e} over {UNITARITY_TRIPLES} triples"),
    });

    let worst = enumeration_suite(ENUMERATION_CASES, seed)?;
    checks.push(CheckResult {
        name: "analytic_vs_enumeration".into(),
        passed: worst < ENUMERATION_TOLERANCE,
        detail: format!("max field difference {worst:e} over {ENUMERATION_CASES} attacks"),
    });

    let (ok, detail) = replay_check()?;
    checks.push(CheckResult {
        name: "scripted_replay".into(),
        passed: ok,
        detail,
    });

    Ok(ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
