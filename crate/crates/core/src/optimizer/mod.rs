//! Search over attack parameters and convex mixtures of attacks.
//!
//! Every evaluated attack becomes a column of a small linear program over
//! mixture weights: the weights sum to one, the mixture reproduces Bob's click
//! rate and (in strict mode) the control fraction among his clicks, and the
//! objective is the key rate left to Alice and Bob. Candidates come from a
//! fixed grid visited in a seed-dependent order, followed by Nelder-Mead
//! refinement of the most promising columns against the current LP duals
//! (column generation). The evaluation sequence does not depend on the
//! budget, so a larger budget only ever adds columns.

pub mod lp;

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{expected_statistics, StrategyPoint};
use crate::attack::AttackParams;
use crate::error::{ensure, Error, Result};
use crate::photonics::{click_probability, MeanPhotonNumber, ProtocolParams};
use crate::strategies::{
    bit_click_rate, bob_reference_click_rate, bs_point, constraint_residuals, key_rate, passive_point,
    strategy_click_rate, ConstraintResiduals, StatisticsMode, STRICT_TOLERANCE,
};
use lp::{LinearProgram, LpSolution, LpStatus};

/// Which attack family the search explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackFamily {
    /// Full soft-filtering attack, optionally mixed with beam splitting.
    #[serde(rename = "sf")]
    SoftFilter,
    /// Infinite Eve intensities and a single SF2 trial.
    #[serde(rename = "usd")]
    UsdLike,
    /// Beam splitting only.
    #[serde(rename = "bs")]
    BeamSplitting,
}

impl AttackFamily {
    pub fn label(self) -> &'static str {
        match self {
            Self::SoftFilter => "sf",
            Self::UsdLike => "usd",
            Self::BeamSplitting => "bs",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sf" => Ok(Self::SoftFilter),
            "usd" => Ok(Self::UsdLike),
            "bs" => Ok(Self::BeamSplitting),
            other => Err(Error::InvalidArgument(format!(
                "unknown attack {other:?} (expected sf, bs or usd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyComponent {
    Attack(AttackParams),
    BeamSplitting,
    /// Block every signal.
    Block,
}

impl StrategyComponent {
    pub fn point(&self, protocol: &ProtocolParams) -> Result<StrategyPoint> {
        match self {
            Self::Attack(a) => expected_statistics(protocol, a),
            Self::BeamSplitting => Ok(bs_point(protocol)),
            Self::Block => Ok(StrategyPoint::blocking()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedComponent {
    pub weight: f64,
    pub component: StrategyComponent,
}

/// Probabilistic strategy: each signal is handled by one component, chosen
/// with the given weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    pub components: Vec<WeightedComponent>,
}

impl MixedStrategy {
    pub const MAX_COMPONENTS: usize = 3;

    pub fn new(components: Vec<WeightedComponent>) -> Result<Self> {
        ensure(!components.is_empty(), || {
            "a mixture needs at least one component".into()
        })?;
        ensure(components.len() <= Self::MAX_COMPONENTS, || {
            format!("a mixture has at most {} components", Self::MAX_COMPONENTS)
        })?;
        ensure(components.iter().all(|c| c.weight >= 0.0), || {
            "weights must be non-negative".into()
        })?;
        let total: f64 = components.iter().map(|c| c.weight).sum();
        ensure((total - 1.0).abs() <= 1e-12, || {
            format!("weights sum to {total}, not 1")
        })?;
        Ok(Self { components })
    }

    pub fn pure(component: StrategyComponent) -> Self {
        Self {
            components: vec![WeightedComponent { weight: 1.0, component }],
        }
    }

    pub fn point(&self, protocol: &ProtocolParams) -> Result<StrategyPoint> {
        let points = self
            .components
            .iter()
            .map(|c| Ok((c.weight, c.component.point(protocol)?)))
            .collect::<Result<Vec<_>>>()?;
        mixture_combine(protocol, &points)
    }
}

/// Combines strategy points applied to disjoint shares of Alice's signals.
///
/// Emission and click rates add linearly in the weights. The control fraction
/// is recomputed from control clicks over all clicks and Eve's information
/// from information-state clicks, so that click rate and key rate of the
/// combination equal the weighted sums of the components' rates. The
/// delivered intensity is the single intensity reproducing the combined click
/// rate at the combined emission fraction.
pub fn mixture_combine(protocol: &ProtocolParams, points: &[(f64, StrategyPoint)]) -> Result<StrategyPoint> {
    ensure(!points.is_empty(), || "cannot combine an empty list of points".into())?;
    ensure(points.iter().all(|(w, _)| *w >= 0.0), || {
        "weights must be non-negative".into()
    })?;
    let total: f64 = points.iter().map(|(w, _)| w).sum();
    ensure((total - 1.0).abs() <= 1e-9, || format!("weights sum to {total}, not 1"))?;

    let mut emit = 0.0;
    let mut clicks = 0.0;
    let mut control_clicks = 0.0;
    let mut control_emits = 0.0;
    let mut bit_clicks = 0.0;
    let mut info_clicks = 0.0;
    let mut bit_emits = 0.0;
    let mut info_emits = 0.0;
    for (w, p) in points {
        let c = strategy_click_rate(p, protocol);
        emit += w * p.emit_fraction;
        clicks += w * c;
        control_clicks += w * c * p.control_fraction;
        control_emits += w * p.emit_fraction * p.control_fraction;
        let bits = w * c * (1.0 - p.control_fraction);
        bit_clicks += bits;
        info_clicks += bits * p.eve_info_per_emitted_bit;
        let bit_e = w * p.emit_fraction * (1.0 - p.control_fraction);
        bit_emits += bit_e;
        info_emits += bit_e * p.eve_info_per_emitted_bit;
    }
    let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let (control_fraction, eve_info) = if clicks > 0.0 {
        (control_clicks / clicks, div(info_clicks, bit_clicks))
    } else {
        (div(control_emits, emit), div(info_emits, bit_emits))
    };
    let mu_delivered = if emit <= 0.0 {
        MeanPhotonNumber::ZERO
    } else {
        let per_emit = (clicks / emit).min(1.0);
        if per_emit >= 1.0 {
            MeanPhotonNumber::INFINITE
        } else {
            MeanPhotonNumber::new((-(-per_emit).ln_1p() / protocol.eta).max(0.0))?
        }
    };
    Ok(StrategyPoint {
        emit_fraction: emit,
        control_fraction,
        eve_info_per_emitted_bit: eve_info,
        mu_delivered,
    })
}

/// Search controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Maximum number of attack evaluations.
    pub budget: usize,
    pub seed: u64,
    pub family: AttackFamily,
    /// Allow mixtures with the beam-splitting point (soft-filter family).
    pub include_bs: bool,
    /// Constraint tolerance, see [`ConstraintResiduals::satisfied`].
    pub tolerance: f64,
    /// Largest intensity Eve may send to Bob.
    pub mu_b_max: f64,
    /// Attacks evaluated before the search without counting towards the
    /// budget, whatever the mode.
    #[serde(default)]
    pub warm_start: Vec<AttackParams>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            budget: 20_000,
            seed: 1,
            family: AttackFamily::SoftFilter,
            include_bs: true,
            tolerance: STRICT_TOLERANCE,
            mu_b_max: 50.0,
            warm_start: Vec::new(),
        }
    }
}

impl SearchSettings {
    pub fn with_family(mut self, family: AttackFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: MixedStrategy,
    pub achieved_point: StrategyPoint,
    pub residuals: ConstraintResiduals,
    pub eve_info: f64,
    pub key_rate_bound: f64,
    pub evaluations: usize,
}

/// Evaluated column of the mixture program.
#[derive(Debug, Clone, Copy)]
struct Column {
    component: StrategyComponent,
    point: StrategyPoint,
}

/// Scaled LP column `[1, clicks / ref, control-click excess / ref]` and cost
/// `key rate / ref`.
struct Scaling<'a> {
    protocol: &'a ProtocolParams,
    mode: StatisticsMode,
    reference: f64,
}

impl Scaling<'_> {
    fn column(&self, point: &StrategyPoint) -> (f64, Vec<f64>) {
        let clicks = strategy_click_rate(point, self.protocol);
        let mut col = vec![1.0, clicks / self.reference];
        if self.mode == StatisticsMode::Strict {
            col.push(clicks * (point.control_fraction - self.protocol.f) / self.reference);
        }
        (key_rate(self.protocol, point) / self.reference, col)
    }

    fn rhs(&self) -> Vec<f64> {
        match self.mode {
            StatisticsMode::Strict => vec![1.0, 1.0, 0.0],
            StatisticsMode::Free => vec![1.0, 1.0],
        }
    }

    fn solve(&self, columns: &[Column]) -> LpSolution {
        let mut program = LinearProgram::new(self.rhs());
        for c in columns {
            let (cost, col) = self.column(&c.point);
            program.add_column(cost, &col);
        }
        program.solve()
    }

    fn reduced_cost(&self, lp: &LpSolution, point: &StrategyPoint) -> f64 {
        let (cost, col) = self.column(point);
        lp.reduced_cost(cost, &col)
    }
}

fn evaluate(protocol: &ProtocolParams, attack: &AttackParams) -> Option<StrategyPoint> {
    let point = expected_statistics(protocol, attack).ok()?;
    let finite = point.emit_fraction.is_finite()
        && point.control_fraction.is_finite()
        && point.eve_info_per_emitted_bit.is_finite();
    finite.then_some(point)
}

const T_SF1_GRID: [u32; 5] = [0, 1, 2, 3, 4];
const T_SF2_GRID: [u32; 7] = [1, 2, 4, 8, 16, 64, 256];
/// Eve's intensity in excess of `mu_a - mu_b`.
const EXCESS_GRID: [f64; 6] = [0.0, 0.003, 0.03, 0.3, 3.0, f64::INFINITY];
const MU_B_POINTS: usize = 12;
const USD_T_SF1_MAX: u32 = 8;
const USD_MU_B_POINTS: usize = 48;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn eve_intensity(mu_a: f64, mu_b: f64, excess: f64) -> f64 {
    if excess.is_infinite() {
        f64::INFINITY
    } else {
        (mu_a - mu_b).max(0.0) + excess
    }
}

fn mu_b_range(protocol: &ProtocolParams, settings: &SearchSettings) -> (f64, f64) {
    let reference = protocol.transmittance() * protocol.mu_a.value();
    let lo = (0.5 * reference).max(1e-9).min(settings.mu_b_max);
    (lo, settings.mu_b_max)
}

/// The fixed candidate grid for a family and mode, in canonical order.
fn candidate_grid(protocol: &ProtocolParams, mode: StatisticsMode, settings: &SearchSettings) -> Vec<AttackParams> {
    let mu_a = protocol.mu_a.value();
    let (lo, hi) = mu_b_range(protocol, settings);
    let usd_grid = |max_t_sf1: u32| {
        let mut grid = Vec::new();
        for t_sf1 in 0..=max_t_sf1 {
            for mu_b in log_grid(lo, hi, USD_MU_B_POINTS) {
                if let Ok(a) = AttackParams::from_values(t_sf1, 1, mu_b, f64::INFINITY, f64::INFINITY) {
                    grid.push(a);
                }
            }
        }
        grid
    };
    let mut grid = Vec::new();
    match settings.family {
        AttackFamily::BeamSplitting => {}
        AttackFamily::UsdLike => grid = usd_grid(USD_T_SF1_MAX),
        AttackFamily::SoftFilter => {
            // The USD-like attacks are soft-filtering attacks too; their
            // full grid is included so the family contains them.
            if mode == StatisticsMode::Strict {
                grid.extend(usd_grid(USD_T_SF1_MAX));
            }
            let t_sf1_grid: &[u32] = match mode {
                StatisticsMode::Strict => &T_SF1_GRID,
                StatisticsMode::Free => &T_SF1_GRID[..1],
            };
            for &t_sf1 in t_sf1_grid {
                for &t_sf2 in &T_SF2_GRID {
                    for mu_b in log_grid(lo, hi, MU_B_POINTS) {
                        for &x2 in &EXCESS_GRID {
                            let e2 = eve_intensity(mu_a, mu_b, x2);
                            let e1_grid: &[f64] = if t_sf1 == 0 { &[f64::NAN] } else { &EXCESS_GRID };
                            for &x1 in e1_grid {
                                let e1 = if x1.is_nan() { e2 } else { eve_intensity(mu_a, mu_b, x1) };
                                if let Ok(a) = AttackParams::from_values(t_sf1, t_sf2, mu_b, e1, e2) {
                                    grid.push(a);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Continuous coordinates of an attack with fixed counts and fixed
/// infinite/finite pattern: `ln mu_b` and the log-excess of every finite,
/// relevant Eve intensity.
#[derive(Debug, Clone, Copy)]
struct Encoding {
    t_sf1: u32,
    t_sf2: u32,
    mu_a: f64,
    e1_free: bool,
    e2_free: bool,
    e1_infinite: bool,
    e2_infinite: bool,
    mu_b_max: f64,
}

const MIN_EXCESS: f64 = 1e-6;

impl Encoding {
    fn of(attack: &AttackParams, mu_a: f64, mu_b_max: f64) -> Self {
        Self {
            t_sf1: attack.t_sf1,
            t_sf2: attack.t_sf2,
            mu_a,
            e1_free: attack.t_sf1 > 0 && !attack.mu_e1.is_infinite(),
            e2_free: !attack.mu_e2.is_infinite(),
            e1_infinite: attack.mu_e1.is_infinite(),
            e2_infinite: attack.mu_e2.is_infinite(),
            mu_b_max,
        }
    }

    fn encode(&self, attack: &AttackParams) -> Vec<f64> {
        let mu_b = attack.mu_b.value();
        let excess = |mu_e: f64| (mu_e - (self.mu_a - mu_b).max(0.0)).max(MIN_EXCESS).ln();
        let mut x = vec![mu_b.ln()];
        if self.e1_free {
            x.push(excess(attack.mu_e1.value()));
        }
        if self.e2_free {
            x.push(excess(attack.mu_e2.value()));
        }
        x
    }

    fn decode(&self, x: &[f64]) -> Option<AttackParams> {
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mu_b = x[0].exp();
        if !(mu_b > 0.0 && mu_b <= self.mu_b_max) {
            return None;
        }
        let base = (self.mu_a - mu_b).max(0.0);
        let mut k = 1;
        let mut next = || {
            let v = base + x[k].exp();
            k += 1;
            v
        };
        let e1 = if self.e1_free { Some(next()) } else { None };
        let e2 = if self.e2_free { next() } else { f64::INFINITY };
        let e2 = if self.e2_infinite { f64::INFINITY } else { e2 };
        let e1 = match e1 {
            Some(v) => v,
            None if self.e1_infinite => f64::INFINITY,
            None => e2.max(base),
        };
        AttackParams::from_values(self.t_sf1, self.t_sf2, mu_b, e1, e2).ok()
    }
}

/// Reduced-cost objective for one refinement run, with an evaluation cap.
struct Refinement<'a> {
    protocol: &'a ProtocolParams,
    scaling: &'a Scaling<'a>,
    lp: &'a LpSolution,
    encoding: Encoding,
    cap: usize,
    evaluated: &'a RefCell<Vec<Column>>,
    calls: &'a RefCell<usize>,
}

impl CostFunction for Refinement<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let mut calls = self.calls.borrow_mut();
        if *calls >= self.cap {
            return Ok(f64::INFINITY);
        }
        *calls += 1;
        let Some(attack) = self.encoding.decode(x) else {
            return Ok(f64::INFINITY);
        };
        let Some(point) = evaluate(self.protocol, &attack) else {
            return Ok(f64::INFINITY);
        };
        self.evaluated.borrow_mut().push(Column {
            component: StrategyComponent::Attack(attack),
            point,
        });
        Ok(self.scaling.reduced_cost(self.lp, &point))
    }
}

const REFINE_EVALS: usize = 80;
const REFINE_SEEDS_PER_ROUND: usize = 8;
const GRID_CHUNK: usize = 512;

fn refine(
    protocol: &ProtocolParams,
    scaling: &Scaling<'_>,
    lp: &LpSolution,
    seed: &AttackParams,
    cap: usize,
    mu_b_max: f64,
) -> (Vec<Column>, usize) {
    let encoding = Encoding::of(seed, protocol.mu_a.value(), mu_b_max);
    let x0 = encoding.encode(seed);
    let dim = x0.len();
    let mut simplex = vec![x0.clone()];
    for i in 0..dim {
        let mut v = x0.clone();
        v[i] += 0.7;
        simplex.push(v);
    }
    let evaluated = RefCell::new(Vec::new());
    let calls = RefCell::new(0usize);
    let problem = Refinement {
        protocol,
        scaling,
        lp,
        encoding,
        cap,
        evaluated: &evaluated,
        calls: &calls,
    };
    if let Ok(solver) = NelderMead::new(simplex).with_sd_tolerance(1e-12) {
        // Errors only end the run early; everything evaluated is kept.
        let _ = Executor::new(problem, solver)
            .configure(|state| state.max_iters(cap as u64))
            .run();
    }
    let used = *calls.borrow();
    (evaluated.into_inner(), used)
}

fn evaluate_all(protocol: &ProtocolParams, attacks: &[AttackParams]) -> Vec<Column> {
    attacks
        .par_iter()
        .map(|a| {
            evaluate(protocol, a).map(|point| Column {
                component: StrategyComponent::Attack(*a),
                point,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Maximises Eve's advantage (minimises the key rate left to Alice and Bob)
/// over mixtures of attacks of the configured family that reproduce Bob's
/// statistics.
pub fn optimize_attack(
    protocol: &ProtocolParams,
    mode: StatisticsMode,
    settings: &SearchSettings,
) -> Result<OptimizationResult> {
    protocol.validate()?;
    ensure(settings.budget >= 1, || "budget must be at least 1".into())?;
    let scaling = Scaling {
        protocol,
        mode,
        reference: bob_reference_click_rate(protocol),
    };
    ensure(scaling.reference > 0.0, || "Bob's reference click rate is zero".into())?;

    let mut columns = vec![Column {
        component: StrategyComponent::Block,
        point: StrategyPoint::blocking(),
    }];
    let bs_allowed = match settings.family {
        AttackFamily::BeamSplitting => true,
        AttackFamily::SoftFilter => settings.include_bs,
        AttackFamily::UsdLike => false,
    };
    if bs_allowed {
        columns.push(Column {
            component: StrategyComponent::BeamSplitting,
            point: bs_point(protocol),
        });
    }
    columns.extend(evaluate_all(protocol, &settings.warm_start));

    let mut grid = candidate_grid(protocol, mode, settings);
    grid.shuffle(&mut ChaCha8Rng::seed_from_u64(settings.seed));
    let mut evaluations = 0;
    for chunk in grid.chunks(GRID_CHUNK) {
        if evaluations >= settings.budget {
            break;
        }
        let take = chunk.len().min(settings.budget - evaluations);
        columns.extend(evaluate_all(protocol, &chunk[..take]));
        evaluations += take;
    }

    let mut lp = scaling.solve(&columns);
    let mut refined = vec![false; columns.len()];
    while evaluations < settings.budget {
        let mut ranked: Vec<(usize, f64)> = columns
            .iter()
            .enumerate()
            .filter(|(i, c)| !refined[*i] && matches!(c.component, StrategyComponent::Attack(_)))
            .map(|(i, c)| (i, scaling.reduced_cost(&lp, &c.point)))
            .collect();
        if ranked.is_empty() {
            break;
        }
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        ranked.truncate(REFINE_SEEDS_PER_ROUND);

        let mut jobs = Vec::new();
        let mut remaining = settings.budget - evaluations;
        for (i, _) in &ranked {
            if remaining == 0 {
                break;
            }
            let cap = REFINE_EVALS.min(remaining);
            remaining -= cap;
            refined[*i] = true;
            if let StrategyComponent::Attack(a) = columns[*i].component {
                jobs.push((a, cap));
            }
        }
        let outcomes: Vec<(Vec<Column>, usize)> = jobs
            .par_iter()
            .map(|(a, cap)| refine(protocol, &scaling, &lp, a, *cap, settings.mu_b_max))
            .collect();
        for (cols, used) in outcomes {
            evaluations += used;
            refined.extend(std::iter::repeat_n(false, cols.len()));
            columns.extend(cols);
        }
        // Runs that converged early leave budget for the next round.
        let spent_all = jobs.iter().map(|(_, c)| c).sum::<usize>() == 0;
        lp = scaling.solve(&columns);
        if spent_all {
            break;
        }
    }

    finish(protocol, mode, settings, &scaling, &columns, &lp, evaluations)
}

fn finish(
    protocol: &ProtocolParams,
    mode: StatisticsMode,
    settings: &SearchSettings,
    _scaling: &Scaling<'_>,
    columns: &[Column],
    lp: &LpSolution,
    evaluations: usize,
) -> Result<OptimizationResult> {
    let total: f64 = lp.basis.iter().map(|(_, w)| w).sum();
    let weighted: Vec<(f64, Column)> = lp
        .basis
        .iter()
        .filter(|(_, w)| *w > 1e-15)
        .map(|&(j, w)| (w / total.max(f64::MIN_POSITIVE), columns[j]))
        .collect();

    let residuals = if weighted.is_empty() {
        constraint_residuals(&StrategyPoint::blocking(), protocol, mode)
    } else {
        let points: Vec<(f64, StrategyPoint)> = weighted.iter().map(|(w, c)| (*w, c.point)).collect();
        constraint_residuals(&mixture_combine(protocol, &points)?, protocol, mode)
    };
    if lp.status == LpStatus::Infeasible || weighted.is_empty() {
        return Err(Error::NoFeasiblePoint {
            click_residual: residuals.click_residual,
            control_residual: residuals.control_residual,
        });
    }

    let components: Vec<WeightedComponent> = weighted
        .iter()
        .map(|(w, c)| WeightedComponent {
            weight: *w,
            component: c.component,
        })
        .collect();
    let points: Vec<(f64, StrategyPoint)> = weighted.iter().map(|(w, c)| (*w, c.point)).collect();
    let achieved = mixture_combine(protocol, &points)?;
    if !residuals.satisfied(protocol, settings.tolerance) {
        return Err(Error::NoFeasiblePoint {
            click_residual: residuals.click_residual,
            control_residual: residuals.control_residual,
        });
    }
    let key = points.iter().map(|(w, p)| w * key_rate(protocol, p)).sum::<f64>();
    Ok(OptimizationResult {
        best: MixedStrategy::new(components)?,
        achieved_point: achieved,
        residuals,
        eve_info: achieved.eve_info_per_emitted_bit,
        key_rate_bound: key,
        evaluations,
    })
}

/// Parameters shared by every point of a length curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub f: f64,
    pub eta: f64,
    pub delta_db_per_km: f64,
}

impl LinkParams {
    pub fn protocol(&self, mu_a: f64, length_km: f64) -> Result<ProtocolParams> {
        ProtocolParams::new(mu_a, self.f, self.eta, self.delta_db_per_km, length_km)
    }
}

/// Best key rate Alice can keep against one attack family at one intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub mu_a: f64,
    pub key_rate: f64,
    pub point: StrategyPoint,
    /// `None` when no attack of the family reproduces Bob's statistics, in
    /// which case the channel is left untouched.
    pub attack: Option<OptimizationResult>,
}

impl AttackOutcome {
    pub fn click_rate(&self, protocol: &ProtocolParams) -> f64 {
        strategy_click_rate(&self.point, protocol)
    }
}

/// Evaluates the strongest attack of the configured family against a fixed
/// protocol; an infeasible family leaves the channel passive.
pub fn attack_outcome(
    protocol: &ProtocolParams,
    mode: StatisticsMode,
    settings: &SearchSettings,
) -> Result<AttackOutcome> {
    if settings.family == AttackFamily::BeamSplitting {
        let point = bs_point(protocol);
        return Ok(AttackOutcome {
            mu_a: protocol.mu_a.value(),
            key_rate: key_rate(protocol, &point),
            point,
            attack: None,
        });
    }
    match optimize_attack(protocol, mode, settings) {
        Ok(result) => Ok(AttackOutcome {
            mu_a: protocol.mu_a.value(),
            key_rate: result.key_rate_bound,
            point: result.achieved_point,
            attack: Some(result),
        }),
        Err(Error::NoFeasiblePoint { .. }) => {
            let point = passive_point(protocol);
            Ok(AttackOutcome {
                mu_a: protocol.mu_a.value(),
                key_rate: key_rate(protocol, &point),
                point,
                attack: None,
            })
        }
        Err(e) => Err(e),
    }
}

/// Default bracket for Alice's intensity.
pub const MU_A_BRACKET: (f64, f64) = (0.0, 1.0);
const MU_A_GRID_POINTS: usize = 20;
const GOLDEN_ITERATIONS: usize = 14;

/// Alice's intensity in `(lo, hi]` maximising the key rate left by the
/// strongest attack of the configured family.
pub fn optimal_alice_intensity(
    link: &LinkParams,
    length_km: f64,
    mode: StatisticsMode,
    settings: &SearchSettings,
    bracket: (f64, f64),
) -> Result<AttackOutcome> {
    let (lo, hi) = bracket;
    ensure(lo >= 0.0 && hi > lo, || {
        format!("invalid intensity bracket ({lo}, {hi}]")
    })?;
    let eval = |mu_a: f64| -> Result<AttackOutcome> {
        let protocol = link.protocol(mu_a, length_km)?;
        attack_outcome(&protocol, mode, settings)
    };

    let grid: Vec<f64> = (1..=MU_A_GRID_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / MU_A_GRID_POINTS as f64)
        .collect();
    let outcomes = grid.par_iter().map(|&m| eval(m)).collect::<Result<Vec<_>>>()?;
    let best_index = outcomes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.key_rate.total_cmp(&b.1.key_rate).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("grid is not empty");
    let mut best = outcomes[best_index].clone();

    // Golden-section refinement inside the neighbouring grid cells.
    let mut a = if best_index == 0 {
        lo + (hi - lo) * 1e-3
    } else {
        grid[best_index - 1]
    };
    let mut b = if best_index + 1 < grid.len() {
        grid[best_index + 1]
    } else {
        hi
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..GOLDEN_ITERATIONS {
        for o in [&fc, &fd] {
            if o.key_rate > best.key_rate {
                best = o.clone();
            }
        }
        if fc.key_rate >= fd.key_rate {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    for o in [fc, fd] {
        if o.key_rate > best.key_rate {
            best = o;
        }
    }
    Ok(best)
}

/// Click probability of Eve's delivered pulses, kept here for reports.
pub fn delivered_click_probability(protocol: &ProtocolParams, point: &StrategyPoint) -> f64 {
    click_probability(protocol.eta, point.mu_delivered)
}

/// Information-state clicks of a point; re-exported for reports.
pub fn information_clicks(protocol: &ProtocolParams, point: &StrategyPoint) -> f64 {
    bit_click_rate(point, protocol)
}
