//! The work behind each `cowsf` subcommand, kept free of argument parsing so
//! that it can be driven from tests and examples.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::expected_statistics;
use crate::attack::AttackParams;
use crate::config::{MuASetting, RunConfig};
use crate::error::{Error, Result};
use crate::optimizer::{
    attack_outcome, optimal_alice_intensity, optimize_attack, AttackFamily, AttackOutcome, OptimizationResult,
};
use crate::photonics::ProtocolParams;
use crate::simulator::{estimate_point, generate_sequence, run_attack, write_trace, PointEstimate, RunStats};
use crate::strategies::{bs_point, key_rate, strategy_click_rate, ConstraintResiduals, StatisticsMode};
use crate::validation::{run_validation, Mutation, ValidationReport};

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) | Error::NoFeasiblePoint { .. } => 2,
        _ => 3,
    }
}

/// Exit status when validation checks fail.
pub const EXIT_VALIDATION_FAILED: i32 = 1;

/// Column order of the `curve` CSV.
pub const CURVE_COLUMNS: [&str; 8] = [
    "length_km",
    "attack",
    "mu_a",
    "eve_info_bits",
    "emit_fraction",
    "control_fraction",
    "click_rate",
    "key_rate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub length_km: f64,
    pub attack: String,
    pub mu_a: f64,
    pub eve_info_bits: f64,
    pub emit_fraction: f64,
    pub control_fraction: f64,
    pub click_rate: f64,
    pub key_rate: f64,
}

/// Strongest attack of `family` at one length, with Alice's intensity fixed
/// or optimised according to the configuration.
pub fn curve_point(cfg: &RunConfig, family: AttackFamily, length_km: f64) -> Result<AttackOutcome> {
    let link = cfg.link();
    let settings = cfg.search_settings(family);
    match cfg.mu_a {
        Some(MuASetting::Fixed(mu_a)) => attack_outcome(&link.protocol(mu_a, length_km)?, cfg.mode, &settings),
        None | Some(MuASetting::Optimize) => {
            optimal_alice_intensity(&link, length_km, cfg.mode, &settings, (0.0, cfg.mu_a_max))
        }
    }
}

/// One row per length and attack, in length-major order.
pub fn curve_rows(cfg: &RunConfig) -> Result<Vec<CurveRow>> {
    cfg.validate()?;
    let jobs: Vec<(f64, AttackFamily)> = cfg
        .lengths()?
        .into_iter()
        .flat_map(|l| cfg.attacks.iter().map(move |&a| (l, a)))
        .collect();
    jobs.par_iter()
        .map(|&(length_km, family)| {
            let outcome = curve_point(cfg, family, length_km)?;
            let protocol = cfg.link().protocol(outcome.mu_a, length_km)?;
            Ok(CurveRow {
                length_km,
                attack: family.label().to_string(),
                mu_a: outcome.mu_a,
                eve_info_bits: outcome.point.eve_info_per_emitted_bit,
                emit_fraction: outcome.point.emit_fraction,
                control_fraction: outcome.point.control_fraction,
                click_rate: strategy_click_rate(&outcome.point, &protocol),
                key_rate: outcome.key_rate,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CURVE_COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Externally supplied series drawn next to the computed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub length_km: f64,
    pub key_rate: f64,
    pub series_label: String,
}

pub fn read_overlay(path: &Path) -> Result<Vec<OverlayRow>> {
    let malformed = |e: &dyn std::fmt::Display| Error::Config(format!("malformed overlay CSV {}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(format!("cannot read overlay {}: {io}", path.display())),
        _ => malformed(&e),
    })?;
    let headers = reader.headers().map_err(|e| malformed(&e))?.clone();
    for column in ["length_km", "key_rate", "series_label"] {
        if !headers.iter().any(|h| h == column) {
            return Err(malformed(&format!("missing column {column:?}")));
        }
    }
    reader.deserialize().map(|row| row.map_err(|e| malformed(&e))).collect()
}

const SVG_WIDTH: f64 = 760.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Key rate against length on a logarithmic axis, one polyline per series.
pub fn render_svg(rows: &[CurveRow], overlay: &[OverlayRow]) -> String {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        series
            .entry(r.attack.clone())
            .or_default()
            .push((r.length_km, r.key_rate));
    }
    for r in overlay {
        series
            .entry(r.series_label.clone())
            .or_default()
            .push((r.length_km, r.key_rate));
    }
    for points in series.values_mut() {
        points.retain(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0);
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let (x_min, x_max) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
        (lo.min(*x), hi.max(*x))
    });
    let (y_min, y_max) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| {
        (lo.min(*y), hi.max(*y))
    });
    let (x_min, x_max) = if x_min < x_max {
        (x_min, x_max)
    } else {
        (0.0, x_min.max(0.0) + 1.0)
    };
    let (d_min, d_max) = if y_min <= y_max {
        (
            y_min.log10().floor(),
            y_max.log10().ceil().max(y_min.log10().floor() + 1.0),
        )
    } else {
        (-1.0, 0.0)
    };

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (d_max - y.log10()) / (d_max - d_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut decade = d_min;
    while decade <= d_max {
        let y = sy(10f64.powf(decade));
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
        decade += 1.0;
    }
    for k in 0..=5 {
        let x_val = x_min + (x_max - x_min) * k as f64 / 5.0;
        let x = sx(x_val);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{x_val}</text>"#,
            MARGIN_TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">length (km)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">key rate (bits per signal)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape_xml(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Comparison of one simulated field with the analytic expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldComparison {
    pub field: String,
    pub analytic: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: RunConfig,
    pub protocol: ProtocolParams,
    pub attack: AttackParams,
    pub stats: RunStats,
    pub estimate: PointEstimate,
    pub comparison: Option<Vec<FieldComparison>>,
}

fn fixed_protocol(cfg: &RunConfig) -> Result<ProtocolParams> {
    let mu_a = cfg
        .fixed_mu_a()
        .ok_or_else(|| Error::Config("this command needs a fixed mu_a".into()))?;
    cfg.link().protocol(mu_a, cfg.length)
}

/// Seed of the outcome draws, kept apart from the sequence seed.
fn draw_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_5EED
}

/// Monte Carlo run of the configured attack; the signal sequence uses the
/// configured seed and the attack outcomes a seed derived from it.
pub fn simulate<W: Write>(cfg: &RunConfig, compare_analytic: bool, trace: Option<W>) -> Result<SimulationReport> {
    let protocol = fixed_protocol(cfg)?;
    if cfg.signals == 0 {
        return Err(Error::Config("signals must be at least 1".into()));
    }
    cfg.attack.check_feasible(&protocol)?;
    let kinds = generate_sequence(cfg.signals, protocol.f, cfg.seed);
    let run = run_attack(&kinds, &protocol, &cfg.attack, draw_seed(cfg.seed))?;
    if let Some(out) = trace {
        write_trace(out, &kinds, &run.fates)?;
    }
    let estimate = estimate_point(&run, cfg.attack.mu_b);
    let comparison = if compare_analytic {
        let exact = expected_statistics(&protocol, &cfg.attack)?;
        let field = |name: &str, analytic: f64, estimate: f64, std_error: f64| FieldComparison {
            field: name.to_string(),
            analytic,
            estimate,
            std_error,
            z: if std_error > 0.0 {
                (estimate - analytic) / std_error
            } else if estimate == analytic {
                0.0
            } else {
                f64::INFINITY.copysign(estimate - analytic)
            },
        };
        Some(vec![
            field(
                "emit_fraction",
                exact.emit_fraction,
                estimate.point.emit_fraction,
                estimate.std_errors.emit_fraction,
            ),
            field(
                "control_fraction",
                exact.control_fraction,
                estimate.point.control_fraction,
                estimate.std_errors.control_fraction,
            ),
            field(
                "eve_info_per_emitted_bit",
                exact.eve_info_per_emitted_bit,
                estimate.point.eve_info_per_emitted_bit,
                estimate.std_errors.eve_info_per_emitted_bit,
            ),
        ])
    } else {
        None
    };
    Ok(SimulationReport {
        config: cfg.clone(),
        protocol,
        attack: cfg.attack,
        stats: run.stats,
        estimate,
        comparison,
    })
}

pub fn validate(cfg: &RunConfig, mutation: Option<Mutation>) -> Result<ValidationReport> {
    run_validation(cfg.seed, mutation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeStatus {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub config: RunConfig,
    pub family: AttackFamily,
    pub mode: StatisticsMode,
    pub seed: u64,
    pub budget: usize,
    pub length_km: f64,
    pub mu_a: f64,
    pub status: OptimizeStatus,
    pub key_rate: f64,
    pub bs_eve_info: f64,
    pub bs_key_rate: f64,
    pub result: Option<OptimizationResult>,
    /// Closest residuals reached when no mixture meets the constraints.
    pub best_residuals: Option<ConstraintResiduals>,
}

/// Optimises the first configured attack family at the configured length.
pub fn optimize(cfg: &RunConfig) -> Result<OptimizeReport> {
    cfg.validate()?;
    let family = cfg.attacks[0];
    let settings = cfg.search_settings(family);
    let (mu_a, outcome) = match cfg.mu_a {
        Some(MuASetting::Optimize) => {
            let best = optimal_alice_intensity(&cfg.link(), cfg.length, cfg.mode, &settings, (0.0, cfg.mu_a_max))?;
            (best.mu_a, Ok(best))
        }
        _ => {
            let protocol = fixed_protocol(cfg)?;
            let outcome = if family == AttackFamily::BeamSplitting {
                attack_outcome(&protocol, cfg.mode, &settings)
            } else {
                optimize_attack(&protocol, cfg.mode, &settings).map(|r| AttackOutcome {
                    mu_a: protocol.mu_a.value(),
                    key_rate: r.key_rate_bound,
                    point: r.achieved_point,
                    attack: Some(r),
                })
            };
            (protocol.mu_a.value(), outcome)
        }
    };
    let protocol = cfg.link().protocol(mu_a, cfg.length)?;
    let bs = bs_point(&protocol);
    let base = OptimizeReport {
        config: cfg.clone(),
        family,
        mode: cfg.mode,
        seed: cfg.seed,
        budget: cfg.budget,
        length_km: cfg.length,
        mu_a,
        status: OptimizeStatus::Feasible,
        key_rate: 0.0,
        bs_eve_info: bs.eve_info_per_emitted_bit,
        bs_key_rate: key_rate(&protocol, &bs),
        result: None,
        best_residuals: None,
    };
    match outcome {
        Ok(o) => Ok(OptimizeReport {
            key_rate: o.key_rate,
            result: o.attack,
            ..base
        }),
        Err(Error::NoFeasiblePoint {
            click_residual,
            control_residual,
        }) => Ok(OptimizeReport {
            status: OptimizeStatus::Infeasible,
            key_rate: f64::NAN,
            best_residuals: Some(ConstraintResiduals {
                click_residual,
                control_residual,
            }),
            ..base
        }),
        Err(e) => Err(e),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `bytes` to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
