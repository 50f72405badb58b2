//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cowsf::commands::{curve_rows, CurveRow};
use cowsf::config::{MuASetting, RunConfig};
use cowsf::optimizer::AttackFamily;
use cowsf::photonics::holevo_binary;
use cowsf::simulator::{estimate_point, generate_sequence, run_attack, Fate};
use cowsf::soft_filter::{sf1_probs, sf2_probs, unitarity_residual, Stage};
use cowsf::validation::{enumeration_suite, random_feasible_triple, replay_check, ENUMERATION_CASES};
use cowsf::{expected_statistics, AttackParams, MeanPhotonNumber, ProtocolParams};

type Outcome = Result<String, String>;

fn mu(v: f64) -> MeanPhotonNumber {
    MeanPhotonNumber::new(v).expect("valid intensity")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, started: Instant, outcome: Outcome) -> Outcome {
    let elapsed = started.elapsed();
    match outcome {
        Ok(d) if elapsed <= limit => Ok(format!("{d}; {:.2}s", elapsed.as_secs_f64())),
        Ok(d) => Err(format!(
            "{d}; took {:.2}s, limit {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        )),
        Err(d) => Err(format!("{d}; {:.2}s", elapsed.as_secs_f64())),
    }
}

/// Roots of the SF1 overlap condition in `q`, found by bisection on the two
/// monotone branches of its concave right-hand side.
fn sf1_roots_by_bisection(mu_a: f64, mu_b: f64, mu_e1: f64, p: f64) -> Vec<f64> {
    let k = ((1.0 + (-mu_e1).exp()) / 2.0).sqrt();
    let g = |q: f64| (p * q).sqrt() * (-mu_b / 2.0).exp() * k + ((1.0 - p) * (1.0 - q)).sqrt() - (-mu_a / 2.0).exp();
    let a2 = p * (-mu_b).exp() * k * k;
    let peak = a2 / (a2 + 1.0 - p);
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
    if g(0.0) * g(peak) <= 0.0 {
        roots.push(bisect(0.0, peak));
    }
    if g(peak) * g(1.0) <= 0.0 {
        roots.push(bisect(peak, 1.0));
    }
    roots
}

fn unitarity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst1, mut worst2, mut worst_q) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (a, b, e) = random_feasible_triple(&mut rng);
        let p1 = sf1_probs(a, b, e).map_err(|err| err.to_string())?;
        let p2 = sf2_probs(a, b, e).map_err(|err| err.to_string())?;
        worst1 = worst1.max(unitarity_residual(Stage::Sf1, a, b, e, p1));
        worst2 = worst2.max(unitarity_residual(Stage::Sf2, a, b, e, p2));
        let roots = sf1_roots_by_bisection(a.value(), b.value(), e.value(), p1.p_info);
        let gap = roots
            .iter()
            .map(|r| (r - p1.q_control).abs())
            .fold(f64::INFINITY, f64::min);
        worst_q = worst_q.max(gap);
    }
    let ok = worst1 < 1e-9 && worst2 < 1e-9 && worst_q < 1e-9;
    within(
        Duration::from_secs(5),
        started,
        check(
            ok,
            format!("sf1 residual {worst1:.1e}, sf2 residual {worst2:.1e}, q1 vs bisection {worst_q:.1e}"),
        ),
    )
}

fn sf2_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let (a, b, e) = random_feasible_triple(&mut rng);
        let probs = sf2_probs(a, b, e).map_err(|err| err.to_string())?;
        let (p, q) = (probs.p_info, probs.q_control);
        let (a, b, e) = (a.value(), b.value(), e.value());
        let lhs = (p * q).sqrt() * (-(b + e) / 2.0).exp() + ((1.0 - p) * (1.0 - q)).sqrt();
        worst = worst.max((lhs - (-a / 2.0).exp()).abs());
    }
    let probe = sf2_probs(mu(0.2), mu(0.1), mu(0.2)).map_err(|err| err.to_string())?;
    let probe_ok = (probe.p_info - 0.699_390_394_644).abs() < 1e-9
        && (probe.q_control - 0.632_834_598_889).abs() < 1e-9
        && (probe.p_info - 0.699_390).abs() < 1e-6
        && (probe.q_control - 0.632_834).abs() < 1e-6;
    check(
        worst < 1e-9 && probe_ok,
        format!(
            "max product residual {worst:.1e}; (0.2, 0.1, 0.2) gives p2 {:.9}, q2 {:.9}",
            probe.p_info, probe.q_control
        ),
    )
}

fn replay() -> Outcome {
    let started = Instant::now();
    let (ok, detail) = replay_check().map_err(|e| e.to_string())?;
    within(Duration::from_secs(1), started, check(ok, detail))
}

fn monte_carlo() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut worst_z = 0.0f64;
    let mut worst_rel = 0.0f64;
    for i in 0..20u64 {
        let mu_a = rng.random_range(0.5..1.0);
        let f = rng.random_range(0.2..0.5);
        let length = rng.random_range(0.0..150.0);
        let protocol = ProtocolParams::new(mu_a, f, 0.1, 0.25, length).map_err(|e| e.to_string())?;
        let t1 = rng.random_range(0..=1);
        let t2 = rng.random_range(4..=20);
        let mu_b: f64 = rng.random_range(0.3..1.0);
        let floor = (mu_a - mu_b).max(0.0);
        let e1 = floor + rng.random_range(0.0..0.5);
        let e2 = floor + rng.random_range(0.0..0.5);
        let attack = AttackParams::from_values(t1, t2, mu_b, e1, e2).map_err(|e| e.to_string())?;
        let exact = expected_statistics(&protocol, &attack).map_err(|e| e.to_string())?;
        let kinds = generate_sequence(1_000_000, f, 100 + i);
        let run = run_attack(&kinds, &protocol, &attack, 200 + i).map_err(|e| e.to_string())?;
        let est = estimate_point(&run, attack.mu_b);
        for (name, e, m, se) in [
            (
                "emit_fraction",
                exact.emit_fraction,
                est.point.emit_fraction,
                est.std_errors.emit_fraction,
            ),
            (
                "control_fraction",
                exact.control_fraction,
                est.point.control_fraction,
                est.std_errors.control_fraction,
            ),
            (
                "eve_info_per_emitted_bit",
                exact.eve_info_per_emitted_bit,
                est.point.eve_info_per_emitted_bit,
                est.std_errors.eve_info_per_emitted_bit,
            ),
        ] {
            let z = (m - e).abs() / se;
            let rel = (m - e).abs() / e.abs();
            worst_z = worst_z.max(z);
            worst_rel = worst_rel.max(rel);
            if z > 3.0 || rel > 0.01 {
                failures.push(format!("config {i} {name}: z {z:.2}, rel {rel:.2e}"));
            }
        }
    }
    let enumeration = enumeration_suite(ENUMERATION_CASES, 13).map_err(|e| e.to_string())?;
    let detail = format!(
        "20 configs x 1e6 signals: max |z| {worst_z:.2}, max rel {worst_rel:.2e}; enumeration max diff {enumeration:.1e}{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
    );
    within(
        Duration::from_secs(300),
        started,
        check(failures.is_empty() && enumeration < 1e-8, detail),
    )
}

fn rows_for(rows: &[CurveRow], family: AttackFamily) -> Vec<&CurveRow> {
    rows.iter().filter(|r| r.attack == family.label()).collect()
}

fn dominance(rows: &[CurveRow]) -> Outcome {
    let sf = rows_for(rows, AttackFamily::SoftFilter);
    let bs = rows_for(rows, AttackFamily::BeamSplitting);
    let mut bad = Vec::new();
    let mut report = Vec::new();
    for (s, b) in sf.iter().zip(&bs) {
        let ok = if s.length_km >= 50.0 {
            s.key_rate < b.key_rate
        } else {
            s.key_rate <= b.key_rate
        };
        if !ok {
            bad.push(format!("L={}", s.length_km));
        }
        report.push(format!("{}:{:.3}", s.length_km, s.key_rate / b.key_rate));
    }
    check(
        bad.is_empty() && sf.len() == bs.len() && !sf.is_empty(),
        format!(
            "sf/bs key ratio by L [{}]{}",
            report.join(" "),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; violated at {}", bad.join(", "))
            }
        ),
    )
}

fn crossover(rows: &[CurveRow]) -> Outcome {
    let usd = rows_for(rows, AttackFamily::UsdLike);
    let bs = rows_for(rows, AttackFamily::BeamSplitting);
    let below: Vec<bool> = usd.iter().zip(&bs).map(|(u, b)| u.key_rate < b.key_rate).collect();
    let first = below.iter().position(|&x| x);
    let ok = match first {
        Some(i) => {
            let l = usd[i].length_km;
            l > 50.0 && l < 250.0 && below[i..].iter().all(|&x| x)
        }
        None => false,
    };
    let detail = match first {
        Some(i) if i > 0 => format!(
            "usd falls below bs between {} and {} km",
            usd[i - 1].length_km,
            usd[i].length_km
        ),
        Some(i) => format!("usd below bs already at {} km", usd[i].length_km),
        None => "usd never falls below bs".to_string(),
    };
    check(ok, detail)
}

fn bs_correspondence() -> Outcome {
    let mu_a = RunConfig::DEFAULT_FIXED_MU_A;
    let protocol = ProtocolParams::new(mu_a, 0.1, 0.1, 0.25, 100.0).map_err(|e| e.to_string())?;
    let t = protocol.transmittance();
    let attack = AttackParams::from_values(0, 100_000, t * mu_a, (1.0 - t) * mu_a, (1.0 - t) * mu_a)
        .map_err(|e| e.to_string())?;
    let point = expected_statistics(&protocol, &attack).map_err(|e| e.to_string())?;
    let chi_bs = holevo_binary(mu((1.0 - t) * mu_a));
    let info = point.eve_info_per_emitted_bit;
    check(
        point.emit_fraction >= 0.99 && info >= 0.9 * chi_bs && info <= chi_bs,
        format!(
            "emit {:.5}, info {info:.6}, chi_bs {chi_bs:.6} (ratio {:.6})",
            point.emit_fraction,
            info / chi_bs
        ),
    )
}

fn usd_exactness() -> Outcome {
    let protocol = ProtocolParams::new(0.8, 0.1, 0.1, 0.25, 150.0).map_err(|e| e.to_string())?;
    let inf = MeanPhotonNumber::INFINITE;
    let attack = AttackParams::new(3, 1, mu(0.3), inf, inf).map_err(|e| e.to_string())?;
    let kinds = generate_sequence(200_000, protocol.f, 5);
    let run = run_attack(&kinds, &protocol, &attack, 6).map_err(|e| e.to_string())?;
    let mut delivered_bits = 0usize;
    let mut inexact = 0usize;
    for (kind, fate) in kinds.iter().zip(&run.fates) {
        if !kind.is_control() && matches!(fate.fate, Fate::EmittedSF1 | Fate::EmittedSF2) {
            delivered_bits += 1;
            if fate.eve_info != 1.0 {
                inexact += 1;
            }
        }
    }
    let chi_inf = holevo_binary(inf);
    check(
        delivered_bits > 0 && inexact == 0 && chi_inf == 1.0,
        format!("{delivered_bits} delivered bit signals, {inexact} with eve_info != 1; chi(inf) = {chi_inf}"),
    )
}

fn strictly_decreasing(rows: &[CurveRow]) -> Outcome {
    let mut bad = Vec::new();
    for family in [
        AttackFamily::SoftFilter,
        AttackFamily::BeamSplitting,
        AttackFamily::UsdLike,
    ] {
        let series = rows_for(rows, family);
        for pair in series.windows(2) {
            if pair[1].key_rate >= pair[0].key_rate {
                bad.push(format!("{} at {} km", family.label(), pair[1].length_km));
            }
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            "every key-rate curve strictly decreases".to_string()
        } else {
            format!("not decreasing: {}", bad.join(", "))
        },
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cowsf"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}", out.status));
    }
    let mut bytes = out.stdout;
    bytes.extend_from_slice(&out.stderr);
    Ok(bytes)
}

fn reproducible() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let trace = dir.path().join("trace.csv");
    let trace = trace.to_str().ok_or("non-UTF-8 temp path")?;
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "curve", "--lmin", "50", "--lmax", "100", "--budget", "300", "--seed", "7",
        ],
        vec![
            "simulate",
            "--signals",
            "20000",
            "--seed",
            "7",
            "--compare-analytic",
            "--trace",
            trace,
        ],
        vec!["validate", "--seed", "7"],
        vec!["optimize", "--length", "100", "--budget", "500", "--seed", "7"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let first = run_cli(args)?;
        let first_trace = std::fs::read(trace).unwrap_or_default();
        let second = run_cli(args)?;
        let second_trace = std::fs::read(trace).unwrap_or_default();
        if first != second || first_trace != second_trace {
            differing.push(args[0]);
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            "curve, simulate, validate and optimize outputs identical across runs".to_string()
        } else {
            format!("outputs differ for {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {id} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {id} {name}: {detail}");
        }
    };

    report("1", "unitarity", unitarity());
    report("2", "sf2 identity", sf2_identity());
    report("3", "scripted replay", replay());
    report("4", "monte carlo vs analytic", monte_carlo());

    let started = Instant::now();
    let cfg = RunConfig {
        mu_a: Some(MuASetting::Optimize),
        budget: 20_000,
        ..RunConfig::default()
    };
    let curves = curve_rows(&cfg).map_err(|e| e.to_string());
    let curve_secs = started.elapsed().as_secs_f64();
    match &curves {
        Ok(rows) => {
            report(
                "5",
                "soft filter below bs",
                within(Duration::from_secs(1800), started, dominance(rows)),
            );
            report("6", "usd/bs crossover", crossover(rows));
        }
        Err(e) => {
            report("5", "soft filter below bs", Err(e.clone()));
            report("6", "usd/bs crossover", Err(e.clone()));
        }
    }
    report("7", "bs correspondence", bs_correspondence());
    report("8", "usd exactness", usd_exactness());
    let monotone = match &curves {
        Ok(rows) => strictly_decreasing(rows),
        Err(e) => Err(e.clone()),
    };
    let repro = reproducible();
    let combined = match (monotone, repro) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (a, b) => Err(format!("{}; {}", a.unwrap_or_else(|e| e), b.unwrap_or_else(|e| e))),
    };
    report("9", "monotonicity and reproducibility", combined);

    println!("curve computation took {curve_secs:.1}s");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
