//! Simulates one attack over a million signals and compares the renewal
//! estimates with the analytic cycle model.
//!
//! ```bash
//! cargo run --release --example monte_carlo_vs_analytic
//! ```

use cowsf::simulator::estimate_point;
use cowsf::{expected_statistics, generate_sequence, run_attack, AttackParams, ProtocolParams};

fn main() -> cowsf::Result<()> {
    let protocol = ProtocolParams::new(0.6, 0.3, 0.1, 0.25, 50.0)?;
    let attack = AttackParams::from_values(1, 8, 0.5, 0.3, 0.3)?;

    let kinds = generate_sequence(1_000_000, protocol.f, 7);
    let run = run_attack(&kinds, &protocol, &attack, 8)?;
    let est = estimate_point(&run, attack.mu_b);
    let exact = expected_statistics(&protocol, &attack)?;

    println!("{} cycles, {} emitted signals", est.cycles, run.stats.signals_emitted);
    println!(
        "{:<26} {:>10} {:>10} {:>10} {:>7}",
        "field", "analytic", "simulated", "std err", "z"
    );
    for (name, a, m, se) in [
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
        println!("{name:<26} {a:>10.6} {m:>10.6} {se:>10.2e} {:>7.2}", (m - a) / se);
    }
    Ok(())
}
