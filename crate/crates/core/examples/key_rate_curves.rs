//! Key rate against channel length for each attack family, at a fixed
//! intensity and a modest search budget. Writes CSV to standard output.
//!
//! ```bash
//! cargo run --release --example key_rate_curves > curves.csv
//! ```

use cowsf::commands::{curve_rows, write_curve_csv};
use cowsf::config::{MuASetting, RunConfig};

fn main() -> cowsf::Result<()> {
    let cfg = RunConfig {
        mu_a: Some(MuASetting::Fixed(0.4)),
        lmin: 25.0,
        lmax: 250.0,
        budget: 3_000,
        ..RunConfig::default()
    };
    let rows = curve_rows(&cfg)?;
    write_curve_csv(&rows, std::io::stdout().lock())?;

    for pair in rows.chunks(cfg.attacks.len()) {
        let rates: Vec<String> = pair
            .iter()
            .map(|r| format!("{}={:.2e}", r.attack, r.key_rate))
            .collect();
        eprintln!("{:>5} km  {}", pair[0].length_km, rates.join("  "));
    }
    Ok(())
}
