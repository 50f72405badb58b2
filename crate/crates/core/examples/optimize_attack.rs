//! Finds the strongest attack mixture at one channel length and shows what
//! it leaves to Alice and Bob.
//!
//! ```bash
//! cargo run --release --example optimize_attack
//! ```

use cowsf::optimizer::{optimize_attack, LinkParams, SearchSettings, StrategyComponent};
use cowsf::{bs_point, key_rate, StatisticsMode};

fn main() -> cowsf::Result<()> {
    let link = LinkParams {
        f: 0.1,
        eta: 0.1,
        delta_db_per_km: 0.25,
    };
    let protocol = link.protocol(0.4, 100.0)?;
    let bs = bs_point(&protocol);

    for mode in [StatisticsMode::Strict, StatisticsMode::Free] {
        let result = optimize_attack(&protocol, mode, &SearchSettings::default())?;
        println!("{mode:?}: {} evaluations", result.evaluations);
        for c in &result.best.components {
            match c.component {
                StrategyComponent::Attack(a) => println!(
                    "  {:.4} x attack t_sf1={} t_sf2={} mu_b={} mu_e1={} mu_e2={}",
                    c.weight, a.t_sf1, a.t_sf2, a.mu_b, a.mu_e1, a.mu_e2
                ),
                other => println!("  {:.4} x {other:?}", c.weight),
            }
        }
        println!(
            "  eve info {:.4} (bs {:.4}), key rate {:.3e} (bs {:.3e})",
            result.eve_info,
            bs.eve_info_per_emitted_bit,
            result.key_rate_bound,
            key_rate(&protocol, &bs)
        );
        println!(
            "  click residual {:.1e}, control residual {:.1e}",
            result.residuals.click_residual, result.residuals.control_residual
        );
    }
    Ok(())
}
