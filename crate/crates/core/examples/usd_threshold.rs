//! Smallest intensity from which the unambiguous-discrimination attack can
//! reproduce Bob's statistics, as the channel gets longer.
//!
//! ```bash
//! cargo run --release --example usd_threshold
//! ```

use cowsf::optimizer::{LinkParams, SearchSettings};
use cowsf::strategies::{usd_feasibility_threshold, UsdThreshold};
use cowsf::StatisticsMode;

fn main() -> cowsf::Result<()> {
    let link = LinkParams {
        f: 0.1,
        eta: 0.1,
        delta_db_per_km: 0.25,
    };
    let settings = SearchSettings::default().with_budget(1_000);
    for length in [0.0, 25.0, 50.0, 100.0, 150.0, 200.0, 250.0] {
        match usd_feasibility_threshold(&link, length, StatisticsMode::Strict, &settings, 2.0)? {
            UsdThreshold::Found(mu_a) => println!("{length:>5} km  mu_a >= {:.4}", mu_a.value()),
            UsdThreshold::NotInBracket => println!("{length:>5} km  not feasible for mu_a <= 2"),
        }
    }
    Ok(())
}
