//! With Eve's intensities set to the channel split and a near-unbounded
//! second stage, the soft-filtering attack turns into beam splitting.
//!
//! ```bash
//! cargo run --example beam_splitting_limit
//! ```

use cowsf::photonics::holevo_binary;
use cowsf::{bs_point, expected_statistics, AttackParams, MeanPhotonNumber, ProtocolParams};

fn main() -> cowsf::Result<()> {
    println!(
        "{:>6} {:>9} {:>10} {:>10} {:>10}",
        "L km", "t_sf2", "emit", "info", "chi_bs"
    );
    for length in [25.0, 100.0, 200.0] {
        let protocol = ProtocolParams::new(0.5, 0.1, 0.1, 0.25, length)?;
        let t = protocol.transmittance();
        let mu_a = protocol.mu_a.value();
        let chi_bs = holevo_binary(MeanPhotonNumber::new((1.0 - t) * mu_a)?);
        assert_eq!(bs_point(&protocol).eve_info_per_emitted_bit, chi_bs);
        for t_sf2 in [10, 1_000, 100_000] {
            let attack = AttackParams::from_values(0, t_sf2, t * mu_a, (1.0 - t) * mu_a, (1.0 - t) * mu_a)?;
            let point = expected_statistics(&protocol, &attack)?;
            println!(
                "{length:>6} {t_sf2:>9} {:>10.6} {:>10.6} {chi_bs:>10.6}",
                point.emit_fraction, point.eve_info_per_emitted_bit
            );
        }
    }
    Ok(())
}
