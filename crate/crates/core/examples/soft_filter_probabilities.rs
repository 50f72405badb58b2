//! Success probabilities of the two soft-filtering stages.
//!
//! ```bash
//! cargo run --example soft_filter_probabilities
//! ```

use cowsf::soft_filter::unitarity_residual;
use cowsf::{sf1_probs, sf2_probs, MeanPhotonNumber, Stage};

fn main() -> cowsf::Result<()> {
    let mu_a = MeanPhotonNumber::new(0.2)?;
    let mu_b = MeanPhotonNumber::new(0.1)?;

    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "mu_e", "p1", "q1", "p2", "q2", "residual"
    );
    for mu_e in [0.1, 0.2, 0.5, 1.0, 3.0, f64::INFINITY] {
        let mu_e = MeanPhotonNumber::new(mu_e)?;
        let sf1 = sf1_probs(mu_a, mu_b, mu_e)?;
        let sf2 = sf2_probs(mu_a, mu_b, mu_e)?;
        let residual = unitarity_residual(Stage::Sf1, mu_a, mu_b, mu_e, sf1).max(unitarity_residual(
            Stage::Sf2,
            mu_a,
            mu_b,
            mu_e,
            sf2,
        ));
        println!(
            "{:>8} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.1e}",
            mu_e.to_string(),
            sf1.p_info,
            sf1.q_control,
            sf2.p_info,
            sf2.q_control,
            residual
        );
    }

    // Eve cannot lower the intensity below what the overlap allows.
    let too_weak = MeanPhotonNumber::new(0.05)?;
    match sf2_probs(mu_a, mu_b, too_weak) {
        Err(e) => println!("mu_e = 0.05: {e}"),
        Ok(p) => println!("mu_e = 0.05 unexpectedly feasible: {p:?}"),
    }
    Ok(())
}
