//! Walks the nine-signal sequence `c01c10110` through the attack with every
//! random outcome fixed in advance.
//!
//! ```bash
//! cargo run --example scripted_replay
//! ```

use cowsf::replay_with_outcomes;
use cowsf::simulator::Slot;
use cowsf::validation::ReplayFixture;

fn show(slot: Slot) -> char {
    match slot {
        Slot::Vacuum => '0',
        Slot::Beta => 'b',
    }
}

fn main() -> cowsf::Result<()> {
    let fx = ReplayFixture::new()?;
    for (name, script) in [("aborted", &fx.abort_script), ("completed", &fx.complete_script)] {
        let (fates, pattern) = replay_with_outcomes(&fx.kinds, &fx.attack, script)?;
        println!("{name} tuple");
        for (i, ((kind, fate), slots)) in fx.kinds.iter().zip(&fates).zip(&pattern).enumerate() {
            println!(
                "  {:>2} {} -> {}{}  {:<20} info {:.4}",
                i + 1,
                kind.symbol(),
                show(slots[0]),
                show(slots[1]),
                fate.fate,
                fate.eve_info
            );
        }
    }
    Ok(())
}
