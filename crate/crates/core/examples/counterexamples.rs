//! Forge every counterexample pair and confirm equal measurements with inequivalent signals.

use stftpr::forge::{forge_default, Claim};
use stftpr::stft::{measure, FrequencyGrid};
use stftpr::verify::measurements_equal;

fn main() -> stftpr::Result<()> {
    for claim in Claim::ALL {
        let fp = forge_default(claim, 3)?;
        let freqs = FrequencyGrid::critical(&fp.pair.grid);
        let mf = measure(&fp.f, &fp.pair, &fp.nodes, &freqs)?;
        let mg = measure(&fp.g, &fp.pair, &fp.nodes, &freqs)?;
        let (equal, dev) = measurements_equal(&mf, &mg, 1e-10)?;
        println!(
            "{:<20} {} nodes, equal = {equal} (deviation {dev:.1e}), distance {:.3}",
            claim.name(),
            fp.nodes.len(),
            fp.min_distance
        );
    }
    Ok(())
}
