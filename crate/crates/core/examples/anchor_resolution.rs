//! Lattice data leave the rational-lattice pair undecided; one off-lattice node settles it.

use stftpr::forge::{forge_default, Claim};
use stftpr::signal::phase_align;
use stftpr::stft::{measure, FrequencyGrid, TimeNodes};
use stftpr::stitch::reconstruct;

fn main() -> stftpr::Result<()> {
    let fp = forge_default(Claim::RationalLattice, 0)?;
    let grid = fp.pair.grid;
    let a = fp.params["a"];
    let freqs = FrequencyGrid::critical(&grid);
    let anchored = fp.nodes.clone().with_anchor(TimeNodes::default_anchor(&grid, a))?;
    for (label, nodes) in [("lattice only", fp.nodes.clone()), ("with anchor", anchored)] {
        let ms = measure(&fp.f, &fp.pair, &nodes, &freqs)?;
        let report = reconstruct(&ms, &fp.pair)?;
        let to_f = phase_align(&fp.f.samples, &report.signal.samples).1;
        let to_g = phase_align(&fp.g.samples, &report.signal.samples).1;
        println!(
            "{label:<13} {}: distance to f {to_f:.2e}, to g {to_g:.2e}, {} alternatives",
            report.ambiguity.name(),
            report.alternatives.len()
        );
    }
    Ok(())
}
