//! Measure a random compactly supported signal on a lattice and reconstruct it.

use stftpr::signal::{global_phase_align, random_nonseparable, GridSpec};
use stftpr::stitch::{lattice_measurements, reconstruct};
use stftpr::window::WindowPair;

fn main() -> stftpr::Result<()> {
    let grid = GridSpec::centered(1.0, 8, 64)?;
    for (a, b) in [(1.0, 0.25), (0.5, 0.5)] {
        let pair = WindowPair::rectangular(grid, b)?;
        let f = random_nonseparable(grid, 40, 2.0 - a, 7)?;
        let ms = lattice_measurements(&f, &pair, a, None)?;
        let report = reconstruct(&ms, &pair)?;
        let align = global_phase_align(&f, &report.signal)?;
        println!(
            "a = {a}, b = {b}: {} nodes, ambiguity {}, data residual {:.2e}, distance to truth {:.2e}, phase {:.4}",
            ms.nodes.len(),
            report.ambiguity.name(),
            report.residual,
            align.residual,
            align.lambda.arg()
        );
    }
    Ok(())
}
