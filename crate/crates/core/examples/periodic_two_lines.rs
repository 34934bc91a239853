//! Periodic signals seen on two lines: a generic offset pins the signal down, a resonant
//! offset admits the conjugate-coefficient mate.

use std::collections::BTreeMap;

use stftpr::signal::{make_periodic, GridSpec, PeriodicSpec, C64};
use stftpr::stft::{measure, FrequencyGrid, TimeNodes};
use stftpr::stitch::{periodic_verdict, PeriodicFamily};
use stftpr::window::WindowPair;

fn main() -> stftpr::Result<()> {
    let grid = GridSpec::centered(1.0, 8, 48)?;
    let pair = WindowPair::rectangular(grid, 0.25)?;
    let d = grid.delta();
    let coefficients: BTreeMap<i64, C64> =
        [(-2, C64::new(0.5, 0.0)), (0, C64::new(1.0, 0.0)), (2, C64::new(0.0, 0.8))].into_iter().collect();
    for (period_cells, offset_cells) in [(7, 3), (8, 2)] {
        let period = period_cells as f64 * d;
        let f = make_periodic(&PeriodicSpec::periodic(period, coefficients.clone()), grid)?;
        let nodes = TimeNodes::two_lines(0.0, offset_cells as f64 * d)?;
        let ms = measure(&f, &pair, &nodes, &FrequencyGrid::critical(&grid))?;
        let family = PeriodicFamily { period, degree: 3, mu: Some(C64::new(1.0, 0.0)) };
        let report = periodic_verdict(&ms, &pair, &family)?;
        println!(
            "T = {period}, offset {}: {} ({} alternatives) {}",
            offset_cells as f64 * d,
            report.ambiguity.name(),
            report.alternatives.len(),
            report.notes.join("; ")
        );
    }
    Ok(())
}
