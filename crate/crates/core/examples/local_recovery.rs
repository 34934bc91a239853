//! One window position: enumerate spectral factors from the first window's magnitudes
//! and keep those the second window confirms.

use stftpr::local::{
    autocorrelation_from_magnitudes, class_distance, enumerate_candidates, prune_with_second_window, score_candidates,
    SegmentGeometry,
};
use stftpr::signal::C64;

fn main() -> stftpr::Result<()> {
    let h: Vec<C64> = [(1.0, 0.0), (0.3, -0.8), (0.0, 0.0), (-0.5, 0.2), (0.7, 0.7), (0.1, 0.0)]
        .iter()
        .map(|&(re, im)| C64::new(re, im))
        .collect();
    let geom = SegmentGeometry { len: h.len(), delta: 2.0 / h.len() as f64, b: 0.25 };
    let (phi, psi) = geom.predict(&h);
    let candidates = enumerate_candidates(&autocorrelation_from_magnitudes(&phi, h.len(), geom.delta)?)?;
    let mut scores = score_candidates(&candidates, &phi, &psi, &geom);
    scores.sort_by(|x, y| x.defect.total_cmp(&y.defect));
    println!("{} factorizations share the first window's magnitudes", candidates.len());
    for s in scores.iter().take(6) {
        println!("  candidate {:>3}: defect against both windows {:.3e}", s.id, s.defect);
    }
    let class = prune_with_second_window(&candidates, &phi, &psi, &geom, 0.0)?;
    println!("survivor class matches the segment to {:.2e}", class_distance(&class, &h));
    Ok(())
}
