//! Exhaustive scans over small alphabet families, inside and outside the hypotheses.

use stftpr::signal::{GridSpec, C64};
use stftpr::verify::{uniqueness_oracle, AlphabetFamily, OracleConfig};
use stftpr::window::WindowPair;

fn main() -> stftpr::Result<()> {
    let pair = WindowPair::rectangular(GridSpec::centered(1.0, 4, 12)?, 0.25)?;
    let alphabet = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0)];
    let family = AlphabetFamily::new(pair.grid, -2, 4, alphabet.clone(), vec![], Some(1.0), "blocks")?;
    for a in [1.0, 1.5] {
        let r = uniqueness_oracle(&OracleConfig::lattice(&pair, a)?, &family)?;
        println!("a = {a}: {} -> {} classes, {} violations", r.family, r.fingerprint_classes, r.violations.len());
    }
    let separable = AlphabetFamily::new(pair.grid, -4, 6, alphabet, vec![2, 3], None, "blocks around a gap")?;
    let r = uniqueness_oracle(&OracleConfig::lattice(&pair, 1.0)?, &separable)?;
    println!("a = 1: {} -> {} violations", r.family, r.violations.len());
    Ok(())
}
