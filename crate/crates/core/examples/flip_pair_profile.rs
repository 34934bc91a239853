//! Step profile of the quasi-periodic sign-flip pair, printed as CSV.

use stftpr::forge::{forge_default, Claim};
use stftpr::io::{step_profile, step_profile_csv};

fn main() -> stftpr::Result<()> {
    let fp = forge_default(Claim::QuasiperiodicFlip, 0)?;
    let hints = fp.plot.clone().expect("quasi-periodic pairs carry plot hints");
    print!("{}", step_profile_csv(&step_profile(&fp.f, &fp.g, hints.range, &hints.marks)?));
    Ok(())
}
