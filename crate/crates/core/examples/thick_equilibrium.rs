//! Optically thick square source: after the short pulse the radiation and
//! material energies sit in equilibrium and the profile barely moves.
//!
//!     cargo run --release --example thick_equilibrium

use radtrans::presets::preset;
use radtrans::run::{preset_configs, run_configs};

fn main() -> radtrans::error::Result<()> {
    let p = preset("thick-square-su")?;
    let run = run_configs(&p, &[], &preset_configs(&p, &[])?)?;
    for r in &run.runs {
        let sol = &r.solution;
        println!("t = {}: {:?}, {} steps", r.t, sol.integrator, sol.stats.accepted);
        for x in [0.0, 0.4, 0.5, 0.6, 1.0] {
            let f = sol.sample(0, x)?;
            println!("  x = {x:<4} phi = {:.6}  e = {:.6}", f.phi, f.e);
        }
    }
    Ok(())
}
