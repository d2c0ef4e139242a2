//! Spectral convergence in the polynomial order: solve for M = 1..6 and
//! fit |c_M| = C exp(-c1 M).
//!
//!     cargo run --release --example convergence_sweep

use radtrans::presets::preset;
use radtrans::run::sweep;

fn main() -> radtrans::error::Result<()> {
    let p = preset("thin-gaussian-su")?;
    let o = vec![("K".to_string(), "32".to_string())];
    let record = sweep(&p, &o, &[1, 2, 3, 4, 5, 6], 1.0)?;
    for r in &record.rows {
        match (&r.decay, &r.failure) {
            (Some(d), _) => println!(
                "M = {}: |c_M| = {:.3e}, rmse vs table = {:.3e}",
                r.m,
                d.phi[r.m],
                r.rmse.unwrap_or(f64::NAN)
            ),
            (None, Some(msg)) => println!("M = {}: failed: {msg}", r.m),
            _ => unreachable!(),
        }
    }
    if let Some(fit) = record.fit {
        println!("coefficient fit: C = {:.3e}, c1 = {:.3}", fit.c, fit.c1);
    }
    if let Some(fit) = record.rmse_fit {
        println!("rmse fit:        C = {:.3e}, c1 = {:.3}", fit.c, fit.c1);
    }
    Ok(())
}
