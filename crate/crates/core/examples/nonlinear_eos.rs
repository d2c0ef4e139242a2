//! Su-Olson versus constant specific heat for the same thin square source.
//! The energy densities respond to the same drive but map to very different
//! material temperatures.
//!
//!     cargo run --release --example nonlinear_eos

use radtrans::dg::integrate;
use radtrans::problem::{EquationOfState, ProblemConfig, SourceKind};

fn main() -> radtrans::error::Result<()> {
    let base = ProblemConfig {
        source_kind: SourceKind::Square,
        n_angles: 8,
        n_cells: 16,
        x_f: 10.0,
        eval_times: vec![1.0, 3.16228],
        rtol: 1e-8,
        atol: 1e-8,
        ..Default::default()
    };
    let cv = ProblemConfig {
        eos: EquationOfState::constant_cv(0.03, &base.constants)?,
        ..base.clone()
    };
    for (name, cfg) in [("su-olson", base), ("constant cv", cv)] {
        let sol = integrate(&cfg)?;
        for (i, t) in sol.times().into_iter().enumerate() {
            let f = sol.sample(i, 0.0)?;
            println!(
                "{name:<12} t = {t:<8} phi = {:.6}  e = {:.6}  T = {:.6}  T_rad = {:.6}",
                f.phi,
                f.e,
                f.temperature,
                f.radiation_temperature()
            );
        }
    }
    Ok(())
}
