//! Write a solution's Legendre coefficients to a dump, read them back and
//! look at how fast the average coefficient magnitudes fall off with order.
//!
//!     cargo run --release --example coefficient_dump

use radtrans::dg::{integrate, SolutionTensor};
use radtrans::metrics::{coefficient_decay, fit_coefficient_tail, DEFAULT_FIT_START};
use radtrans::problem::{MeshLaw, ProblemConfig, SourceKind};

fn main() -> radtrans::error::Result<()> {
    let cfg = ProblemConfig {
        source_kind: SourceKind::Gaussian,
        mesh_law: MeshLaw::StaticUniform,
        n_angles: 8,
        n_cells: 16,
        max_order: 7,
        x_f: 8.0,
        eval_times: vec![1.0],
        rtol: 1e-10,
        atol: 1e-10,
        ..Default::default()
    };
    let sol = integrate(&cfg)?;
    let mut dump = Vec::new();
    sol.snapshots[0].tensor.write_dump(&mut dump)?;
    let back = SolutionTensor::read_dump(std::str::from_utf8(&dump).expect("dump is text"))?;
    assert_eq!(back.u, sol.snapshots[0].tensor.u);
    println!("{} values round-tripped", back.u.len());

    let decay = coefficient_decay(&back, &sol.weights)?;
    for (j, (c, e)) in decay.phi.iter().zip(&decay.energy).enumerate() {
        println!("j = {j}: |c_j| = {c:.3e}  |e_j| = {e:.3e}");
    }
    let fit = fit_coefficient_tail(&decay.phi, DEFAULT_FIT_START)?;
    println!("tail fit from j = {DEFAULT_FIT_START}: c1 = {:.3}", fit.c1);
    Ok(())
}
