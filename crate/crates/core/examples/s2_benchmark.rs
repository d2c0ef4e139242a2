//! Semi-analytic S2 benchmark values from the Green's function convolution,
//! with the estimated quadrature error of each.
//!
//!     cargo run --release --example s2_benchmark

use radtrans::benchmark::{benchmark_e, benchmark_phi, BenchmarkSource};

fn main() -> radtrans::error::Result<()> {
    let sources = [
        ("square", BenchmarkSource::square(0.5, 10.0)),
        ("gaussian", BenchmarkSource::gaussian(0.5, 10.0)),
    ];
    for (name, src) in &sources {
        println!("{name} source");
        for (x, t) in [(0.01, 0.1), (0.01, 1.0), (0.5, 1.0), (1.0, 3.16228), (0.01, 31.6228)] {
            let phi = benchmark_phi(x, t, src)?;
            let e = benchmark_e(x, t, src)?;
            println!(
                "  x = {x:<5} t = {t:<8} phi = {:.6} (+- {:.0e})  e = {:.6} (+- {:.0e})",
                phi.value, phi.error, e.value, e.error
            );
        }
    }
    Ok(())
}
