//! Uncollided scalar flux of the square and Gaussian sources, for full
//! transport and for S2, across the slab at one time.
//!
//!     cargo run --release --example uncollided_flux -- 1.0

use radtrans::uncollided::{s2_gaussian, s2_square, transport_gaussian, transport_square};

fn main() -> radtrans::error::Result<()> {
    let t: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("time must be a number");
    let (x0, t0) = (0.5, 10.0);
    println!("x,square,gaussian,square_s2,gaussian_s2");
    for i in 0..=40 {
        let x = (x0 + t + 1.0) * i as f64 / 40.0;
        println!(
            "{x:.4},{:.10},{:.10},{:.10},{:.10}",
            transport_square(x, t, x0, t0),
            transport_gaussian(x, t, x0, t0)?,
            s2_square(x, t, x0, t0),
            s2_gaussian(x, t, x0, t0),
        );
    }
    Ok(())
}
