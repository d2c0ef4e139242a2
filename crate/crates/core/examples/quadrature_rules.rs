//! Angular quadrature rules: nodes, weights and exactness.
//!
//!     cargo run --release --example quadrature_rules -- 8

use radtrans::quadrature::{gauss_legendre, gauss_lobatto};

fn main() -> radtrans::error::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(8), |s| s.parse()).expect("order must be an integer");
    for rule in [gauss_legendre(n)?, gauss_lobatto(n)?] {
        println!("{:?} rule, {} points, exact to degree {}", rule.kind, rule.order(), rule.exact_degree());
        for (mu, w) in rule.nodes.iter().zip(&rule.weights) {
            println!("  mu = {mu:+.16}  w = {w:.16}");
        }
        let d = rule.exact_degree() as i32;
        let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
        println!("  int mu^{d} = {:.3e} off\n", rule.integrate(|mu| mu.powi(d)) - exact);
    }
    Ok(())
}
