//! Solve a problem described in the `key = value` config format, then print
//! the fields at a few points and the energy balance. Pass a config file
//! path to use your own.
//!
//!     cargo run --release --example solve_config -- my.cfg

use radtrans::dg::integrate;
use radtrans::problem::ProblemConfig;

const DEFAULT: &str = "
# thin Gaussian pulse, S8, static mesh
source_kind = gaussian
x0 = 0.5
t0 = 10
N = 8
K = 32
M = 4
treatment = uncollided
mesh_law = static_uniform
x_f = 12
eval_times = 0.31623, 1, 3.16228
rtol = 1e-8
atol = 1e-8
";

fn main() -> radtrans::error::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ProblemConfig::from_config_file(path)?,
        None => ProblemConfig::from_config_str(DEFAULT)?,
    };
    cfg.validate()?;
    let sol = integrate(&cfg)?;
    println!("{:?}, {} steps, {:.2} s", sol.integrator, sol.stats.accepted, sol.wall_seconds);
    for (i, t) in sol.times().into_iter().enumerate() {
        println!("t = {t}: int (phi + e) dx = {:.8}", sol.total_energy(i)?);
        for x in [0.0, 0.5, 1.0, 2.0] {
            let f = sol.sample(i, x)?;
            println!("  x = {x:<4} phi = {:.6}  e = {:.6}  T = {:.6}", f.phi, f.e, f.temperature);
        }
    }
    Ok(())
}
