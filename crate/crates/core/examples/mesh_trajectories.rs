//! Edge trajectories of the thin-square moving mesh as CSV on stdout. The
//! mesh dilates with the wave while the source is on, then each edge
//! accelerates uniformly onto an evenly spaced final mesh.
//!
//!     cargo run --release --example mesh_trajectories > edges.csv

use radtrans::mesh::Mesh;
use radtrans::problem::{MeshLaw, ProblemConfig};

fn main() -> radtrans::error::Result<()> {
    let cfg = ProblemConfig {
        mesh_law: MeshLaw::ThinSquare,
        n_cells: 16,
        x0: 0.5,
        t0: 10.0,
        x_f: 60.0,
        eval_times: vec![100.0],
        ..Default::default()
    };
    cfg.validate()?;
    let mesh = Mesh::from_problem(&cfg)?;
    let times: Vec<f64> = (0..=100).map(|i| i as f64).collect();
    mesh.write_trajectories_csv(&times, std::io::stdout().lock())
}
