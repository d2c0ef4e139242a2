//! Cell-edge trajectories for the four mesh laws.
//!
//! A [`Mesh`] precomputes whatever the law needs (initial edges, per-edge
//! accelerations) once, after which positions and velocities are a pure
//! function of `t`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::problem::{MeshLaw, ProblemConfig};
use crate::quadrature::gauss_lobatto;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    pub law: MeshLaw,
    pub n_cells: usize,
    pub x0: f64,
    pub t0: f64,
    pub v_wave: f64,
    pub x_f: f64,
    pub delta_x: f64,
    pub t_final: f64,
}

impl MeshParams {
    pub fn from_problem(cfg: &ProblemConfig) -> Self {
        Self {
            law: cfg.mesh_law,
            n_cells: cfg.n_cells,
            x0: cfg.x0,
            t0: cfg.t0,
            v_wave: cfg.wave_speed(),
            x_f: cfg.x_f,
            delta_x: cfg.delta_x,
            t_final: cfg.t_final(),
        }
    }
}

/// Edge positions and velocities at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshState {
    pub t: f64,
    pub edges: Vec<f64>,
    pub velocities: Vec<f64>,
    pub law: MeshLaw,
}

impl MeshState {
    pub fn n_cells(&self) -> usize {
        self.edges.len() - 1
    }

    /// Index of the cell holding `x`; a point on an interior edge goes to the right cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let k = self.n_cells();
        if !(x >= self.edges[0] && x <= self.edges[k]) {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= x);
        Some(i.saturating_sub(1).min(k - 1))
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    params: MeshParams,
    initial: Vec<f64>,
    // thin_square after t0: state at t0 and constant accelerations
    at_t0: Vec<f64>,
    vel_t0: Vec<f64>,
    accel: Vec<f64>,
    // constant_speed: final edges
    target: Vec<f64>,
}

impl Mesh {
    pub fn new(params: MeshParams) -> Result<Self> {
        let k = params.n_cells;
        if k < 2 || k % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "mesh needs an even cell count of at least 2, got {k}"
            )));
        }
        if !(params.x_f > 0.0) || !(params.delta_x > 0.0) {
            return Err(Error::InvalidArgument(
                "x_f and delta_x must be positive".into(),
            ));
        }
        let mut mesh = Self {
            params,
            initial: Vec::new(),
            at_t0: Vec::new(),
            vel_t0: Vec::new(),
            accel: Vec::new(),
            target: Vec::new(),
        };
        match params.law {
            MeshLaw::ThinSquare => {
                mesh.initial = thin_square_init(k, params.x0, params.delta_x)?;
                if params.t_final > params.t0 {
                    let (x_t0, v_t0) = mesh.dilation(params.t0);
                    let target = uniform_edges(k, params.x_f)?;
                    mesh.accel = post_source_accel(
                        params.t0,
                        params.t_final,
                        &x_t0,
                        &v_t0,
                        &target,
                    );
                    mesh.at_t0 = x_t0;
                    mesh.vel_t0 = v_t0;
                }
            }
            MeshLaw::StaticUniform => mesh.initial = uniform_edges(k, params.x_f)?,
            MeshLaw::StaticLobatto => {
                if k % 4 != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "lobatto-clustered mesh needs K divisible by 4, got {k}"
                    )));
                }
                mesh.initial = thin_square_init(k, params.x0, params.delta_x)?;
            }
            MeshLaw::ConstantSpeed => {
                if params.x_f < params.delta_x {
                    return Err(Error::InvalidArgument(format!(
                        "constant_speed mesh needs x_f >= delta_x, got {} < {}",
                        params.x_f, params.delta_x
                    )));
                }
                if !(params.t_final > 0.0) {
                    return Err(Error::InvalidArgument(
                        "constant_speed mesh needs a positive final time".into(),
                    ));
                }
                mesh.initial = uniform_edges(k, params.delta_x)?;
                mesh.target = uniform_edges(k, params.x_f)?;
            }
        }
        Ok(mesh)
    }

    pub fn from_problem(cfg: &ProblemConfig) -> Result<Self> {
        Self::new(MeshParams::from_problem(cfg))
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    pub fn n_cells(&self) -> usize {
        self.params.n_cells
    }

    pub fn initial_edges(&self) -> &[f64] {
        &self.initial
    }

    /// Per-edge accelerations after the source switches off (thin_square only).
    pub fn accelerations(&self) -> &[f64] {
        &self.accel
    }

    /// True when every edge velocity is identically zero.
    pub fn is_static(&self) -> bool {
        matches!(
            self.params.law,
            MeshLaw::StaticUniform | MeshLaw::StaticLobatto
        )
    }

    fn dilation(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let outer = self.initial[self.params.n_cells];
        let rate = self.params.v_wave / outer;
        self.initial
            .iter()
            .map(|&x| (x * (1.0 + rate * t), x * rate))
            .unzip()
    }

    /// Writes edges and velocities at `t` into the given buffers (length K+1).
    pub fn fill(&self, t: f64, edges: &mut [f64], velocities: &mut [f64]) {
        let p = &self.params;
        match p.law {
            MeshLaw::StaticUniform | MeshLaw::StaticLobatto => {
                edges.copy_from_slice(&self.initial);
                velocities.fill(0.0);
            }
            MeshLaw::ThinSquare => {
                if t <= p.t0 || self.accel.is_empty() {
                    let rate = p.v_wave / self.initial[p.n_cells];
                    for ((e, v), &x) in edges.iter_mut().zip(velocities.iter_mut()).zip(&self.initial) {
                        *e = x * (1.0 + rate * t);
                        *v = x * rate;
                    }
                } else {
                    let s = t - p.t0;
                    for k in 0..=p.n_cells {
                        let c = self.accel[k];
                        edges[k] = 0.5 * c * s * s + self.vel_t0[k] * s + self.at_t0[k];
                        velocities[k] = c * s + self.vel_t0[k];
                    }
                }
            }
            MeshLaw::ConstantSpeed => {
                for k in 0..=p.n_cells {
                    let v = (self.target[k] - self.initial[k]) / p.t_final;
                    edges[k] = self.initial[k] + v * t;
                    velocities[k] = v;
                }
            }
        }
    }

    pub fn state(&self, t: f64) -> MeshState {
        let n = self.params.n_cells + 1;
        let mut edges = vec![0.0; n];
        let mut velocities = vec![0.0; n];
        self.fill(t, &mut edges, &mut velocities);
        MeshState {
            t,
            edges,
            velocities,
            law: self.params.law,
        }
    }

    /// CSV of edge positions over time: `t,x0,...,xK`.
    pub fn write_trajectories_csv(&self, times: &[f64], mut out: impl Write) -> Result<()> {
        write!(out, "t")?;
        for k in 0..=self.params.n_cells {
            write!(out, ",x{k}")?;
        }
        writeln!(out)?;
        for &t in times {
            let st = self.state(t);
            write!(out, "{t:.12e}")?;
            for e in &st.edges {
                write!(out, ",{e:.12e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Initial edges of the thin-square mesh: half of the cells Gauss-Lobatto
/// spaced across the source `[-x0, x0]`, a quarter on each side spanning a
/// further `delta_x` outward.
pub fn thin_square_init(n_cells: usize, x0: f64, delta_x: f64) -> Result<Vec<f64>> {
    if n_cells < 4 || n_cells % 4 != 0 {
        return Err(Error::InvalidArgument(format!(
            "thin-square mesh needs K divisible by 4, got {n_cells}"
        )));
    }
    if !(x0 > 0.0) || !(delta_x > 0.0) {
        return Err(Error::InvalidArgument(
            "x0 and delta_x must be positive".into(),
        ));
    }
    let quarter = n_cells / 4;
    let y = gauss_lobatto(n_cells / 2 + 1)?;
    let s = gauss_lobatto(quarter + 1)?;
    let mut edges = vec![0.0; n_cells + 1];
    for (k, e) in edges.iter_mut().enumerate() {
        *e = if k < quarter {
            (delta_x * s.nodes[k] - 2.0 * x0 - delta_x) / 2.0
        } else if k <= 3 * quarter {
            x0 * y.nodes[k - quarter]
        } else {
            (delta_x * s.nodes[k - 3 * quarter] + 2.0 * x0 + delta_x) / 2.0
        };
    }
    symmetrize(&mut edges);
    Ok(edges)
}

/// `n_cells + 1` evenly spaced edges on `[-width/2, width/2]`.
pub fn uniform_edges(n_cells: usize, width: f64) -> Result<Vec<f64>> {
    if n_cells == 0 || !(width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform mesh needs K > 0 and width > 0, got K = {n_cells}, width = {width}"
        )));
    }
    let h = width / n_cells as f64;
    let mut edges: Vec<f64> = (0..=n_cells).map(|k| -0.5 * width + h * k as f64).collect();
    symmetrize(&mut edges);
    Ok(edges)
}

/// Constant accelerations taking each edge from `(x_t0, v_t0)` at `t0` to
/// `target` at `t_final`.
pub fn post_source_accel(
    t0: f64,
    t_final: f64,
    x_t0: &[f64],
    v_t0: &[f64],
    target: &[f64],
) -> Vec<f64> {
    let d = t0 - t_final;
    x_t0.iter()
        .zip(v_t0)
        .zip(target)
        .map(|((&x, &v), &xf)| 2.0 * (v * d - x + xf) / (d * d))
        .collect()
}

// Force exact antisymmetry so rounding never breaks the mirror property.
fn symmetrize(edges: &mut [f64]) {
    let n = edges.len() - 1;
    for k in 0..edges.len() / 2 {
        let m = 0.5 * (edges[n - k] - edges[k]);
        edges[k] = -m;
        edges[n - k] = m;
    }
    if n % 2 == 0 {
        edges[n / 2] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn thin(k: usize, t0: f64, t_final: f64, v: f64) -> Mesh {
        Mesh::new(MeshParams {
            law: MeshLaw::ThinSquare,
            n_cells: k,
            x0: 0.5,
            t0,
            v_wave: v,
            x_f: 30.0,
            delta_x: 1e-4,
            t_final,
        })
        .unwrap()
    }

    fn check_state(st: &MeshState) {
        let n = st.n_cells();
        for w in st.edges.windows(2) {
            assert!(w[1] > w[0], "edges not increasing at t={}: {:?}", st.t, st.edges);
        }
        for k in 0..=n {
            assert_eq!(st.edges[k], -st.edges[n - k]);
            assert_eq!(st.velocities[k], -st.velocities[n - k]);
        }
    }

    fn check_velocity_fd(mesh: &Mesh, t: f64) {
        let h = 1e-6 * t.max(1.0);
        let a = mesh.state(t - h);
        let b = mesh.state(t + h);
        let st = mesh.state(t);
        let scale = st.velocities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..st.edges.len() {
            let fd = (b.edges[k] - a.edges[k]) / (2.0 * h);
            assert!(
                (fd - st.velocities[k]).abs() <= 1e-6 * scale.max(1e-300) + 1e-12,
                "edge {k} t={t}: fd {fd} vs {}",
                st.velocities[k]
            );
        }
    }

    #[test]
    fn thin_square_init_examples() {
        let e = thin_square_init(8, 0.5, 1e-4).unwrap();
        assert_eq!(e.len(), 9);
        assert_eq!(e[2], -0.5);
        assert_eq!(e[6], 0.5);
        assert_eq!(e[4], 0.0);
        assert!((e[0] + 0.5 + 1e-4).abs() < 1e-15);
        for k in 0..=8 {
            assert_eq!(e[k], -e[8 - k]);
        }
        assert!(thin_square_init(6, 0.5, 1e-4).is_err());
        assert!(thin_square_init(10, 0.5, 1e-4).is_err());
    }

    #[test]
    fn dilation_before_source_off() {
        let m = thin(16, 10.0, 31.6228, 1.0);
        let s0 = m.state(0.0);
        assert_eq!(s0.edges, m.initial_edges());
        let outer = s0.edges[16];
        for k in 0..=16 {
            assert!((s0.velocities[k] - s0.edges[k] / outer).abs() < 1e-15);
        }
        let s = m.state(3.0);
        assert!((s.edges[16] - (outer + 3.0)).abs() < 1e-13);
        assert_eq!(s.edges[8], 0.0);
        assert_eq!(s.velocities[8], 0.0);
        // relative spacing preserved
        for k in 0..=16 {
            assert!((s.edges[k] / s.edges[16] - s0.edges[k] / outer).abs() < 1e-14);
        }
    }

    #[test]
    fn acceleration_hits_uniform_target_and_is_c1() {
        let t_final = 31.6228;
        let m = thin(8, 10.0, t_final, 1.0 / 3f64.sqrt());
        let end = m.state(t_final);
        let target = uniform_edges(8, 30.0).unwrap();
        for k in 0..=8 {
            assert!((end.edges[k] - target[k]).abs() < 1e-12);
        }
        let before = m.state(10.0);
        let after = m.state(10.0 + 1e-14);
        for k in 0..=8 {
            assert!((before.velocities[k] - after.velocities[k]).abs() < 1e-12);
            assert!((before.edges[k] - after.edges[k]).abs() < 1e-12);
        }
        for t in [0.5, 5.0, 9.9, 10.1, 20.0, 31.0] {
            check_state(&m.state(t));
            check_velocity_fd(&m, t);
        }
    }

    #[test]
    fn zero_numerator_gives_zero_acceleration() {
        let c = post_source_accel(1.0, 3.0, &[2.0], &[0.0], &[2.0]);
        assert_eq!(c, vec![0.0]);
    }

    #[test]
    fn no_acceleration_when_run_ends_before_t0() {
        let m = thin(8, 10.0, 1.0, 1.0);
        assert!(m.accelerations().is_empty());
        check_state(&m.state(1.0));
    }

    #[test]
    fn static_meshes() {
        let e = uniform_edges(4, 2.0).unwrap();
        assert_eq!(e, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        for law in [MeshLaw::StaticUniform, MeshLaw::StaticLobatto] {
            let m = Mesh::new(MeshParams {
                law,
                n_cells: 16,
                x0: 0.5,
                t0: 10.0,
                v_wave: 1.0,
                x_f: 4.0,
                delta_x: 4.0,
                t_final: 1.0,
            })
            .unwrap();
            assert!(m.is_static());
            let s = m.state(0.7);
            assert!(s.velocities.iter().all(|&v| v == 0.0));
            check_state(&s);
        }
    }

    #[test]
    fn lobatto_clustering_near_source_edge() {
        let e = thin_square_init(16, 0.5, 6.0).unwrap();
        let widths: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
        let (imin, _) = widths
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &w)| if w < acc.1 { (i, w) } else { acc });
        // cells 3 and 4 straddle the left source edge; 11 and 12 the right
        assert!([3, 4, 11, 12].contains(&imin), "smallest cell {imin}: {widths:?}");
    }

    #[test]
    fn constant_speed_mesh() {
        let m = Mesh::new(MeshParams {
            law: MeshLaw::ConstantSpeed,
            n_cells: 6,
            x0: 0.5,
            t0: 10.0,
            v_wave: 1.0,
            x_f: 12.0,
            delta_x: 3.0,
            t_final: 4.0,
        })
        .unwrap();
        assert_eq!(m.state(0.0).edges, uniform_edges(6, 3.0).unwrap());
        let end = m.state(4.0);
        let target = uniform_edges(6, 12.0).unwrap();
        for k in 0..=6 {
            assert!((end.edges[k] - target[k]).abs() < 1e-14);
        }
        assert_eq!(end.edges[3], 0.0);
        assert_eq!(end.velocities[3], 0.0);
        check_velocity_fd(&m, 2.0);
    }

    #[test]
    fn locate_cells() {
        let s = Mesh::new(MeshParams {
            law: MeshLaw::StaticUniform,
            n_cells: 4,
            x0: 0.5,
            t0: 1.0,
            v_wave: 1.0,
            x_f: 2.0,
            delta_x: 1.0,
            t_final: 1.0,
        })
        .unwrap()
        .state(0.0);
        assert_eq!(s.locate(-1.0), Some(0));
        assert_eq!(s.locate(-0.5), Some(1));
        assert_eq!(s.locate(0.2), Some(2));
        assert_eq!(s.locate(1.0), Some(3));
        assert_eq!(s.locate(1.01), None);
    }

    #[test]
    fn trajectory_csv_shape() {
        let m = thin(8, 1.0, 2.0, 1.0);
        let mut buf = Vec::new();
        m.write_trajectories_csv(&[0.0, 1.0, 2.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.split(',').count() == 10));
    }

    proptest! {
        #[test]
        fn thin_square_monotone_symmetric_smooth(
            quarter in 1usize..8,
            t0 in 0.1f64..10.0,
            extra in 0.5f64..30.0,
            frac in 0.01f64..0.99,
            s2 in any::<bool>(),
        ) {
            let v = if s2 { 1.0 / 3f64.sqrt() } else { 1.0 };
            let t_final = t0 + extra;
            let x_f = 2.0 * (0.5 + v * t_final) * 0.8;
            let m = Mesh::new(MeshParams {
                law: MeshLaw::ThinSquare,
                n_cells: 4 * quarter,
                x0: 0.5,
                t0,
                v_wave: v,
                x_f,
                delta_x: 1e-4,
                t_final,
            }).unwrap();
            let t = frac * t_final;
            check_state(&m.state(t));
            check_velocity_fd(&m, t);
            let a = m.state(t0);
            let b = m.state(t0 * (1.0 + 1e-15) + 1e-15);
            for k in 0..a.edges.len() {
                prop_assert!((a.velocities[k] - b.velocities[k]).abs() < 1e-12);
            }
        }
    }
}
