//! Time integration of the DG system from a cold start, and reconstruction of
//! scalar flux, energy density and temperature from the stored coefficients.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use super::system::{DgSystem, Phase};
use crate::error::{Error, Result};
use crate::mesh::MeshState;
use crate::ode::{Dopri5, Sdirk4, StepControl, Stats};
use crate::problem::{IntegratorKind, ProblemConfig};
use crate::uncollided::UncollidedSpec;

/// Above this many estimated explicit steps the automatic choice goes implicit.
pub const AUTO_EXPLICIT_LIMIT: f64 = 1e5;

/// Coefficients `u[n][k][j]`, stored row-major with `n = N` the material energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTensor {
    pub n_angles: usize,
    pub n_cells: usize,
    pub max_order: usize,
    pub t: f64,
    pub u: Vec<f64>,
}

impl SolutionTensor {
    pub fn zeros(n_angles: usize, n_cells: usize, max_order: usize, t: f64) -> Self {
        Self {
            n_angles,
            n_cells,
            max_order,
            t,
            u: vec![0.0; (n_angles + 1) * n_cells * (max_order + 1)],
        }
    }

    #[inline]
    pub fn index(&self, n: usize, k: usize, j: usize) -> usize {
        (n * self.n_cells + k) * (self.max_order + 1) + j
    }

    pub fn get(&self, n: usize, k: usize, j: usize) -> f64 {
        self.u[self.index(n, k, j)]
    }

    /// Coefficients of row `n` in cell `k`.
    pub fn cell(&self, n: usize, k: usize) -> &[f64] {
        let i = self.index(n, k, 0);
        &self.u[i..i + self.max_order + 1]
    }

    /// Writes the raw dump: a header line `N K M t`, then one value per line
    /// in the row-major `(n, k, j)` order.
    pub fn write_dump(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{} {} {} {:e}", self.n_angles, self.n_cells, self.max_order, self.t)?;
        for v in &self.u {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::ConfigParse { line: line + 1, msg };
        let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty dump".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(parse_err(0, format!("expected `N K M t`, got `{header}`")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(0, e.to_string()));
        let t = h[3].parse::<f64>().map_err(|e| parse_err(0, e.to_string()))?;
        let mut tensor = Self::zeros(num(h[0])?, num(h[1])?, num(h[2])?, t);
        let mut count = 0;
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if count == tensor.u.len() {
                return Err(parse_err(i, "more values than the header allows".into()));
            }
            tensor.u[count] = line.parse().map_err(|e: std::num::ParseFloatError| parse_err(i, e.to_string()))?;
            count += 1;
        }
        if count != tensor.u.len() {
            return Err(Error::LengthMismatch {
                expected: tensor.u.len(),
                got: count,
            });
        }
        Ok(tensor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fields {
    pub phi: f64,
    pub e: f64,
    pub temperature: f64,
}

impl Fields {
    pub const ZERO: Fields = Fields {
        phi: 0.0,
        e: 0.0,
        temperature: 0.0,
    };

    /// Radiation temperature `phi^{1/4}` (sign kept).
    pub fn radiation_temperature(&self) -> f64 {
        self.phi.signum() * self.phi.abs().powf(0.25)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub tensor: SolutionTensor,
    pub mesh: MeshState,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub cfg: ProblemConfig,
    pub mu: Vec<f64>,
    pub weights: Vec<f64>,
    pub uncollided: Option<UncollidedSpec>,
    pub snapshots: Vec<Snapshot>,
    pub integrator: IntegratorKind,
    pub stats: Stats,
    pub wall_seconds: f64,
}

/// Picks the integrator for `Auto` from the explicit stability limit.
pub fn choose_integrator(sys: &DgSystem) -> IntegratorKind {
    let cfg = &sys.cfg;
    match cfg.integrator {
        IntegratorKind::Auto => {
            let tf = cfg.t_final();
            let probe = [0.0, cfg.t0.min(tf), tf];
            let lam = probe
                .iter()
                .map(|&t| sys.stiffness_estimate(t))
                .fold(0.0, f64::max);
            if lam * tf / 3.0 > AUTO_EXPLICIT_LIMIT {
                IntegratorKind::Sdirk4
            } else {
                IntegratorKind::Dopri5
            }
        }
        k => k,
    }
}

/// Integrates from `U(0) = 0` and stores the coefficients at every evaluation time.
pub fn integrate(cfg: &ProblemConfig) -> Result<Solution> {
    let start = Instant::now();
    let sys = DgSystem::new(cfg)?;
    let kind = choose_integrator(&sys);
    let mut control = StepControl::new(cfg.rtol, cfg.atol);
    control.max_steps = cfg.max_steps;

    // segment ends: evaluation times plus the source switch-off
    let mut stops: Vec<f64> = cfg.eval_times.clone();
    if cfg.t0 > 0.0 && cfg.t0 < cfg.t_final() && !stops.contains(&cfg.t0) {
        stops.push(cfg.t0);
        stops.sort_by(f64::total_cmp);
    }

    let mut y = vec![0.0; sys.len()];
    let mut t = 0.0;
    let mut snapshots = Vec::with_capacity(cfg.eval_times.len());
    let mut dopri = Dopri5::new(control);
    let mut sdirk = Sdirk4::new(control);
    for &stop in &stops {
        let phase = Phase {
            sys: &sys,
            source_on: stop <= cfg.t0,
        };
        match kind {
            IntegratorKind::Sdirk4 => sdirk.advance(&phase, t, &mut y, stop)?,
            _ => dopri.advance(&phase, t, &mut y, stop)?,
        }
        t = stop;
        if cfg.eval_times.contains(&stop) {
            snapshots.push(Snapshot {
                tensor: to_tensor(&sys, &y, t),
                mesh: sys.mesh.state(t),
            });
        }
    }
    let stats = match kind {
        IntegratorKind::Sdirk4 => sdirk.stats,
        _ => dopri.stats,
    };
    Ok(Solution {
        cfg: cfg.clone(),
        mu: sys.mu.clone(),
        weights: sys.w.clone(),
        uncollided: sys.uncollided_spec().copied(),
        snapshots,
        integrator: kind,
        stats,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn to_tensor(sys: &DgSystem, y: &[f64], t: f64) -> SolutionTensor {
    let (na, nk, m1) = (sys.n_angles(), sys.n_cells(), sys.n_basis());
    let mut out = SolutionTensor::zeros(na, nk, m1 - 1, t);
    for n in 0..=na {
        for k in 0..nk {
            for j in 0..m1 {
                let i = out.index(n, k, j);
                out.u[i] = y[sys.index(k, n, j)];
            }
        }
    }
    out
}

/// `sum_j c_j B_j(x)` on the cell `[xl, xr]`.
fn expand(c: &[f64], xl: f64, xr: f64, x: f64) -> f64 {
    let dx = xr - xl;
    let xi = ((2.0 * x - xl - xr) / dx).clamp(-1.0, 1.0);
    let mut b = vec![0.0; c.len()];
    super::operators::basis_unnormalized(c.len() - 1, xi, &mut b);
    b.iter().zip(c).map(|(b, c)| b * c).sum::<f64>() / dx.sqrt()
}

impl Solution {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.tensor.t).collect()
    }

    /// Snapshot index for time `t`, matched to a relative 1e-12.
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        self.snapshots
            .iter()
            .position(|s| (s.tensor.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Fields at `x` in snapshot `i`; `x` must lie within the mesh.
    pub fn reconstruct(&self, i: usize, x: f64) -> Result<Fields> {
        let snap = &self.snapshots[i];
        let edges = &snap.mesh.edges;
        let k = snap.mesh.locate(x).ok_or(Error::OutOfRange {
            x,
            lo: edges[0],
            hi: edges[edges.len() - 1],
        })?;
        let tensor = &snap.tensor;
        let (xl, xr) = (edges[k], edges[k + 1]);
        let mut phi = 0.0;
        for n in 0..tensor.n_angles {
            phi += self.weights[n] * expand(tensor.cell(n, k), xl, xr, x);
        }
        if let Some(spec) = &self.uncollided {
            phi += spec.eval(x, tensor.t)?;
        }
        let e = expand(tensor.cell(tensor.n_angles, k), xl, xr, x);
        Ok(Fields {
            phi,
            e,
            temperature: self.cfg.eos.temperature(e),
        })
    }

    /// Like [`Solution::reconstruct`] but zero outside the mesh, where the
    /// solution is vacuum.
    pub fn sample(&self, i: usize, x: f64) -> Result<Fields> {
        match self.reconstruct(i, x) {
            Err(Error::OutOfRange { .. }) => Ok(Fields::ZERO),
            r => r,
        }
    }

    /// Scalar flux at each `x` for every snapshot; `out[i][p]` is time `i`, point `p`.
    pub fn phi_table(&self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.field_table(xs, |f| f.phi)
    }

    pub fn e_table(&self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.field_table(xs, |f| f.e)
    }

    fn field_table(&self, xs: &[f64], pick: impl Fn(&Fields) -> f64) -> Result<Vec<Vec<f64>>> {
        (0..self.snapshots.len())
            .map(|i| xs.iter().map(|&x| self.sample(i, x).map(|f| pick(&f))).collect())
            .collect()
    }

    /// Points used for snapshot CSVs: `points_per_cell` evenly spaced points
    /// inside each cell plus the outer edges.
    pub fn plot_points(&self, i: usize, points_per_cell: usize) -> Vec<f64> {
        let edges = &self.snapshots[i].mesh.edges;
        let mut xs = vec![edges[0]];
        for w in edges.windows(2) {
            for p in 0..points_per_cell {
                xs.push(w[0] + (w[1] - w[0]) * (p as f64 + 0.5) / points_per_cell as f64);
            }
        }
        xs.push(edges[edges.len() - 1]);
        xs
    }

    /// CSV `x,phi,e,T,T_rad` at the given points of snapshot `i`.
    pub fn write_csv(&self, i: usize, xs: &[f64], mut out: impl Write) -> Result<()> {
        writeln!(out, "x,phi,e,T,T_rad")?;
        for &x in xs {
            let f = self.sample(i, x)?;
            writeln!(
                out,
                "{x:e},{:e},{:e},{:e},{:e}",
                f.phi,
                f.e,
                f.temperature,
                f.radiation_temperature()
            )?;
        }
        Ok(())
    }

    /// `int (phi + e) dx` over the mesh for snapshot `i`, uncollided part included.
    pub fn total_energy(&self, i: usize) -> Result<f64> {
        let snap = &self.snapshots[i];
        let tensor = &snap.tensor;
        let edges = &snap.mesh.edges;
        let mut total = 0.0;
        for k in 0..tensor.n_cells {
            let s = (edges[k + 1] - edges[k]).sqrt();
            let mut cell = 0.0;
            for n in 0..tensor.n_angles {
                cell += self.weights[n] * tensor.get(n, k, 0);
            }
            cell += tensor.get(tensor.n_angles, k, 0);
            total += cell * s;
        }
        if let Some(spec) = &self.uncollided {
            let tol = crate::adaptive::Tolerance::new(1e-13, 1e-12);
            let a = edges[0];
            let b = edges[edges.len() - 1];
            let breaks: Vec<f64> = [-spec.x0, spec.x0]
                .into_iter()
                .chain(edges.iter().copied())
                .collect();
            let mut err = None;
            let est = crate::adaptive::integrate_with_breaks(
                |x| match spec.eval(x, tensor.t) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                a,
                b,
                &breaks,
                tol,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            total += est.value;
        }
        Ok(total)
    }
}
