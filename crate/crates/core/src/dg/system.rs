//! The semidiscrete moving-mesh DG system: right-hand side and the structured
//! implicit solve used by the stiff integrator.
//!
//! Unknowns are stored cell-major: `u[(k * (N + 1) + r) * (M + 1) + j]` for cell
//! `k`, row `r` (`r < N` an angle, `r = N` the material energy) and basis
//! order `j`.

use nalgebra::{DMatrix, Dyn, LU};
use rayon::prelude::*;

use super::linear::{BlockTridiag, BlockTridiagLu};
use super::operators::{
    emission_jacobian_into, project_emission_into, project_profile_into, ProjectionRule,
    ReferenceOperators,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::ode::{ImplicitSystem, OdeSystem};
use crate::problem::{EquationOfState, ProblemConfig, SourceKind, Treatment};
use crate::quadrature::{angular_rule, Cell};
use crate::uncollided::{project_into as project_uncollided_into, UncollidedSpec};

/// Cell count times angle count above which cells are assembled in parallel.
const PARALLEL_WORK: usize = 256;
/// Angles factored concurrently when building the Schur complement.
const ANGLE_CHUNK: usize = 8;

pub struct DgSystem {
    pub cfg: ProblemConfig,
    pub mesh: Mesh,
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
    n_angles: usize,
    n_cells: usize,
    m1: usize,
    reference: ReferenceOperators,
    rule: ProjectionRule,
    /// `sqrt(2j+1)`
    rnorm: Vec<f64>,
    uncollided: Option<UncollidedSpec>,
}

/// Edge positions and velocities plus derived cell widths at one time.
pub(crate) struct Geometry {
    pub edges: Vec<f64>,
    pub vel: Vec<f64>,
}

impl Geometry {
    fn dx(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }
}

impl DgSystem {
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = Mesh::from_problem(cfg)?;
        let quad = angular_rule(cfg.angular_rule, cfg.n_angles)?;
        let m1 = cfg.max_order + 1;
        let uncollided = (cfg.treatment == Treatment::Uncollided
            && cfg.source_kind != SourceKind::None)
            .then(|| UncollidedSpec::from_problem(cfg));
        Ok(Self {
            cfg: cfg.clone(),
            mesh,
            mu: quad.nodes.clone(),
            w: quad.weights.clone(),
            n_angles: cfg.n_angles,
            n_cells: cfg.n_cells,
            m1,
            reference: ReferenceOperators::new(cfg.max_order),
            rule: ProjectionRule::new(cfg.max_order)?,
            rnorm: (0..m1).map(|j| ((2 * j + 1) as f64).sqrt()).collect(),
            uncollided,
        })
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_basis(&self) -> usize {
        self.m1
    }

    /// Unknowns per cell.
    pub fn block(&self) -> usize {
        (self.n_angles + 1) * self.m1
    }

    pub fn len(&self) -> usize {
        self.n_cells * self.block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, k: usize, r: usize, j: usize) -> usize {
        (k * (self.n_angles + 1) + r) * self.m1 + j
    }

    pub fn uncollided_spec(&self) -> Option<&UncollidedSpec> {
        self.uncollided.as_ref()
    }

    pub(crate) fn geometry(&self, t: f64) -> Geometry {
        let n = self.n_cells + 1;
        let mut edges = vec![0.0; n];
        let mut vel = vec![0.0; n];
        self.mesh.fill(t, &mut edges, &mut vel);
        Geometry { edges, vel }
    }

    fn speed(&self, r: usize) -> f64 {
        if r < self.n_angles {
            self.mu[r]
        } else {
            0.0
        }
    }

    fn eos(&self) -> &EquationOfState {
        &self.cfg.eos
    }

    /// Per-cell source moments feeding either the angular rows (standard
    /// treatment, only while the source is on) or the energy row (uncollided).
    fn source_moments(&self, cell: &Cell, t: f64, source_on: bool, out: &mut [f64]) -> Result<()> {
        match &self.uncollided {
            Some(spec) => project_uncollided_into(cell, t, spec, self.cfg.max_order, out),
            None => {
                if source_on && t >= 0.0 {
                    project_profile_into(&self.rule, cell, &self.cfg, out);
                } else {
                    out.fill(0.0);
                }
                Ok(())
            }
        }
    }

    /// Right-hand side; `source_on` selects which side of the switch-off
    /// time the standard source is evaluated on.
    pub fn rhs_with(&self, t: f64, u: &[f64], du: &mut [f64], source_on: bool) -> Result<()> {
        if u.len() != self.len() || du.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: u.len().min(du.len()),
            });
        }
        let geo = self.geometry(t);
        let (nk, rows, m1) = (self.n_cells, self.n_angles + 1, self.m1);

        // traces at each cell's right and left end
        let mut tr_r = vec![0.0; nk * rows];
        let mut tr_l = vec![0.0; nk * rows];
        for k in 0..nk {
            let s = 1.0 / geo.dx(k).sqrt();
            for r in 0..rows {
                let c = &u[self.index(k, r, 0)..self.index(k, r, 0) + m1];
                let (mut a, mut b) = (0.0, 0.0);
                for j in 0..m1 {
                    let v = self.rnorm[j] * c[j];
                    a += v;
                    b += if j % 2 == 0 { v } else { -v };
                }
                tr_r[k * rows + r] = a * s;
                tr_l[k * rows + r] = b * s;
            }
        }
        // upwind fluxes through each edge
        let mut flux = vec![0.0; (nk + 1) * rows];
        for e in 0..=nk {
            for r in 0..rows {
                let a = self.speed(r) - geo.vel[e];
                let psi = if a > 0.0 {
                    if e > 0 { tr_r[(e - 1) * rows + r] } else { 0.0 }
                } else if e < nk {
                    tr_l[e * rows + r]
                } else {
                    0.0
                };
                flux[e * rows + r] = a * psi;
            }
        }

        let block = self.block();
        let cell_rhs = |k: usize, out: &mut [f64]| -> Result<()> {
            self.cell_rhs(t, k, &geo, u, &flux, source_on, out)
        };
        let results: Vec<Result<()>> = if nk * self.n_angles >= PARALLEL_WORK {
            du.par_chunks_mut(block)
                .enumerate()
                .map(|(k, out)| cell_rhs(k, out))
                .collect()
        } else {
            du.chunks_mut(block)
                .enumerate()
                .map(|(k, out)| cell_rhs(k, out))
                .collect()
        };
        results.into_iter().collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn cell_rhs(
        &self,
        t: f64,
        k: usize,
        geo: &Geometry,
        u: &[f64],
        flux: &[f64],
        source_on: bool,
        out: &mut [f64],
    ) -> Result<()> {
        let (rows, m1, na) = (self.n_angles + 1, self.m1, self.n_angles);
        let dx = geo.dx(k);
        let sdx = dx.sqrt();
        let cell = Cell {
            x_l: geo.edges[k],
            x_r: geo.edges[k + 1],
        };
        let mut l = vec![0.0; m1 * m1];
        let mut g = vec![0.0; m1 * m1];
        self.reference.l_into(dx, &mut l);
        self.reference.g_into(dx, geo.vel[k], geo.vel[k + 1], &mut g);
        let base = k * rows * m1;
        let uk = &u[base..base + rows * m1];
        let e = &uk[na * m1..];
        let mut h = vec![0.0; m1];
        let mut scratch = vec![0.0; self.rule.n_points()];
        project_emission_into(&self.rule, e, dx, self.eos(), &mut scratch, &mut h);
        let mut src = vec![0.0; m1];
        self.source_moments(&cell, t, source_on, &mut src)?;

        let inv_l = 1.0 / self.cfg.l;
        let ca = self.cfg.c_a;
        let standard = self.uncollided.is_none();
        let mut gu = vec![0.0; m1];
        let mut lu = vec![0.0; m1];
        let mut phi = vec![0.0; m1];
        for r in 0..rows {
            let c = &uk[r * m1..(r + 1) * m1];
            for i in 0..m1 {
                let (mut a, mut b) = (0.0, 0.0);
                for j in 0..m1 {
                    a += g[i * m1 + j] * c[j];
                    b += l[i * m1 + j] * c[j];
                }
                gu[i] = a;
                lu[i] = b;
            }
            let f_r = flux[(k + 1) * rows + r];
            let f_l = flux[k * rows + r];
            let o = &mut out[r * m1..(r + 1) * m1];
            if r < na {
                let mu = self.mu[r];
                for i in 0..m1 {
                    let bl = if i % 2 == 0 { f_l } else { -f_l };
                    let surf = self.rnorm[i] / sdx * (f_r - bl);
                    let mut v = gu[i] + mu * lu[i] - surf - inv_l * c[i] + 0.5 * ca * inv_l * h[i];
                    if standard {
                        v += 0.5 * inv_l * src[i];
                    }
                    o[i] = v;
                    phi[i] += self.w[r] * c[i];
                }
            } else {
                for i in 0..m1 {
                    let bl = if i % 2 == 0 { f_l } else { -f_l };
                    let surf = self.rnorm[i] / sdx * (f_r - bl);
                    let mut v = gu[i] - surf + ca * inv_l * (phi[i] - h[i]);
                    if !standard {
                        v += ca * inv_l * src[i];
                    }
                    o[i] = v;
                }
            }
        }
        if let Some(idx) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t,
                cell: k,
                unknown: idx,
            });
        }
        Ok(())
    }

    /// Transport part of the Jacobian for row `r`, block tridiagonal over cells.
    /// Angular rows include the `-1/l` absorption; the energy row includes
    /// `-(c_a/l) dH/de` taken from `dh`.
    fn row_jacobian(&self, geo: &Geometry, r: usize, dh: &[Vec<f64>]) -> BlockTridiag {
        let (nk, m1) = (self.n_cells, self.m1);
        let mut bt = BlockTridiag::zeros(nk, m1);
        let s = self.speed(r);
        let inv_l = 1.0 / self.cfg.l;
        let mut l = vec![0.0; m1 * m1];
        let mut g = vec![0.0; m1 * m1];
        let trace = |k: usize, right: bool, j: usize| {
            let v = self.rnorm[j] / geo.dx(k).sqrt();
            if right || j % 2 == 0 { v } else { -v }
        };
        for k in 0..nk {
            let dx = geo.dx(k);
            self.reference.l_into(dx, &mut l);
            self.reference.g_into(dx, geo.vel[k], geo.vel[k + 1], &mut g);
            let d = &mut bt.diag[k];
            for i in 0..m1 {
                for j in 0..m1 {
                    d[(i, j)] = g[i * m1 + j] + s * l[i * m1 + j];
                }
                if r < self.n_angles {
                    d[(i, i)] -= inv_l;
                }
            }
            if r == self.n_angles {
                for i in 0..m1 {
                    for j in 0..m1 {
                        d[(i, j)] -= self.cfg.c_a * inv_l * dh[k][i * m1 + j];
                    }
                }
            }
            // right edge: -B_i(+1) F_{k+1}
            let a = s - geo.vel[k + 1];
            for i in 0..m1 {
                let bi = trace(k, true, i);
                for j in 0..m1 {
                    if a > 0.0 {
                        bt.diag[k][(i, j)] -= a * bi * trace(k, true, j);
                    } else if k + 1 < nk {
                        bt.upper[k][(i, j)] -= a * bi * trace(k + 1, false, j);
                    }
                }
            }
            // left edge: +B_i(-1) F_k
            let a = s - geo.vel[k];
            for i in 0..m1 {
                let bi = trace(k, false, i);
                for j in 0..m1 {
                    if a > 0.0 {
                        if k > 0 {
                            bt.lower[k][(i, j)] += a * bi * trace(k - 1, true, j);
                        }
                    } else {
                        bt.diag[k][(i, j)] += a * bi * trace(k, false, j);
                    }
                }
            }
        }
        bt
    }

    fn emission_jacobians(&self, geo: &Geometry, u: &[f64]) -> Vec<Vec<f64>> {
        let m1 = self.m1;
        let mut scratch = vec![0.0; self.rule.n_points()];
        (0..self.n_cells)
            .map(|k| {
                let e0 = self.index(k, self.n_angles, 0);
                let mut d = vec![0.0; m1 * m1];
                emission_jacobian_into(&self.rule, &u[e0..e0 + m1], geo.dx(k), self.eos(), &mut scratch, &mut d);
                d
            })
            .collect()
    }

    /// Dense Jacobian of the right-hand side; meant for small systems and testing.
    pub fn jacobian_dense(&self, t: f64, u: &[f64]) -> DMatrix<f64> {
        let geo = self.geometry(t);
        let dh = self.emission_jacobians(&geo, u);
        let n = self.len();
        let m1 = self.m1;
        let mut jac = DMatrix::zeros(n, n);
        let inv_l = 1.0 / self.cfg.l;
        for r in 0..=self.n_angles {
            let bt = self.row_jacobian(&geo, r, &dh);
            for k in 0..self.n_cells {
                for i in 0..m1 {
                    for j in 0..m1 {
                        let row = self.index(k, r, i);
                        jac[(row, self.index(k, r, j))] += bt.diag[k][(i, j)];
                        if k > 0 {
                            jac[(row, self.index(k - 1, r, j))] += bt.lower[k][(i, j)];
                        }
                        if k + 1 < self.n_cells {
                            jac[(row, self.index(k + 1, r, j))] += bt.upper[k][(i, j)];
                        }
                    }
                }
            }
        }
        for k in 0..self.n_cells {
            for n_ in 0..self.n_angles {
                for i in 0..m1 {
                    for j in 0..m1 {
                        jac[(self.index(k, n_, i), self.index(k, self.n_angles, j))] +=
                            0.5 * self.cfg.c_a * inv_l * dh[k][i * m1 + j];
                    }
                    jac[(self.index(k, self.n_angles, i), self.index(k, n_, i))] +=
                        self.cfg.c_a * inv_l * self.w[n_];
                }
            }
        }
        jac
    }

    fn gather(&self, y: &[f64], r: usize, out: &mut [f64]) {
        let m1 = self.m1;
        for k in 0..self.n_cells {
            let s = self.index(k, r, 0);
            out[k * m1..(k + 1) * m1].copy_from_slice(&y[s..s + m1]);
        }
    }

    fn scatter(&self, x: &[f64], r: usize, y: &mut [f64]) {
        let m1 = self.m1;
        for k in 0..self.n_cells {
            let s = self.index(k, r, 0);
            y[s..s + m1].copy_from_slice(&x[k * m1..(k + 1) * m1]);
        }
    }

    /// Factors `I - gamma_h J` by eliminating the angular rows onto the energy
    /// row; only the energy Schur complement is ever dense.
    pub fn factor_with(&self, t: f64, u: &[f64], gamma_h: f64) -> Result<DgFactor> {
        let geo = self.geometry(t);
        let dh = self.emission_jacobians(&geo, u);
        let (nk, m1, na) = (self.n_cells, self.m1, self.n_angles);
        let dim = nk * m1;
        let inv_l = 1.0 / self.cfg.l;
        let ca = self.cfg.c_a;

        let to_p = |mut bt: BlockTridiag| {
            for k in 0..nk {
                bt.diag[k] *= -gamma_h;
                for i in 0..m1 {
                    bt.diag[k][(i, i)] += 1.0;
                }
                bt.lower[k] *= -gamma_h;
                bt.upper[k] *= -gamma_h;
            }
            bt
        };
        // C = -gamma_h (c_a / 2l) dH/de, block diagonal
        let mut cmat = DMatrix::zeros(dim, dim);
        for k in 0..nk {
            for i in 0..m1 {
                for j in 0..m1 {
                    cmat[(k * m1 + i, k * m1 + j)] = -gamma_h * 0.5 * ca * inv_l * dh[k][i * m1 + j];
                }
            }
        }
        let mut angle_lus: Vec<BlockTridiagLu> = Vec::with_capacity(na);
        let mut z = DMatrix::<f64>::zeros(dim, dim);
        for start in (0..na).step_by(ANGLE_CHUNK) {
            let end = (start + ANGLE_CHUNK).min(na);
            let part: Vec<Result<(BlockTridiagLu, DMatrix<f64>)>> = (start..end)
                .into_par_iter()
                .map(|n| {
                    let lu = to_p(self.row_jacobian(&geo, n, &dh)).factor()?;
                    let mut pc = cmat.clone();
                    lu.solve_matrix(&mut pc);
                    Ok((lu, pc))
                })
                .collect();
            for (n, res) in (start..end).zip(part) {
                let (lu, pc) = res?;
                z += pc * self.w[n];
                angle_lus.push(lu);
            }
        }
        let pe = to_p(self.row_jacobian(&geo, na, &dh)).to_dense();
        let coupling = gamma_h * ca * inv_l;
        let s = pe + z * coupling;
        let s_lu = s.lu();
        if !s_lu.is_invertible() {
            return Err(Error::Singular { block: nk });
        }
        Ok(DgFactor {
            angle_lus,
            s_lu,
            cmat,
            coupling,
        })
    }

    pub fn solve_with(&self, f: &DgFactor, b: &mut [f64]) -> Result<()> {
        let (nk, m1, na) = (self.n_cells, self.m1, self.n_angles);
        let dim = nk * m1;
        let solve_angle = |n: usize| {
            let mut y = vec![0.0; dim];
            self.gather(b, n, &mut y);
            f.angle_lus[n].solve(&mut y);
            y
        };
        let ys: Vec<Vec<f64>> = if nk * na >= PARALLEL_WORK {
            (0..na).into_par_iter().map(solve_angle).collect()
        } else {
            (0..na).map(solve_angle).collect()
        };
        let mut rhs = vec![0.0; dim];
        self.gather(b, na, &mut rhs);
        let mut acc = vec![0.0; dim];
        for (n, y) in ys.iter().enumerate() {
            for i in 0..dim {
                acc[i] += self.w[n] * y[i];
            }
        }
        for i in 0..dim {
            rhs[i] += f.coupling * acc[i];
        }
        let mut xe = nalgebra::DVector::from_vec(rhs);
        if !f.s_lu.solve_mut(&mut xe) {
            return Err(Error::Singular { block: nk });
        }
        let cx = &f.cmat * &xe;
        let finish = |(n, mut y): (usize, Vec<f64>)| {
            let mut c = cx.as_slice().to_vec();
            f.angle_lus[n].solve(&mut c);
            for i in 0..dim {
                y[i] -= c[i];
            }
            y
        };
        let xs: Vec<Vec<f64>> = if nk * na >= PARALLEL_WORK {
            ys.into_par_iter().enumerate().map(finish).collect()
        } else {
            ys.into_iter().enumerate().map(finish).collect()
        };
        for (n, x) in xs.iter().enumerate() {
            self.scatter(x, n, b);
        }
        self.scatter(xe.as_slice(), na, b);
        Ok(())
    }

    /// Largest magnitude of the transport and absorption rates at time `t`,
    /// used to estimate the explicit step limit.
    pub fn stiffness_estimate(&self, t: f64) -> f64 {
        let geo = self.geometry(t);
        let mu_max = self.mu.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        let p = (self.m1 * self.m1) as f64;
        let mut lam = 0.0f64;
        for k in 0..self.n_cells {
            let v = geo.vel[k].abs().max(geo.vel[k + 1].abs());
            lam = lam.max(p * (mu_max + v) / geo.dx(k));
        }
        lam + 2.0 * self.cfg.c_a / self.cfg.l
    }
}

pub struct DgFactor {
    angle_lus: Vec<BlockTridiagLu>,
    s_lu: LU<f64, Dyn, Dyn>,
    cmat: DMatrix<f64>,
    coupling: f64,
}

/// The system on one side of the source switch-off time.
pub struct Phase<'a> {
    pub sys: &'a DgSystem,
    pub source_on: bool,
}

impl OdeSystem for Phase<'_> {
    fn dim(&self) -> usize {
        self.sys.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.sys.rhs_with(t, y, dy, self.source_on)
    }
}

impl ImplicitSystem for Phase<'_> {
    type Factor = DgFactor;

    fn factor(&self, t: f64, y: &[f64], gamma_h: f64) -> Result<DgFactor> {
        self.sys.factor_with(t, y, gamma_h)
    }

    fn solve(&self, factor: &DgFactor, b: &mut [f64]) -> Result<()> {
        self.sys.solve_with(factor, b)
    }
}

impl OdeSystem for DgSystem {
    fn dim(&self) -> usize {
        self.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.rhs_with(t, y, dy, t <= self.cfg.t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AngularRule, MeshLaw};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn config(law: MeshLaw, m: usize, k: usize, n: usize) -> ProblemConfig {
        ProblemConfig {
            mesh_law: law,
            max_order: m,
            n_cells: k,
            n_angles: n,
            angular_rule: AngularRule::GaussLegendre,
            treatment: Treatment::Standard,
            x_f: 4.0,
            delta_x: 0.5,
            t0: 0.5,
            eval_times: vec![1.0],
            ..Default::default()
        }
    }

    fn random_state(sys: &DgSystem, seed: u64) -> Vec<f64> {
        let mut r = lcg(seed);
        (0..sys.len()).map(|_| r()).collect()
    }

    #[test]
    fn piecewise_constant_matches_finite_volume() {
        let cfg = config(MeshLaw::StaticUniform, 0, 8, 4);
        let sys = DgSystem::new(&cfg).unwrap();
        let u = random_state(&sys, 3);
        let mut du = vec![0.0; u.len()];
        let t = 0.2;
        sys.rhs_with(t, &u, &mut du, true).unwrap();

        let edges = crate::mesh::uniform_edges(8, 4.0).unwrap();
        let dx = edges[1] - edges[0];
        let avg = |k: usize, r: usize| u[sys.index(k, r, 0)] / dx.sqrt();
        for k in 0..8 {
            let e = avg(k, 4);
            let mut phi = 0.0;
            for n in 0..4 {
                let mu = sys.mu[n];
                let up = |kk: isize| {
                    if kk < 0 || kk >= 8 { 0.0 } else { avg(kk as usize, n) }
                };
                let (fl, fr) = if mu > 0.0 {
                    (mu * up(k as isize - 1), mu * up(k as isize))
                } else {
                    (mu * up(k as isize), mu * up(k as isize + 1))
                };
                // source cell average over the overlap with [-x0, x0]
                let q = (edges[k + 1].min(0.5) - edges[k].max(-0.5)).max(0.0) / dx;
                let psi = avg(k, n);
                let rate = -(fr - fl) / dx - psi + 0.5 * e + 0.5 * q;
                let got = du[sys.index(k, n, 0)] / dx.sqrt();
                assert!((got - rate).abs() < 1e-12, "k={k} n={n}: {got} vs {rate}");
                phi += sys.w[n] * psi;
            }
            let got = du[sys.index(k, 4, 0)] / dx.sqrt();
            assert!((got - (phi - e)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_state_without_source_is_fixed() {
        let mut cfg = config(MeshLaw::ThinSquare, 3, 8, 4);
        cfg.source_kind = crate::problem::SourceKind::None;
        let sys = DgSystem::new(&cfg).unwrap();
        let u = vec![0.0; sys.len()];
        let mut du = vec![1.0; u.len()];
        sys.rhs_with(0.3, &u, &mut du, true).unwrap();
        assert!(du.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equilibrium_energy_row_vanishes() {
        let cfg = config(MeshLaw::StaticUniform, 2, 8, 6);
        let sys = DgSystem::new(&cfg).unwrap();
        let mut u = random_state(&sys, 9);
        for k in 0..8 {
            for j in 0..3 {
                let e = u[sys.index(k, 6, j)];
                for n in 0..6 {
                    u[sys.index(k, n, j)] = 0.5 * e;
                }
            }
        }
        let mut du = vec![0.0; u.len()];
        sys.rhs_with(0.1, &u, &mut du, false).unwrap();
        for k in 0..8 {
            for j in 0..3 {
                assert!(du[sys.index(k, 6, j)].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn total_energy_changes_only_by_the_source() {
        // interior-supported state on the moving mesh: no flux leaves the domain
        let cfg = config(MeshLaw::ThinSquare, 3, 12, 4);
        let sys = DgSystem::new(&cfg).unwrap();
        let mut u = random_state(&sys, 17);
        for k in [0, 1, 10, 11] {
            for r in 0..5 {
                for j in 0..4 {
                    u[sys.index(k, r, j)] = 0.0;
                }
            }
        }
        let t = 0.2;
        let geo = sys.geometry(t);
        let mut du = vec![0.0; u.len()];
        sys.rhs_with(t, &u, &mut du, true).unwrap();
        // d/dt int u dx = sum_k (du_0 sqrt(dx) + u_0 d(sqrt dx)/dt)
        let mut rate = 0.0;
        for k in 0..12 {
            let dx = geo.dx(k);
            let ddx = geo.vel[k + 1] - geo.vel[k];
            for r in 0..5 {
                let wr = if r < 4 { sys.w[r] } else { 1.0 };
                let i = sys.index(k, r, 0);
                rate += wr * (du[i] * dx.sqrt() + u[i] * 0.5 * ddx / dx.sqrt());
            }
        }
        let src = 2.0 * cfg.x0;
        assert!((rate - src).abs() < 1e-11, "{rate} vs {src}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut cfg = config(MeshLaw::ThinSquare, 2, 8, 4);
        cfg.eos = EquationOfState::constant_cv(0.03, &cfg.constants).unwrap();
        let sys = DgSystem::new(&cfg).unwrap();
        let u: Vec<f64> = random_state(&sys, 5).iter().map(|v| v + 1.0).collect();
        let t = 0.3;
        let jac = sys.jacobian_dense(t, &u);
        let n = u.len();
        let mut up = u.clone();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        let scale = jac.amax();
        for j in 0..n {
            let h = 1e-6 * (1.0 + u[j].abs());
            up[j] = u[j] + h;
            sys.rhs_with(t, &up, &mut fp, true).unwrap();
            up[j] = u[j] - h;
            sys.rhs_with(t, &up, &mut fm, true).unwrap();
            up[j] = u[j];
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!(
                    (fd - jac[(i, j)]).abs() < 1e-6 * scale,
                    "({i},{j}) {fd} vs {}",
                    jac[(i, j)]
                );
            }
        }
    }

    #[test]
    fn structured_solve_matches_dense() {
        for eos_nonlinear in [false, true] {
            let mut cfg = config(MeshLaw::ThinSquare, 2, 8, 6);
            if eos_nonlinear {
                cfg.eos = EquationOfState::constant_cv(0.03, &cfg.constants).unwrap();
            }
            let sys = DgSystem::new(&cfg).unwrap();
            let u: Vec<f64> = random_state(&sys, 11).iter().map(|v| v + 1.0).collect();
            let (t, gh) = (0.25, 0.03);
            let f = sys.factor_with(t, &u, gh).unwrap();
            let b = random_state(&sys, 12);
            let mut x = b.clone();
            sys.solve_with(&f, &mut x).unwrap();
            let n = sys.len();
            let a = DMatrix::identity(n, n) - sys.jacobian_dense(t, &u) * gh;
            let r = a * nalgebra::DVector::from_column_slice(&x);
            for i in 0..n {
                assert!((r[i] - b[i]).abs() < 1e-10, "{i}: {} vs {}", r[i], b[i]);
            }
        }
    }

    #[test]
    fn upwinding_follows_relative_speed() {
        // a single nonzero cell only feeds its downwind neighbour
        let cfg = config(MeshLaw::StaticUniform, 1, 6, 2);
        let sys = DgSystem::new(&cfg).unwrap();
        let mut u = vec![0.0; sys.len()];
        u[sys.index(2, 0, 0)] = 1.0;
        u[sys.index(2, 1, 0)] = 1.0;
        let mut du = vec![0.0; u.len()];
        sys.rhs_with(0.1, &u, &mut du, false).unwrap();
        let nonzero = |k: usize, r: usize| (0..2).any(|j| du[sys.index(k, r, j)] != 0.0);
        // mu[0] < 0 travels left, mu[1] > 0 right
        assert!(nonzero(1, 0) && !nonzero(3, 0));
        assert!(nonzero(3, 1) && !nonzero(1, 1));
    }
}
