//! Per-cell operators of the moving-mesh weak form and the source and
//! emission projections.
//!
//! Matrices are dense row-major `(M+1) x (M+1)` with entry `(i, j)` at
//! `i * (M+1) + j`.

use crate::error::Result;
use crate::problem::{EquationOfState, EosKind, ProblemConfig, SourceKind};
use crate::quadrature::{gauss_legendre, Cell};

/// `int_{-1}^{1} P_j P_i' dxi`.
pub fn int_pj_dpi(i: usize, j: usize) -> f64 {
    if j < i && (i + j) % 2 == 1 {
        2.0
    } else {
        0.0
    }
}

/// `int_{-1}^{1} xi P_j P_i' dxi`.
pub fn int_xi_pj_dpi(i: usize, j: usize) -> f64 {
    if i == j {
        2.0 * i as f64 / (2 * i + 1) as f64
    } else if j + 2 <= i && (i - j) % 2 == 0 {
        2.0
    } else {
        0.0
    }
}

fn norm(i: usize, j: usize) -> f64 {
    (((2 * i + 1) * (2 * j + 1)) as f64).sqrt()
}

/// Width-independent parts of `L` and `G`.
#[derive(Debug, Clone)]
pub struct ReferenceOperators {
    pub max_order: usize,
    /// `sqrt((2i+1)(2j+1)) int P_j P_i'`
    pub d1: Vec<f64>,
    /// `sqrt((2i+1)(2j+1)) int xi P_j P_i'`
    pub d2: Vec<f64>,
}

impl ReferenceOperators {
    pub fn new(max_order: usize) -> Self {
        let m1 = max_order + 1;
        let mut d1 = vec![0.0; m1 * m1];
        let mut d2 = vec![0.0; m1 * m1];
        for i in 0..m1 {
            for j in 0..m1 {
                d1[i * m1 + j] = norm(i, j) * int_pj_dpi(i, j);
                d2[i * m1 + j] = norm(i, j) * int_xi_pj_dpi(i, j);
            }
        }
        Self { max_order, d1, d2 }
    }

    /// `L_ij = int B_j dB_i/dx dx` on a cell of width `dx`.
    pub fn l_into(&self, dx: f64, out: &mut [f64]) {
        for (o, d) in out.iter_mut().zip(&self.d1) {
            *o = d / dx;
        }
    }

    /// `G_ij = int B_j dB_i/dt dx` for a cell of width `dx` whose edges move at `vl`, `vr`.
    pub fn g_into(&self, dx: f64, vl: f64, vr: f64, out: &mut [f64]) {
        let m1 = self.max_order + 1;
        let dv = vr - vl;
        let sv = vl + vr;
        for i in 0..m1 {
            for j in 0..m1 {
                let k = i * m1 + j;
                let mut g = -0.5 * (sv * self.d1[k] + dv * self.d2[k]) / dx;
                if i == j {
                    g -= 0.5 * dv / dx;
                }
                out[k] = g;
            }
        }
    }
}

pub fn assemble_l(cell: &Cell, max_order: usize) -> Vec<f64> {
    let m1 = max_order + 1;
    let mut out = vec![0.0; m1 * m1];
    ReferenceOperators::new(max_order).l_into(cell.width(), &mut out);
    out
}

pub fn assemble_g(cell: &Cell, vl: f64, vr: f64, max_order: usize) -> Vec<f64> {
    let m1 = max_order + 1;
    let mut out = vec![0.0; m1 * m1];
    ReferenceOperators::new(max_order).g_into(cell.width(), vl, vr, &mut out);
    out
}

/// Tabulated basis on the `(2M+1)`-point Gauss rule used for every projection.
#[derive(Debug, Clone)]
pub struct ProjectionRule {
    pub max_order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `sqrt(2j+1) P_j(xi_q)` at `[q * (M+1) + j]`
    pub p: Vec<f64>,
}

impl ProjectionRule {
    pub fn new(max_order: usize) -> Result<Self> {
        let q = gauss_legendre(2 * max_order + 1)?;
        let m1 = max_order + 1;
        let mut p = vec![0.0; q.nodes.len() * m1];
        for (iq, &xi) in q.nodes.iter().enumerate() {
            basis_unnormalized(max_order, xi, &mut p[iq * m1..(iq + 1) * m1]);
        }
        Ok(Self {
            max_order,
            nodes: q.nodes.clone(),
            weights: q.weights.clone(),
            p,
        })
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    /// Moments `int B_i f dx` over the sub-interval `[a, b]` of `cell`.
    pub fn project_on(&self, cell: &Cell, a: f64, b: f64, f: impl Fn(f64) -> f64, out: &mut [f64]) {
        let m1 = self.max_order + 1;
        let scale = 0.5 * (b - a) / cell.width().sqrt();
        let mut bj = vec![0.0; m1];
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * s;
            let v = f(x);
            if v == 0.0 {
                continue;
            }
            basis_unnormalized(self.max_order, cell.to_reference(x), &mut bj);
            for i in 0..m1 {
                out[i] += scale * w * bj[i] * v;
            }
        }
    }

    /// Values at the rule's nodes of the expansion with coefficients `u` on a cell of width `dx`.
    pub fn reconstruct(&self, u: &[f64], dx: f64, out: &mut [f64]) {
        let m1 = self.max_order + 1;
        let s = 1.0 / dx.sqrt();
        for (q, o) in out.iter_mut().enumerate() {
            let row = &self.p[q * m1..(q + 1) * m1];
            *o = s * row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// `sqrt(2j+1) P_j(xi)` for `j = 0..=max_order`.
pub fn basis_unnormalized(max_order: usize, xi: f64, out: &mut [f64]) {
    let (mut p0, mut p1) = (1.0, xi);
    for j in 0..=max_order {
        let pj = match j {
            0 => 1.0,
            1 => xi,
            _ => {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * xi * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        out[j] = ((2 * j + 1) as f64).sqrt() * pj;
    }
}

/// Source profile without the time switch.
pub fn source_profile(x: f64, cfg: &ProblemConfig) -> f64 {
    match cfg.source_kind {
        SourceKind::Square => {
            if x.abs() <= cfg.x0 {
                1.0
            } else {
                0.0
            }
        }
        SourceKind::Gaussian => (-(x * x) / (cfg.x0 * cfg.x0)).exp(),
        SourceKind::None => 0.0,
    }
}

/// Moments of the source profile on `cell`; square-source cells are split at `+-x0`.
pub fn project_profile_into(rule: &ProjectionRule, cell: &Cell, cfg: &ProblemConfig, out: &mut [f64]) {
    out.fill(0.0);
    match cfg.source_kind {
        SourceKind::None => {}
        SourceKind::Gaussian => {
            rule.project_on(cell, cell.x_l, cell.x_r, |x| source_profile(x, cfg), out)
        }
        SourceKind::Square => {
            let a = cell.x_l.max(-cfg.x0);
            let b = cell.x_r.min(cfg.x0);
            if b > a {
                rule.project_on(cell, a, b, |_| 1.0, out);
            }
        }
    }
}

/// `Q_i = int B_i Q(x, t) dx` on `cell`.
pub fn project_source(cell: &Cell, t: f64, cfg: &ProblemConfig, max_order: usize) -> Result<Vec<f64>> {
    let rule = ProjectionRule::new(max_order)?;
    let mut out = vec![0.0; max_order + 1];
    if (0.0..=cfg.t0).contains(&t) {
        project_profile_into(&rule, cell, cfg, &mut out);
    }
    Ok(out)
}

/// `d(T^4)/de`.
#[inline]
pub fn emission_derivative(e: f64, eos: &EquationOfState) -> f64 {
    match eos.kind {
        EosKind::SuOlson => 1.0,
        EosKind::ConstantCv => {
            let r = e.abs() / eos.cv0_bar;
            4.0 * r * r * r / eos.cv0_bar
        }
    }
}

/// `H_i = int B_i T^4(e) dx` from the energy coefficients `e` on a cell of width `dx`.
pub fn project_emission_into(
    rule: &ProjectionRule,
    e: &[f64],
    dx: f64,
    eos: &EquationOfState,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let m1 = rule.max_order + 1;
    if eos.kind == EosKind::SuOlson {
        // T^4 = e is in the span of the basis
        out[..m1].copy_from_slice(&e[..m1]);
        return;
    }
    rule.reconstruct(e, dx, scratch);
    let s = 0.5 * dx.sqrt();
    out[..m1].fill(0.0);
    for (q, &eq) in scratch.iter().enumerate() {
        let f = eos.emission(eq) * rule.weights[q] * s;
        if f == 0.0 {
            continue;
        }
        let row = &rule.p[q * m1..(q + 1) * m1];
        for i in 0..m1 {
            out[i] += row[i] * f;
        }
    }
}

pub fn project_emission(cell: &Cell, e: &[f64], eos: &EquationOfState, max_order: usize) -> Result<Vec<f64>> {
    let rule = ProjectionRule::new(max_order)?;
    let mut scratch = vec![0.0; rule.n_points()];
    let mut out = vec![0.0; max_order + 1];
    project_emission_into(&rule, e, cell.width(), eos, &mut scratch, &mut out);
    Ok(out)
}

/// Jacobian `dH_i/de_j` (row-major) for a cell of width `dx`.
pub fn emission_jacobian_into(
    rule: &ProjectionRule,
    e: &[f64],
    dx: f64,
    eos: &EquationOfState,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let m1 = rule.max_order + 1;
    out[..m1 * m1].fill(0.0);
    if eos.kind == EosKind::SuOlson {
        for i in 0..m1 {
            out[i * m1 + i] = 1.0;
        }
        return;
    }
    rule.reconstruct(e, dx, scratch);
    // dH_i/de_j = sum_q w_q (dx/2) B_i B_j f'(e_q), with B = p / sqrt(dx)
    for (q, &eq) in scratch.iter().enumerate() {
        let f = 0.5 * rule.weights[q] * emission_derivative(eq, eos);
        if f == 0.0 {
            continue;
        }
        let row = &rule.p[q * m1..(q + 1) * m1];
        for i in 0..m1 {
            for j in 0..m1 {
                out[i * m1 + j] += f * row[i] * row[j];
            }
        }
    }
}
