//! Quadrature rules on [-1, 1] and the orthonormal Legendre basis on a cell.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::problem::AngularRule;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub kind: AngularRule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        let n = self.order();
        match self.kind {
            AngularRule::GaussLegendre => 2 * n - 1,
            AngularRule::GaussLobatto => 2 * n - 3,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrates `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|s| f(mid + half * s))
    }
}

/// Legendre polynomial `P_n(x)` and `P_{n-1}(x)` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// Derivative `P_n'(x)`, valid on the closed interval including `x = ±1`.
pub fn legendre_derivative(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if (1.0 - x.abs()) < 1e-14 {
        let nf = n as f64;
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        return s * nf * (nf + 1.0) / 2.0;
    }
    let (p, p_prev) = legendre_pair(n, x);
    n as f64 * (x * p - p_prev) / (x * x - 1.0)
}

fn compute_gauss_legendre(n: usize) -> QuadratureSet {
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            let dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        let (p, p_prev) = legendre_pair(n, x);
        let dp = nf * (x * p - p_prev) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureSet {
        kind: AngularRule::GaussLegendre,
        nodes,
        weights,
    }
}

fn compute_gauss_lobatto(n: usize) -> QuadratureSet {
    // Newton on (1 - x^2) P'_{n-1}, seeded at the Chebyshev-Gauss-Lobatto points.
    let deg = n - 1;
    let degf = deg as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * i as f64 / degf).cos();
        if i > 0 {
            for _ in 0..NEWTON_MAX_ITER {
                let (p, p_prev) = legendre_pair(deg, x);
                let dx = (x * p - p_prev) / (n as f64 * p);
                x -= dx;
                if dx.abs() <= NEWTON_TOL {
                    break;
                }
            }
        }
        let p = legendre(deg, x);
        let w = 2.0 / (degf * (degf + 1.0) * p * p);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    nodes[0] = -1.0;
    nodes[n - 1] = 1.0;
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureSet {
        kind: AngularRule::GaussLobatto,
        nodes,
        weights,
    }
}

type Cache = Mutex<HashMap<(AngularRule, usize), Arc<QuadratureSet>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached(kind: AngularRule, n: usize, build: fn(usize) -> QuadratureSet) -> Arc<QuadratureSet> {
    let mut map = cache().lock().expect("quadrature cache poisoned");
    map.entry((kind, n)).or_insert_with(|| Arc::new(build(n))).clone()
}

/// Gauss-Legendre rule with `n` points.
pub fn gauss_legendre(n: usize) -> Result<Arc<QuadratureSet>> {
    if n == 0 {
        return Err(Error::QuadratureOrder {
            kind: "gauss_legendre",
            order: n,
        });
    }
    Ok(cached(AngularRule::GaussLegendre, n, compute_gauss_legendre))
}

/// Gauss-Lobatto rule with `n` points including both endpoints.
pub fn gauss_lobatto(n: usize) -> Result<Arc<QuadratureSet>> {
    if n < 2 {
        return Err(Error::QuadratureOrder {
            kind: "gauss_lobatto",
            order: n,
        });
    }
    Ok(cached(AngularRule::GaussLobatto, n, compute_gauss_lobatto))
}

pub fn angular_rule(kind: AngularRule, n: usize) -> Result<Arc<QuadratureSet>> {
    match kind {
        AngularRule::GaussLegendre => gauss_legendre(n),
        AngularRule::GaussLobatto => gauss_lobatto(n),
    }
}

/// A cell `[x_l, x_r]` carrying `max_order + 1` orthonormal Legendre modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x_l: f64,
    pub x_r: f64,
}

impl Cell {
    pub fn new(x_l: f64, x_r: f64) -> Result<Self> {
        if !(x_r > x_l) {
            return Err(Error::InvalidArgument(format!(
                "cell edges must satisfy x_r > x_l, got [{x_l}, {x_r}]"
            )));
        }
        Ok(Self { x_l, x_r })
    }

    pub fn width(&self) -> f64 {
        self.x_r - self.x_l
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.x_l + self.x_r)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_l && x <= self.x_r
    }

    /// Affine map of `x` to the reference interval; `x_l -> -1`, `x_r -> 1`.
    pub fn to_reference(&self, x: f64) -> f64 {
        if x == self.x_l {
            -1.0
        } else if x == self.x_r {
            1.0
        } else {
            (self.x_l + self.x_r - 2.0 * x) / (self.x_l - self.x_r)
        }
    }

    pub fn from_reference(&self, xi: f64) -> f64 {
        self.midpoint() + 0.5 * self.width() * xi
    }
}

pub fn map_to_reference(x: f64, cell: &Cell) -> Result<f64> {
    if !cell.contains(x) {
        return Err(Error::OutOfRange {
            x,
            lo: cell.x_l,
            hi: cell.x_r,
        });
    }
    Ok(cell.to_reference(x))
}

/// Orthonormal basis function `B_i = sqrt(2i+1)/sqrt(dx) P_i(xi)`.
pub fn basis_eval(i: usize, xi: f64, cell: &Cell) -> f64 {
    ((2 * i + 1) as f64 / cell.width()).sqrt() * legendre(i, xi)
}

/// All basis values `B_0..=B_m` at reference coordinate `xi`.
pub fn basis_values(max_order: usize, xi: f64, cell: &Cell, out: &mut [f64]) {
    let inv = 1.0 / cell.width();
    let (mut p_prev, mut p) = (1.0, xi);
    for (i, o) in out.iter_mut().enumerate().take(max_order + 1) {
        let pi = match i {
            0 => 1.0,
            1 => xi,
            _ => {
                let kf = i as f64;
                let next = ((2.0 * kf - 1.0) * xi * p - (kf - 1.0) * p_prev) / kf;
                p_prev = p;
                p = next;
                next
            }
        };
        *o = ((2 * i + 1) as f64 * inv).sqrt() * pi;
    }
}

/// Weighted angular sum `phi = sum_n w_n psi_n`.
pub fn scalar_flux_from_angles(psi: &[f64], quad: &QuadratureSet) -> Result<f64> {
    if psi.len() != quad.order() {
        return Err(Error::LengthMismatch {
            expected: quad.order(),
            got: psi.len(),
        });
    }
    Ok(psi.iter().zip(&quad.weights).map(|(p, w)| p * w).sum())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn orthonormal_on_random_cells(x_l in -100f64..100.0, log_dx in -3f64..3.0, m in 0usize..7) {
            let c = Cell::new(x_l, x_l + 10f64.powf(log_dx)).unwrap();
            let q = gauss_legendre(m + 1).unwrap();
            for i in 0..=m {
                for j in 0..=m {
                    let v = q.integrate(|xi| basis_eval(i, xi, &c) * basis_eval(j, xi, &c)) * 0.5 * c.width();
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((v - e).abs() < 1e-12);
                }
            }
        }
    }
}
