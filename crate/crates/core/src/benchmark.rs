//! Semi-analytic S2 benchmarks: the scalar flux and material energy density
//! of the linearized S2 system, obtained by convolving its Green's functions
//! with a square or Gaussian source.
//!
//! For a unit pulse at `(s, 0)` the scalar-flux Green's function is the S2
//! uncollided pulse (two rays moving at `+-1/sqrt3`) plus the regular part
//! `(sqrt3/2) e^{-t} t I1(z)/z` on `t > sqrt3|x-s|`, with
//! `z = sqrt(t^2 - 3(x-s)^2)`. The energy Green's function is
//! `(sqrt3/2) e^{-t} I0(z)` on the same support.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::adaptive::{integrate, integrate_with_breaks, Tolerance};
use crate::error::{Error, Result};
use crate::problem::SourceKind;
use crate::special::{bessel_i0_scaled, bessel_i1_over_z_scaled};
use crate::uncollided::{s2_gaussian, s2_square};

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Beyond this many widths the Gaussian source is below 1e-27 and ignored.
const GAUSSIAN_CUTOFF: f64 = 8.0;

/// Tolerance a reported value must meet.
pub const REQUIRED_ERROR: f64 = 1e-8;

/// Regular part of the scalar-flux Green's function for a pulse at `s`.
pub fn green_phi_regular(x: f64, s: f64, t: f64) -> f64 {
    let d = x - s;
    let z2 = t * t - 3.0 * d * d;
    if !(t > 0.0) || z2 < 0.0 {
        return 0.0;
    }
    let z = z2.sqrt();
    0.5 * SQRT3 * (z - t).exp() * t * bessel_i1_over_z_scaled(z)
}

/// Material-energy Green's function for a pulse at `s`.
pub fn green_e(x: f64, s: f64, t: f64) -> f64 {
    let d = x - s;
    let z2 = t * t - 3.0 * d * d;
    if !(t > 0.0) || z2 < 0.0 {
        return 0.0;
    }
    let z = z2.sqrt();
    0.5 * SQRT3 * (z - t).exp() * bessel_i0_scaled(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSource {
    pub kind: SourceKind,
    pub x0: f64,
    pub t0: f64,
}

impl BenchmarkSource {
    pub fn square(x0: f64, t0: f64) -> Self {
        Self {
            kind: SourceKind::Square,
            x0,
            t0,
        }
    }

    pub fn gaussian(x0: f64, t0: f64) -> Self {
        Self {
            kind: SourceKind::Gaussian,
            x0,
            t0,
        }
    }

    fn profile(&self, s: f64) -> f64 {
        match self.kind {
            SourceKind::Square => {
                if s.abs() <= self.x0 {
                    1.0
                } else {
                    0.0
                }
            }
            SourceKind::Gaussian => (-(s * s) / (self.x0 * self.x0)).exp(),
            SourceKind::None => 0.0,
        }
    }

    /// Interval outside which the profile is treated as zero.
    fn support(&self) -> (f64, f64) {
        match self.kind {
            SourceKind::Square => (-self.x0, self.x0),
            SourceKind::Gaussian => (-GAUSSIAN_CUTOFF * self.x0, GAUSSIAN_CUTOFF * self.x0),
            SourceKind::None => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkValue {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub error: f64,
}

/// Quadrature settings for the Green's-function convolutions.
#[derive(Debug, Clone, Copy)]
pub struct GreensEvaluator {
    pub outer: Tolerance,
    pub inner: Tolerance,
}

impl Default for GreensEvaluator {
    fn default() -> Self {
        Self {
            outer: Tolerance::new(1e-10, 1e-12),
            inner: Tolerance::new(1e-14, 1e-13),
        }
    }
}

#[derive(Clone, Copy)]
enum Field {
    Phi,
    Energy,
}

impl GreensEvaluator {
    pub fn phi(&self, x: f64, t: f64, src: &BenchmarkSource) -> Result<BenchmarkValue> {
        let mut v = self.collided(x, t, src, Field::Phi)?;
        v.value += match src.kind {
            SourceKind::Square => s2_square(x, t, src.x0, src.t0),
            SourceKind::Gaussian => s2_gaussian(x, t, src.x0, src.t0),
            SourceKind::None => 0.0,
        };
        Ok(v)
    }

    pub fn energy(&self, x: f64, t: f64, src: &BenchmarkSource) -> Result<BenchmarkValue> {
        self.collided(x, t, src, Field::Energy)
    }

    /// `int dtau int ds S(s) G(x, s, tau)` over emission ages `tau = t - t'`.
    ///
    /// The spatial integral runs along `s = x + tau sigma / sqrt3`, which maps
    /// the light cone onto `sigma` in `[-1, 1]`; the kernel is smooth in `sigma`
    /// because `I1(z)/z` and `I0(z)` are even in `z`.
    fn collided(&self, x: f64, t: f64, src: &BenchmarkSource, field: Field) -> Result<BenchmarkValue> {
        if !(t > 0.0) || src.kind == SourceKind::None {
            return Ok(BenchmarkValue { value: 0.0, error: 0.0 });
        }
        let tau_lo = (t - src.t0).max(0.0);
        let (a, b) = src.support();
        let inner_err = Mutex::new(0.0f64);
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let f = |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            let c = SQRT3 / tau;
            let lo = ((a - x) * c).max(-1.0);
            let hi = ((b - x) * c).min(1.0);
            if hi <= lo {
                return 0.0;
            }
            let kernel = |sigma: f64| {
                let z = tau * (1.0 - sigma * sigma).max(0.0).sqrt();
                let s = x + tau * sigma / SQRT3;
                let g = match field {
                    Field::Phi => 0.5 * tau * tau * bessel_i1_over_z_scaled(z),
                    Field::Energy => 0.5 * tau * bessel_i0_scaled(z),
                };
                src.profile(s) * g * (z - tau).exp()
            };
            // the kernel peaks at sigma = 0 with width ~ 1/sqrt(tau)
            let breaks = [0.0, -2.0 / tau.sqrt(), 2.0 / tau.sqrt()];
            match integrate_with_breaks(kernel, lo, hi, &breaks, self.inner) {
                Ok(est) => {
                    let mut e = inner_err.lock().unwrap();
                    *e = e.max(est.error);
                    est.value
                }
                Err(err) => {
                    failure.lock().unwrap().get_or_insert(err);
                    0.0
                }
            }
        };
        // ages at which the cone starts or stops covering a support edge
        let breaks: Vec<f64> = [a, b].iter().map(|e| SQRT3 * (x - e).abs()).collect();
        let est = integrate_with_breaks(f, tau_lo, t, &breaks, self.outer)?;
        if let Some(err) = failure.into_inner().unwrap() {
            return Err(err);
        }
        let error = est.error + (t - tau_lo) * inner_err.into_inner().unwrap();
        Ok(BenchmarkValue {
            value: est.value,
            error,
        })
    }

    /// `int (G + G_U) dx` for a unit pulse, uncollided rays included. The
    /// medium neither gains nor loses energy, so this stays at 1.
    pub fn pulse_energy(&self, t: f64) -> Result<f64> {
        let reg = integrate(
            |sigma| {
                let s = t * sigma / SQRT3;
                (t / SQRT3) * (green_phi_regular(0.0, s, t) + green_e(0.0, s, t))
            },
            -1.0,
            1.0,
            self.inner,
        )?;
        Ok(reg.value + (-t).exp())
    }
}

pub fn benchmark_phi(x: f64, t: f64, src: &BenchmarkSource) -> Result<BenchmarkValue> {
    checked(GreensEvaluator::default().phi(x, t, src)?)
}

pub fn benchmark_e(x: f64, t: f64, src: &BenchmarkSource) -> Result<BenchmarkValue> {
    checked(GreensEvaluator::default().energy(x, t, src)?)
}

fn checked(v: BenchmarkValue) -> Result<BenchmarkValue> {
    if v.error > REQUIRED_ERROR {
        return Err(Error::QuadratureNonConvergence {
            estimate: v.error,
            tol: REQUIRED_ERROR,
        });
    }
    Ok(v)
}

/// Benchmark values on a grid, `values[i][j]` at `(xs[i], ts[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub phi: Vec<Vec<BenchmarkValue>>,
    pub e: Vec<Vec<BenchmarkValue>>,
}

impl BenchmarkGrid {
    pub fn max_error(&self) -> f64 {
        self.phi
            .iter()
            .chain(&self.e)
            .flatten()
            .map(|v| v.error)
            .fold(0.0, f64::max)
    }
}

/// Evaluates both fields at every grid point in parallel; results are
/// assembled in grid order so the output does not depend on scheduling.
pub fn benchmark_grid(xs: &[f64], ts: &[f64], src: &BenchmarkSource) -> Result<BenchmarkGrid> {
    let points: Vec<(usize, usize)> = (0..xs.len())
        .flat_map(|i| (0..ts.len()).map(move |j| (i, j)))
        .collect();
    let vals: Vec<Result<(BenchmarkValue, BenchmarkValue)>> = points
        .par_iter()
        .map(|&(i, j)| Ok((benchmark_phi(xs[i], ts[j], src)?, benchmark_e(xs[i], ts[j], src)?)))
        .collect();
    let zero = BenchmarkValue { value: 0.0, error: 0.0 };
    let mut phi = vec![vec![zero; ts.len()]; xs.len()];
    let mut e = phi.clone();
    for (&(i, j), v) in points.iter().zip(vals) {
        let (p, q) = v?;
        phi[i][j] = p;
        e[i][j] = q;
    }
    Ok(BenchmarkGrid {
        xs: xs.to_vec(),
        ts: ts.to_vec(),
        phi,
        e,
    })
}
