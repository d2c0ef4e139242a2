//! Adaptive time integrators: explicit Dormand-Prince 5(4) and the L-stable,
//! stiffly accurate SDIRK4 of Hairer and Wanner (five stages, order 4 with an
//! embedded order-3 estimate).
//!
//! Both step exactly onto every requested output time instead of relying on
//! dense output.

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// A system that can factor and solve `(I - gamma_h J) x = b`, with `J` the
/// Jacobian of the right-hand side at `(t, y)`.
pub trait ImplicitSystem: OdeSystem {
    type Factor;
    fn factor(&self, t: f64, y: &[f64], gamma_h: f64) -> Result<Self::Factor>;
    fn solve(&self, factor: &Self::Factor, b: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
}

impl StepControl {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 2_000_000,
            h0: None,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub factorizations: usize,
    pub linear_solves: usize,
    pub newton_failures: usize,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.rhs_evals += o.rhs_evals;
        self.factorizations += o.factorizations;
        self.linear_solves += o.linear_solves;
        self.newton_failures += o.newton_failures;
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], c: &StepControl) -> f64 {
    let mut s = 0.0;
    for i in 0..err.len() {
        let sc = c.atol + c.rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        s += r * r;
    }
    (s / err.len().max(1) as f64).sqrt()
}

fn initial_step(
    sys: &impl OdeSystem,
    t: f64,
    y: &[f64],
    f0: &[f64],
    order: i32,
    span: f64,
    c: &StepControl,
    stats: &mut Stats,
) -> Result<f64> {
    let n = y.len();
    let zero = vec![0.0; n];
    let d0 = error_norm(y, y, &zero, c);
    let d1 = error_norm(f0, y, &zero, c);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = error_norm(&diff, y, &zero, c) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    Ok((100.0 * h0).min(h1).min(span).min(c.h_max))
}

fn check_budget(stats: &Stats, t: f64, c: &StepControl) -> Result<()> {
    if stats.accepted + stats.rejected >= c.max_steps {
        return Err(Error::StepBudget {
            t,
            budget: c.max_steps,
        });
    }
    Ok(())
}

fn check_underflow(t: f64, h: f64, stats: &Stats) -> Result<()> {
    if h < 1e-14 * t.abs().max(1.0) {
        return Err(Error::StepUnderflow {
            t,
            h,
            steps: stats.accepted,
            rejected: stats.rejected,
        });
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Explicit Dormand-Prince 5(4) integrator with FSAL and a PI step controller.
pub struct Dopri5 {
    pub control: StepControl,
    pub stats: Stats,
    h: Option<f64>,
}

impl Dopri5 {
    pub fn new(control: StepControl) -> Self {
        Self {
            control,
            stats: Stats::default(),
            h: control.h0,
        }
    }

    /// Advances `y` from `t` to `t_end`.
    pub fn advance(&mut self, sys: &impl OdeSystem, t: f64, y: &mut [f64], t_end: f64) -> Result<()> {
        let n = sys.dim();
        if y.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: y.len() });
        }
        if t_end <= t {
            return Ok(());
        }
        let c = self.control;
        let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut t = t;
        sys.rhs(t, y, &mut k[0])?;
        self.stats.rhs_evals += 1;
        let mut h = match self.h {
            Some(h) => h,
            None => initial_step(sys, t, y, &k[0], 5, t_end - t, &c, &mut self.stats)?,
        };
        let mut err_prev: f64 = 1e-4;
        let mut last_rejected = false;
        while t < t_end {
            check_budget(&self.stats, t, &c)?;
            h = h.min(c.h_max);
            let mut last = false;
            if t + h >= t_end || t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }
            check_underflow(t, h, &self.stats)?;

            let stage = |ytmp: &mut [f64], coefs: &[(usize, f64)], k: &[Vec<f64>]| {
                for i in 0..n {
                    let mut s = 0.0;
                    for &(j, a) in coefs {
                        s += a * k[j][i];
                    }
                    ytmp[i] = y[i] + h * s;
                }
            };
            stage(&mut ytmp, &[(0, A21)], &k);
            sys.rhs(t + C2 * h, &ytmp, &mut k[1])?;
            stage(&mut ytmp, &[(0, A31), (1, A32)], &k);
            sys.rhs(t + C3 * h, &ytmp, &mut k[2])?;
            stage(&mut ytmp, &[(0, A41), (1, A42), (2, A43)], &k);
            sys.rhs(t + C4 * h, &ytmp, &mut k[3])?;
            stage(&mut ytmp, &[(0, A51), (1, A52), (2, A53), (3, A54)], &k);
            sys.rhs(t + C5 * h, &ytmp, &mut k[4])?;
            stage(&mut ytmp, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k);
            let t_new = if last { t_end } else { t + h };
            sys.rhs(t_new, &ytmp, &mut k[5])?;
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            sys.rhs(t_new, &ynew, &mut k[6])?;
            self.stats.rhs_evals += 6;
            for i in 0..n {
                err[i] = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                        + E7 * k[6][i]);
            }
            let e = error_norm(&err, y, &ynew, &c);
            if !e.is_finite() {
                self.stats.rejected += 1;
                h *= 0.1;
                last_rejected = true;
                continue;
            }
            if e <= 1.0 {
                // PI controller (Hairer's beta = 0.04)
                let fac = 0.9 * e.max(1e-10).powf(-0.2 + 0.75 * 0.04) * err_prev.powf(0.04);
                let mut fac = fac.clamp(0.2, 10.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                err_prev = e.max(1e-4);
                y.copy_from_slice(&ynew);
                k.swap(0, 6);
                t = t_new;
                self.stats.accepted += 1;
                last_rejected = false;
                if !last {
                    h *= fac;
                }
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * e.powf(-0.2)).max(0.2);
                last_rejected = true;
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

// Hairer-Wanner SDIRK4 (stiffly accurate, L-stable), gamma = 1/4
pub(crate) const SD_GAMMA: f64 = 0.25;
pub(crate) const SD_C: [f64; 5] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
pub(crate) const SD_A: [[f64; 5]; 5] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
pub(crate) const SD_BHAT: [f64; 5] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

const NEWTON_MAX_ITER: usize = 8;
const NEWTON_KAPPA: f64 = 0.05;

/// L-stable singly diagonally implicit Runge-Kutta method of order 4.
pub struct Sdirk4 {
    pub control: StepControl,
    pub stats: Stats,
    h: Option<f64>,
}

impl Sdirk4 {
    pub fn new(control: StepControl) -> Self {
        Self {
            control,
            stats: Stats::default(),
            h: control.h0,
        }
    }

    pub fn advance<S: ImplicitSystem>(&mut self, sys: &S, t: f64, y: &mut [f64], t_end: f64) -> Result<()> {
        let n = sys.dim();
        if y.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: y.len() });
        }
        if t_end <= t {
            return Ok(());
        }
        let c = self.control;
        let mut t = t;
        let mut f0 = vec![0.0; n];
        let mut h = match self.h {
            Some(h) => h,
            None => {
                sys.rhs(t, y, &mut f0)?;
                self.stats.rhs_evals += 1;
                initial_step(sys, t, y, &f0, 4, t_end - t, &c, &mut self.stats)?
            }
        };
        let mut k: Vec<Vec<f64>> = (0..5).map(|_| vec![0.0; n]).collect();
        let mut base = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut fz = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut last_rejected = false;

        while t < t_end {
            check_budget(&self.stats, t, &c)?;
            h = h.min(c.h_max);
            let mut last = false;
            if t + h >= t_end || t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }
            check_underflow(t, h, &self.stats)?;
            let gh = SD_GAMMA * h;
            let factor = sys.factor(t, y, gh)?;
            self.stats.factorizations += 1;

            let mut converged = true;
            'stages: for s in 0..5 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += SD_A[s][j] * k[j][i];
                    }
                    base[i] = y[i] + h * acc;
                    // predictor: reuse the previous stage derivative
                    z[i] = base[i] + if s > 0 { gh * k[s - 1][i] } else { 0.0 };
                }
                let ts = t + SD_C[s] * h;
                let mut prev_norm = f64::INFINITY;
                let mut ok = false;
                for it in 0..NEWTON_MAX_ITER {
                    match sys.rhs(ts, &z, &mut fz) {
                        Ok(()) => {}
                        Err(Error::NonFinite { .. }) => break,
                        Err(e) => return Err(e),
                    }
                    self.stats.rhs_evals += 1;
                    for i in 0..n {
                        delta[i] = base[i] + gh * fz[i] - z[i];
                    }
                    sys.solve(&factor, &mut delta)?;
                    self.stats.linear_solves += 1;
                    for i in 0..n {
                        z[i] += delta[i];
                    }
                    let dn = error_norm(&delta, y, &z, &c);
                    if !dn.is_finite() {
                        break;
                    }
                    let theta = dn / prev_norm;
                    if it > 0 && theta >= 0.9 {
                        break;
                    }
                    let eta = if it == 0 { 1.0 } else { theta / (1.0 - theta) };
                    if eta * dn <= NEWTON_KAPPA || dn <= 1e-3 * NEWTON_KAPPA {
                        ok = true;
                        break;
                    }
                    prev_norm = dn;
                }
                if !ok {
                    converged = false;
                    break 'stages;
                }
                for i in 0..n {
                    k[s][i] = (z[i] - base[i]) / gh;
                }
            }
            if !converged {
                self.stats.newton_failures += 1;
                self.stats.rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }

            // stiffly accurate: the last stage is the new solution
            ynew.copy_from_slice(&z);
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..5 {
                    e += (SD_A[4][s] - SD_BHAT[s]) * k[s][i];
                }
                err[i] = h * e;
            }
            // filter the estimate through the iteration matrix to damp stiff components
            sys.solve(&factor, &mut err)?;
            self.stats.linear_solves += 1;
            let e = error_norm(&err, y, &ynew, &c);
            if e <= 1.0 {
                y.copy_from_slice(&ynew);
                t = if last { t_end } else { t + h };
                self.stats.accepted += 1;
                let mut fac = (0.9 * e.max(1e-10).powf(-0.25)).clamp(0.2, 5.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                if !last {
                    h *= fac;
                }
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * e.powf(-0.25)).max(0.2);
                last_rejected = true;
            }
        }
        self.h = Some(h);
        Ok(())
    }
}
