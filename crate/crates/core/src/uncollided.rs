//! Uncollided scalar flux for square and Gaussian sources, both for the full
//! transport operator and for the S2 (two-angle Gauss-Legendre) model.
//!
//! All formulas are written for `l = 1`; other values of `l` are handled by
//! rescaling `x`, `t`, `x0` and `t0` by `1/l`.

use crate::adaptive::{integrate, Tolerance};
use crate::error::{Error, Result};
use crate::problem::{ProblemConfig, SourceKind};
use crate::quadrature::{basis_values, gauss_legendre, Cell};
use crate::special::{erf, erfc, exp_integral_e1};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Absolute tolerance of the one remaining numerical quadrature (transport, Gaussian).
pub const TRANSPORT_GAUSSIAN_ATOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Transport,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncollidedSpec {
    pub model: Model,
    pub source_kind: SourceKind,
    pub x0: f64,
    pub t0: f64,
    pub l: f64,
}

impl UncollidedSpec {
    pub fn from_problem(cfg: &ProblemConfig) -> Self {
        Self {
            model: if cfg.is_s2() { Model::S2 } else { Model::Transport },
            source_kind: cfg.source_kind,
            x0: cfg.x0,
            t0: cfg.t0,
            l: cfg.l,
        }
    }

    pub fn wave_speed(&self) -> f64 {
        match self.model {
            Model::Transport => 1.0,
            Model::S2 => 1.0 / SQRT3,
        }
    }

    /// Uncollided scalar flux at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if t <= 0.0 || self.source_kind == SourceKind::None {
            return Ok(0.0);
        }
        let s = 1.0 / self.l;
        let (x, t, x0, t0) = (x * s, t * s, self.x0 * s, self.t0 * s);
        match (self.model, self.source_kind) {
            (Model::Transport, SourceKind::Square) => Ok(transport_square(x, t, x0, t0)),
            (Model::Transport, SourceKind::Gaussian) => transport_gaussian(x, t, x0, t0),
            (Model::S2, SourceKind::Square) => Ok(s2_square(x, t, x0, t0)),
            (Model::S2, SourceKind::Gaussian) => Ok(s2_gaussian(x, t, x0, t0)),
            (_, SourceKind::None) => unreachable!(),
        }
    }
}

/// Scalar flux of a unit plane pulse released at `x = 0, t = 0` in full transport.
pub fn plane_pulse_scalar(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "plane pulse needs t > 0, got {t}"
        )));
    }
    Ok(if x.abs() < t { (-t).exp() / (2.0 * t) } else { 0.0 })
}

/// The S2 plane pulse is a pair of delta functions and has no pointwise value.
pub fn s2_plane_pulse_scalar(_x: f64, _t: f64) -> Result<f64> {
    Err(Error::InvalidArgument(
        "the S2 plane pulse is a pair of travelling delta functions; use s2_plane_pulse_rays".into(),
    ))
}

/// Positions and weights of the two S2 plane-pulse rays at time `t`.
pub fn s2_plane_pulse_rays(t: f64) -> Result<[(f64, f64); 2]> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "plane pulse needs t > 0, got {t}"
        )));
    }
    let w = 0.5 * (-t).exp();
    Ok([(-t / SQRT3, w), (t / SQRT3, w)])
}

/// `erf(b) - erf(a)` without cancellation when both arguments sit in the same tail.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 && b >= 0.0 {
        erfc(a) - erfc(b)
    } else if a <= 0.0 && b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Full transport, square source on `[-x0, x0]` switched on for `0 <= t <= t0`.
///
/// The convolution reduces to `int e^{-tau} len(tau) / (2 tau) dtau`, where
/// `len` is the overlap of `[x - tau, x + tau]` with the source. `len` is
/// piecewise linear, so each piece integrates to exponentials and `E1`.
pub fn transport_square(x: f64, t: f64, x0: f64, t0: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let lo = (t - t0).max(0.0);
    // pieces (start, alpha, beta) with len = alpha + beta * tau from start on
    let pieces: [(f64, f64, f64); 3] = if ax <= x0 {
        [
            (0.0, 0.0, 2.0),
            (x0 - ax, x0 - ax, 1.0),
            (x0 + ax, 2.0 * x0, 0.0),
        ]
    } else {
        [
            (0.0, 0.0, 0.0),
            (ax - x0, x0 - ax, 1.0),
            (ax + x0, 2.0 * x0, 0.0),
        ]
    };
    let mut total = 0.0;
    for (i, &(start, alpha, beta)) in pieces.iter().enumerate() {
        let end = pieces.get(i + 1).map_or(f64::INFINITY, |p| p.0);
        let a = start.max(lo);
        let b = end.min(t);
        if b <= a {
            continue;
        }
        if beta != 0.0 {
            total += 0.5 * beta * ((-a).exp() - (-b).exp());
        }
        if alpha != 0.0 {
            // a > 0 whenever alpha != 0
            total += 0.5 * alpha * (exp_integral_e1(a) - exp_integral_e1(b));
        }
    }
    total.max(0.0)
}

/// Full transport, Gaussian source `exp(-x^2/x0^2)` switched on for `0 <= t <= t0`.
pub fn transport_gaussian(x: f64, t: f64, x0: f64, t0: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let lo = (t - t0).max(0.0);
    let c = 0.5 * x0 * std::f64::consts::PI.sqrt();
    let f = |tau: f64| {
        if tau <= 0.0 {
            return 0.0;
        }
        (-tau).exp() / (2.0 * tau) * c * erf_diff((x - tau) / x0, (x + tau) / x0)
    };
    let est = integrate(f, lo, t, Tolerance::new(TRANSPORT_GAUSSIAN_ATOL, 1e-12))?;
    Ok(est.value.max(0.0))
}

/// S2, square source: each ray sees the source during one interval of
/// emission times, which integrates to a difference of exponentials.
pub fn s2_square(x: f64, t: f64, x0: f64, t0: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let ray = |y: f64| {
        let lo = (t - SQRT3 * (y + x0)).max(0.0);
        let hi = t.min(t0).min(t - SQRT3 * (y - x0));
        if hi > lo {
            0.5 * ((hi - t).exp() - (lo - t).exp())
        } else {
            0.0
        }
    };
    ray(x) + ray(-x)
}

/// S2, Gaussian source `exp(-x^2/x0^2)`.
pub fn s2_gaussian(x: f64, t: f64, x0: f64, t0: f64) -> f64 {
    s2_gaussian_closed_form(x, t, x0, t0)
}

/// Closed form of the S2 Gaussian uncollided flux with width parameter `sigma`.
///
/// For a source `exp(-x^2/x0^2)` the correct choice is `sigma = x0`; see the
/// calibration test below and `docs/uncollided_calibration.md`.
pub fn s2_gaussian_closed_form(x: f64, t: f64, sigma: f64, t0: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let u_lo = (t - t0).max(0.0);
    let shift = 0.5 * SQRT3 * sigma;
    let pref = 0.25 * (3.0 * std::f64::consts::PI).sqrt() * sigma;
    let ray = |y: f64| {
        let w_hi = (y - u_lo / SQRT3) / sigma - shift;
        let w_lo = (y - t / SQRT3) / sigma - shift;
        let d = erf_diff(w_lo, w_hi);
        if d == 0.0 {
            0.0
        } else {
            pref * (-SQRT3 * y + 0.75 * sigma * sigma).exp() * d
        }
    };
    (ray(x) + ray(-x)).max(0.0)
}

/// Moments `int B_j phi_u dx` of the uncollided flux on `cell`, `j = 0..=max_order`,
/// using a Gauss rule with `2M + 1` points.
pub fn project_uncollided_onto_basis(
    cell: &Cell,
    t: f64,
    spec: &UncollidedSpec,
    max_order: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; max_order + 1];
    project_into(cell, t, spec, max_order, &mut out)?;
    Ok(out)
}

pub(crate) fn project_into(
    cell: &Cell,
    t: f64,
    spec: &UncollidedSpec,
    max_order: usize,
    out: &mut [f64],
) -> Result<()> {
    out.fill(0.0);
    if t <= 0.0 || spec.source_kind == SourceKind::None {
        return Ok(());
    }
    // skip cells entirely outside the causal cone
    let reach = spec.x0 + spec.wave_speed() * t;
    if spec.source_kind == SourceKind::Square && (cell.x_l >= reach || cell.x_r <= -reach) {
        return Ok(());
    }
    let q = gauss_legendre(2 * max_order + 1)?;
    let half = 0.5 * cell.width();
    let mut b = vec![0.0; max_order + 1];
    for (&xi, &w) in q.nodes.iter().zip(&q.weights) {
        let phi = spec.eval(cell.from_reference(xi), t)?;
        if phi == 0.0 {
            continue;
        }
        basis_values(max_order, xi, cell, &mut b);
        for j in 0..=max_order {
            out[j] += w * half * b[j] * phi;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::integrate_with_breaks;
    use proptest::prelude::*;

    fn square(x: f64) -> f64 {
        if x.abs() <= 0.5 {
            1.0
        } else {
            0.0
        }
    }

    fn gaussian(x: f64, x0: f64) -> f64 {
        (-(x * x) / (x0 * x0)).exp()
    }

    /// S2 uncollided flux as the convolution of the two plane-pulse rays
    /// with the source, integrated numerically over emission time.
    fn s2_oracle(x: f64, t: f64, t0: f64, src: impl Fn(f64) -> f64 + Copy, breaks: &[f64]) -> f64 {
        let tol = Tolerance {
            abs: 1e-13,
            rel: 1e-13,
            max_intervals: 20_000,
        };
        let mut total = 0.0;
        for sign in [-1.0, 1.0] {
            let f = |tp: f64| {
                let u = t - tp;
                0.5 * (-u).exp() * src(x - sign * u / SQRT3)
            };
            // the source edges are crossed at t' = t - sqrt3 (x -+ edge)
            let bs: Vec<f64> = breaks
                .iter()
                .map(|&e| t - sign * SQRT3 * (x - e))
                .collect();
            total += integrate_with_breaks(f, 0.0, t.min(t0), &bs, tol).unwrap().value;
        }
        total
    }

    /// Transport uncollided flux as a two-dimensional convolution of the
    /// plane pulse with the source over emission time and position.
    fn transport_oracle(x: f64, t: f64, t0: f64, src: impl Fn(f64) -> f64 + Copy, edge: f64) -> f64 {
        let tol = Tolerance {
            abs: 1e-12,
            rel: 1e-12,
            max_intervals: 20_000,
        };
        let outer = |tp: f64| {
            let tau = t - tp;
            if tau <= 0.0 {
                return 0.0;
            }
            let inner = |s: f64| plane_pulse_scalar(x - s, tau).unwrap() * src(s);
            let a = (x - tau).max(-edge);
            let b = (x + tau).min(edge);
            if b <= a {
                return 0.0;
            }
            integrate(inner, a, b, tol).unwrap().value
        };
        let mut breaks = vec![];
        for tau in [x.abs() - edge, edge - x.abs(), x.abs() + edge] {
            breaks.push(t - tau);
        }
        integrate_with_breaks(outer, 0.0, t.min(t0), &breaks, tol).unwrap().value
    }

    fn probe_grid() -> Vec<(f64, f64)> {
        let xs: Vec<f64> = (0..20).map(|i| -2.3 + 0.25 * i as f64).collect();
        let ts = [0.1, 0.5, 1.0, 3.16228, 12.0];
        xs.iter().flat_map(|&x| ts.iter().map(move |&t| (x, t))).collect()
    }

    #[test]
    fn plane_pulse_examples() {
        assert_eq!(plane_pulse_scalar(2.0, 1.0).unwrap(), 0.0);
        let inside = (-1f64).exp() / 2.0;
        assert!((plane_pulse_scalar(0.0, 1.0).unwrap() - inside).abs() < 1e-16);
        assert!((plane_pulse_scalar(0.5, 1.0).unwrap() - inside).abs() < 1e-16);
        assert!(plane_pulse_scalar(0.0, 0.0).is_err());
    }

    #[test]
    fn plane_pulse_matches_mollified_delta_source() {
        // angular integral of e^{-t} delta(x - mu t) / 2 over mu in [-1, 1],
        // with the delta replaced by a narrow normalized Gaussian
        let (x, t) = (0.3, 1.0);
        let eps = 1e-3;
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let mu = -1.0 + (i as f64 + 0.5) * h;
            let d = x - mu * t;
            let delta = (-(d * d) / (2.0 * eps * eps)).exp() / (eps * (2.0 * std::f64::consts::PI).sqrt());
            sum += 0.5 * (-t).exp() * delta * h;
        }
        assert!((sum - plane_pulse_scalar(x, t).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn s2_pulse_rejects_pointwise_and_exposes_rays() {
        assert!(s2_plane_pulse_scalar(0.0, 1.0).is_err());
        let rays = s2_plane_pulse_rays(1.5).unwrap();
        assert_eq!(rays[0].0, -rays[1].0);
        assert_eq!(rays[0].1, rays[1].1);
        assert!((rays[1].0 - 1.5 / SQRT3).abs() < 1e-16);
        // convolving with Q = 1 per unit length leaves e^{-t}/2 per ray
        assert!((rays[0].1 - 0.5 * (-1.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn s2_square_interior_early_time() {
        for &(x, t) in &[(0.0, 0.5), (0.1, 0.3), (-0.2, 0.4)] {
            assert!(t + SQRT3 * f64::abs(x) <= SQRT3 * 0.5);
            let v = s2_square(x, t, 0.5, 10.0);
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn s2_square_matches_oracle_on_grid() {
        for t0 in [10.0, 0.7] {
            for (x, t) in probe_grid() {
                let closed = s2_square(x, t, 0.5, t0);
                let oracle = s2_oracle(x, t, t0, square, &[-0.5, 0.5]);
                assert!(closed >= 0.0);
                assert!((closed - oracle).abs() < 1e-8, "x={x} t={t} t0={t0}: {closed} vs {oracle}");
            }
        }
        let p = s2_square(0.3, 2.0, 0.5, 10.0);
        assert!((p - s2_oracle(0.3, 2.0, 10.0, square, &[-0.5, 0.5])).abs() < 1e-8);
    }

    #[test]
    fn s2_gaussian_matches_oracle_on_grid() {
        for t0 in [10.0, 0.7] {
            for (x, t) in probe_grid() {
                let closed = s2_gaussian(x, t, 0.5, t0);
                let oracle = s2_oracle(x, t, t0, |s| gaussian(s, 0.5), &[]);
                assert!(closed >= 0.0);
                assert!((closed - oracle).abs() < 1e-8, "x={x} t={t} t0={t0}: {closed} vs {oracle}");
            }
        }
    }

    #[test]
    fn s2_gaussian_width_calibration() {
        // Least-squares fit of the closed form's width parameter against the
        // oracle; the minimizer must be x0 itself.
        let x0 = 0.5;
        let data: Vec<(f64, f64, f64)> = probe_grid()
            .into_iter()
            .map(|(x, t)| (x, t, s2_oracle(x, t, 10.0, |s| gaussian(s, x0), &[])))
            .collect();
        let resid = |sigma: f64| -> f64 {
            data.iter()
                .map(|&(x, t, o)| (s2_gaussian_closed_form(x, t, sigma, 10.0) - o).powi(2))
                .sum()
        };
        // golden-section search on [x0/2, 2 x0]
        let (mut a, mut b) = (0.5 * x0, 2.0 * x0);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if resid(c) < resid(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let fitted = 0.5 * (a + b);
        assert!((fitted - x0).abs() < 1e-6, "fitted sigma {fitted}");
        assert!(resid(x0) < 1e-16 * data.len() as f64);
        assert!(resid(x0 / 2f64.sqrt()) > 1e-4);
    }

    #[test]
    fn transport_square_matches_oracle() {
        for t0 in [10.0, 0.7] {
            for &(x, t) in &[(0.0, 0.1), (0.3, 1.0), (0.7, 1.0), (-1.2, 2.0), (2.0, 1.0), (0.49, 3.0), (5.0, 12.0)] {
                let closed = transport_square(x, t, 0.5, t0);
                let oracle = transport_oracle(x, t, t0, square, 0.5);
                assert!((closed - oracle).abs() < 1e-8, "x={x} t={t}: {closed} vs {oracle}");
            }
        }
    }

    #[test]
    fn transport_square_small_time_is_t() {
        for t in [1e-3, 1e-2] {
            let v = transport_square(0.0, t, 0.5, 10.0);
            // exact: 1 - e^{-t} while the whole cone lies inside the source
            assert!((v - (1.0 - (-t as f64).exp())).abs() < 1e-15);
            assert!((v - t).abs() < t * t);
        }
    }

    #[test]
    fn transport_gaussian_matches_oracle() {
        let x0 = 0.5;
        for &(x, t) in &[(0.0, 0.5), (0.4, 1.0), (-1.5, 2.0), (3.0, 3.0)] {
            let v = transport_gaussian(x, t, x0, 10.0).unwrap();
            let oracle = transport_oracle(x, t, 10.0, |s| gaussian(s, x0), 40.0);
            assert!((v - oracle).abs() < 1e-8, "x={x} t={t}: {v} vs {oracle}");
            assert!((v - transport_gaussian(-x, t, x0, 10.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn thick_scaling_by_l() {
        let spec = UncollidedSpec {
            model: Model::Transport,
            source_kind: SourceKind::Square,
            x0: 0.5,
            t0: 10.0,
            l: 0.5,
        };
        let v = spec.eval(0.2, 0.3).unwrap();
        assert!((v - transport_square(0.4, 0.6, 1.0, 20.0)).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let spec = UncollidedSpec {
            model: Model::S2,
            source_kind: SourceKind::Square,
            x0: 0.5,
            t0: 10.0,
            l: 1.0,
        };
        let far = Cell::new(5.0, 6.0).unwrap();
        assert!(project_uncollided_onto_basis(&far, 1.0, &spec, 3).unwrap().iter().all(|&v| v == 0.0));
        // inside the early-time plateau phi_u is constant
        let cell = Cell::new(-0.1, 0.05).unwrap();
        let t = 0.2;
        let m = project_uncollided_onto_basis(&cell, t, &spec, 0).unwrap();
        let c = 1.0 - (-t as f64).exp();
        assert!((m[0] - c * cell.width().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projection_matches_oversampled_quadrature() {
        let spec = UncollidedSpec {
            model: Model::S2,
            source_kind: SourceKind::Gaussian,
            x0: 0.5,
            t0: 10.0,
            l: 1.0,
        };
        let cell = Cell::new(0.13, 0.61).unwrap();
        let m_order = 4;
        let moments = project_uncollided_onto_basis(&cell, 1.3, &spec, m_order).unwrap();
        let fine = gauss_legendre(10 * (2 * m_order + 1)).unwrap();
        let mut b = vec![0.0; m_order + 1];
        let mut reference = vec![0.0; m_order + 1];
        for (&xi, &w) in fine.nodes.iter().zip(&fine.weights) {
            basis_values(m_order, xi, &cell, &mut b);
            let phi = spec.eval(cell.from_reference(xi), 1.3).unwrap();
            for j in 0..=m_order {
                reference[j] += w * 0.5 * cell.width() * b[j] * phi;
            }
        }
        for j in 0..=m_order {
            assert!((moments[j] - reference[j]).abs() < 1e-8, "j={j}");
        }
    }

    #[test]
    fn emission_bound_holds() {
        // int phi_u dx never exceeds the total emitted amount
        for model in [Model::Transport, Model::S2] {
            for t in [0.5, 2.0, 8.0] {
                let spec = UncollidedSpec {
                    model,
                    source_kind: SourceKind::Square,
                    x0: 0.5,
                    t0: 10.0,
                    l: 1.0,
                };
                let reach = 0.5 + t;
                let total = integrate_with_breaks(
                    |x| spec.eval(x, t).unwrap(),
                    -reach,
                    reach,
                    &[-0.5, 0.5, -0.5 - t / SQRT3, 0.5 + t / SQRT3, -0.5 + t / SQRT3, 0.5 - t / SQRT3],
                    Tolerance::new(1e-10, 1e-10),
                )
                .unwrap()
                .value;
                assert!(total <= 1.0 * t + 1e-9, "{model:?} t={t}: {total}");
            }
        }
    }

    proptest! {
        #[test]
        fn nonnegative_even_and_causal(x in -20.0f64..20.0, t in 0.01f64..30.0, t0 in 0.1f64..15.0) {
            for kind in [SourceKind::Square, SourceKind::Gaussian] {
                for model in [Model::Transport, Model::S2] {
                    if model == Model::Transport && kind == SourceKind::Gaussian {
                        continue;
                    }
                    let spec = UncollidedSpec { model, source_kind: kind, x0: 0.5, t0, l: 1.0 };
                    let a = spec.eval(x, t).unwrap();
                    let b = spec.eval(-x, t).unwrap();
                    prop_assert!(a >= 0.0);
                    prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300) + 1e-300);
                    if kind == SourceKind::Square && x.abs() > 0.5 + spec.wave_speed() * t {
                        prop_assert_eq!(a, 0.0);
                    }
                }
            }
        }

        #[test]
        fn s2_gaussian_decays_after_source_off(x in -3.0f64..3.0) {
            let late = s2_gaussian(x, 60.0, 0.5, 1.0);
            prop_assert!(late < 1e-20);
        }
    }
}
