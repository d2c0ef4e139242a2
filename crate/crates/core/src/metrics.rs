//! Error and convergence diagnostics.

use std::io::Write;

use crate::dg::SolutionTensor;
use crate::error::{Error, Result};

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            expected: yhat.len(),
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("rmse of an empty set".into()));
    }
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((s / y.len() as f64).sqrt())
}

pub fn max_abs_error(y: &[f64], yhat: &[f64]) -> Result<(usize, f64)> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::LengthMismatch {
            expected: yhat.len(),
            got: y.len(),
        });
    }
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best }))
}

/// Average coefficient magnitudes `|c_j|` for `j = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDecay {
    pub phi: Vec<f64>,
    pub energy: Vec<f64>,
}

/// Cell-averaged coefficient magnitudes. For the scalar flux each cell's
/// coefficient is the weight-normalized angular average.
pub fn coefficient_decay(u: &SolutionTensor, weights: &[f64]) -> Result<CoefficientDecay> {
    if weights.len() != u.n_angles {
        return Err(Error::LengthMismatch {
            expected: u.n_angles,
            got: weights.len(),
        });
    }
    let wsum: f64 = weights.iter().sum();
    let m1 = u.max_order + 1;
    let kf = u.n_cells as f64;
    let mut phi = vec![0.0; m1];
    let mut energy = vec![0.0; m1];
    for j in 0..m1 {
        for k in 0..u.n_cells {
            let a: f64 = (0..u.n_angles).map(|n| weights[n] * u.get(n, k, j)).sum::<f64>() / wsum;
            phi[j] += a.abs();
            energy[j] += u.get(u.n_angles, k, j).abs();
        }
        phi[j] /= kf;
        energy[j] /= kf;
    }
    Ok(CoefficientDecay { phi, energy })
}

/// Least-squares fit of `error = C exp(-c1 M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub c: f64,
    pub c1: f64,
    /// Points that entered the fit.
    pub used: usize,
    /// Nonpositive errors that were dropped.
    pub skipped: usize,
}

pub fn fit_geometric(ms: &[f64], errors: &[f64]) -> Result<GeometricFit> {
    if ms.len() != errors.len() {
        return Err(Error::LengthMismatch {
            expected: ms.len(),
            got: errors.len(),
        });
    }
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(m, e)| (*m, e.ln()))
        .collect();
    let skipped = ms.len() - pts.len();
    if skipped > 0 {
        eprintln!("warning: fit_geometric skipped {skipped} nonpositive error value(s)");
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "geometric fit needs two positive errors, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("geometric fit needs distinct M values".into()));
    }
    let slope = sxy / sxx;
    Ok(GeometricFit {
        c: (my - slope * mx).exp(),
        c1: -slope,
        used: pts.len(),
        skipped,
    })
}

/// Fits the tail `|c_j|`, `j >= first`, of a coefficient series.
pub fn fit_coefficient_tail(coeffs: &[f64], first: usize) -> Result<GeometricFit> {
    let ms: Vec<f64> = (first..coeffs.len()).map(|j| j as f64).collect();
    fit_geometric(&ms, &coeffs[first.min(coeffs.len())..])
}

/// Default first mode in tail fits; the mean and slope modes are left out.
pub const DEFAULT_FIT_START: usize = 2;

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub decay: Option<CoefficientDecay>,
    pub rmse: Option<f64>,
    /// Set when the run for this `M` failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceRecord {
    pub rows: Vec<ConvergenceRow>,
    /// Fit of the last coefficient `|c_M|` against `M`.
    pub fit: Option<GeometricFit>,
    /// Fit of RMSE against `M` when references were available.
    pub rmse_fit: Option<GeometricFit>,
}

impl ConvergenceRecord {
    /// `|c_M|` of the scalar flux for each successful row.
    pub fn last_coefficients(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.decay.as_ref().map(|d| (r.m, *d.phi.last().unwrap())))
            .collect()
    }

    /// Fills the fits from the rows; needs at least three successful rows.
    pub fn fit(&mut self) {
        let last = self.last_coefficients();
        self.fit = if last.len() >= 3 {
            let (ms, cs): (Vec<f64>, Vec<f64>) = last.iter().map(|(m, c)| (*m as f64, *c)).unzip();
            fit_geometric(&ms, &cs).ok()
        } else {
            None
        };
        let errs: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.rmse.map(|e| (r.m as f64, e)))
            .collect();
        self.rmse_fit = if errs.len() >= 3 {
            let (ms, es): (Vec<f64>, Vec<f64>) = errs.into_iter().unzip();
            fit_geometric(&ms, &es).ok()
        } else {
            None
        };
    }

    /// CSV with columns `M, c_0..c_{Mmax}` (scalar flux), `e_0..` (energy),
    /// `rmse, status`, followed by `# fit` comment lines.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let width = self.rows.iter().map(|r| r.m + 1).max().unwrap_or(0);
        let mut header = vec!["M".to_string()];
        header.extend((0..width).map(|j| format!("c_{j}")));
        header.extend((0..width).map(|j| format!("e_{j}")));
        header.push("rmse".into());
        header.push("status".into());
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let mut cols = vec![r.m.to_string()];
            for series in [r.decay.as_ref().map(|d| &d.phi), r.decay.as_ref().map(|d| &d.energy)] {
                for j in 0..width {
                    cols.push(series.and_then(|s| s.get(j)).map(|v| format!("{v:e}")).unwrap_or_default());
                }
            }
            cols.push(r.rmse.map(|v| format!("{v:e}")).unwrap_or_default());
            cols.push(match &r.failure {
                None => "ok".into(),
                Some(msg) => format!("failed: {}", msg.replace(',', ";")),
            });
            writeln!(out, "{}", cols.join(","))?;
        }
        if let Some(f) = &self.fit {
            writeln!(out, "# fit c_M: C={:e} c1={:e}", f.c, f.c1)?;
        }
        if let Some(f) = &self.rmse_fit {
            writeln!(out, "# fit rmse: C={:e} c1={:e}", f.c, f.c1)?;
        }
        Ok(())
    }
}
