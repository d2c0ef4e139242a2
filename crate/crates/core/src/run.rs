//! Run orchestration behind the `rtbench` subcommands: preset solves with
//! their output files and manifest, reference tables, comparisons and
//! convergence sweeps.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{benchmark_grid, BenchmarkSource};
use crate::dg::{integrate, Solution};
use crate::error::{Error, Result};
use crate::metrics::{coefficient_decay, rmse, ConvergenceRecord, ConvergenceRow};
use crate::ode::Stats;
use crate::presets::{preset, ProblemPreset};
use crate::problem::{IntegratorKind, ProblemConfig, SourceKind};
use crate::tables::{published_caveat, BenchmarkTable, Provenance, TableField, THIN_TS, THIN_XS};

/// Points per cell in the per-time solution CSVs.
pub const PLOT_POINTS_PER_CELL: usize = 8;

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[derive(Debug)]
pub struct TimeRun {
    pub t: f64,
    pub solution: Solution,
}

/// One solve per evaluation time of a preset.
#[derive(Debug)]
pub struct PresetRun {
    pub preset: ProblemPreset,
    pub overrides: Vec<(String, String)>,
    pub runs: Vec<TimeRun>,
}

/// The configurations a preset solve will run, one per evaluation time.
/// The domain width follows the run's end time unless `x_f` is overridden.
pub fn preset_configs(p: &ProblemPreset, overrides: &[(String, String)]) -> Result<Vec<ProblemConfig>> {
    let mut base = p.cfg.clone();
    for (k, v) in overrides {
        base.set(k, v)?;
    }
    base.validate()?;
    let keep_x_f = overrides.iter().any(|(k, _)| k == "x_f");
    let cfgs: Vec<ProblemConfig> = base
        .eval_times
        .iter()
        .map(|&t| p.config_for_time(&base, t, keep_x_f))
        .collect();
    for c in &cfgs {
        c.validate()?;
    }
    Ok(cfgs)
}

pub fn run_configs(p: &ProblemPreset, overrides: &[(String, String)], cfgs: &[ProblemConfig]) -> Result<PresetRun> {
    let runs = cfgs
        .par_iter()
        .map(|c| {
            let solution = integrate(c)?;
            Ok(TimeRun {
                t: c.t_final(),
                solution,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PresetRun {
        preset: p.clone(),
        overrides: overrides.to_vec(),
        runs,
    })
}

pub fn run_preset(name: &str, overrides: &[(String, String)]) -> Result<PresetRun> {
    let p = preset(name)?;
    let cfgs = preset_configs(&p, overrides)?;
    run_configs(&p, overrides, &cfgs)
}

impl PresetRun {
    pub fn times(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.t).collect()
    }

    /// Solution sampled on the preset's table grid.
    pub fn table(&self, field: TableField) -> Result<BenchmarkTable> {
        let xs = self.preset.table_xs(field);
        let mut table = BenchmarkTable::new(xs.clone(), self.times(), Provenance::GeneratedSolver);
        for (j, run) in self.runs.iter().enumerate() {
            let snap = run.solution.snapshots.len() - 1;
            for (i, &x) in xs.iter().enumerate() {
                let f = run.solution.sample(snap, x)?;
                table.values[i][j] = Some(match field {
                    TableField::Phi => f.phi,
                    TableField::E => f.e,
                });
            }
        }
        Ok(table)
    }

    /// Writes per-time solution CSVs and coefficient dumps, the two tables
    /// and `manifest.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir)?;
        let name = &self.preset.name;
        let mut files = Vec::new();
        let mut runs = Vec::new();
        for run in &self.runs {
            let sol = &run.solution;
            let i = sol.snapshots.len() - 1;
            let csv = format!("{name}_t{}.csv", run.t);
            let coef = format!("{name}_t{}.coef", run.t);
            let xs = sol.plot_points(i, PLOT_POINTS_PER_CELL);
            sol.write_csv(i, &xs, BufWriter::new(fs::File::create(dir.join(&csv))?))?;
            sol.snapshots[i]
                .tensor
                .write_dump(BufWriter::new(fs::File::create(dir.join(&coef))?))?;
            runs.push(ManifestRun {
                t: run.t,
                config: sol.cfg.clone(),
                integrator: sol.integrator,
                stats: sol.stats,
                wall_seconds: sol.wall_seconds,
                solution_csv: csv.clone(),
                coefficients: coef.clone(),
            });
            files.push(csv);
            files.push(coef);
        }
        for field in [TableField::Phi, TableField::E] {
            let file = format!("{name}_{field}.csv");
            self.table(field)?
                .write_csv(BufWriter::new(fs::File::create(dir.join(&file))?))?;
            files.push(file);
        }
        let manifest = Manifest {
            preset: name.clone(),
            overrides: self.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect(),
            runs,
            files,
        };
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub t: f64,
    pub config: ProblemConfig,
    pub integrator: IntegratorKind,
    pub stats: Stats,
    pub wall_seconds: f64,
    pub solution_csv: String,
    pub coefficients: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub preset: String,
    pub overrides: Vec<String>,
    pub runs: Vec<ManifestRun>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Re-runs the echoed configurations.
    pub fn replay(&self) -> Result<PresetRun> {
        let p = preset(&self.preset)?;
        let overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        let cfgs: Vec<ProblemConfig> = self.runs.iter().map(|r| r.config.clone()).collect();
        run_configs(&p, &overrides, &cfgs)
    }
}

/// Output directory: `$RTBENCH_OUT`, or `rtbench-out` in the working directory.
pub fn output_dir() -> PathBuf {
    std::env::var_os("RTBENCH_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("rtbench-out"))
}

/// S2 reference tables for the thin problems on the published grid, with
/// the largest estimated quadrature error per row.
pub fn reference_tables(kind: SourceKind) -> Result<(BenchmarkTable, BenchmarkTable)> {
    let src = match kind {
        SourceKind::Square => BenchmarkSource::square(0.5, 10.0),
        SourceKind::Gaussian => BenchmarkSource::gaussian(0.5, 10.0),
        SourceKind::None => return Err(Error::InvalidArgument("benchmark needs a square or gaussian source".into())),
    };
    let grid = benchmark_grid(&THIN_XS, &THIN_TS, &src)?;
    let mut out = Vec::new();
    for values in [&grid.phi, &grid.e] {
        let mut table = BenchmarkTable::new(THIN_XS.to_vec(), THIN_TS.to_vec(), Provenance::GeneratedS2);
        let mut errs = vec![0.0f64; THIN_XS.len()];
        for (i, row) in values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                table.values[i][j] = Some(v.value);
                errs[i] = errs[i].max(v.error);
            }
        }
        table.row_errors = Some(errs);
        out.push(table);
    }
    let e = out.pop().unwrap();
    Ok((out.pop().unwrap(), e))
}

/// One solve per `M` ending at `t`. Failed runs are recorded and the sweep
/// continues. When the preset's published table has a column at `t`, each
/// row carries the scalar-flux RMSE against it.
pub fn sweep(p: &ProblemPreset, overrides: &[(String, String)], ms: &[usize], t: f64) -> Result<ConvergenceRecord> {
    let mut base = p.cfg.clone();
    for (k, v) in overrides {
        base.set(k, v)?;
    }
    let keep_x_f = overrides.iter().any(|(k, _)| k == "x_f");
    let usable = published_caveat(p.problem, TableField::Phi, p.model).is_none();
    let reference = p.published(TableField::Phi).ok().filter(|_| usable).and_then(|table| {
        let j = table.ts.iter().position(|&s| (s - t).abs() <= 1e-12 * t)?;
        Some(table.column(j))
    });
    let rows = ms
        .par_iter()
        .map(|&m| {
            let mut cfg = p.config_for_time(&base, t, keep_x_f);
            cfg.max_order = m;
            match sweep_row(&cfg, reference.as_deref()) {
                Ok((decay, rmse)) => ConvergenceRow {
                    m,
                    decay: Some(decay),
                    rmse,
                    failure: None,
                },
                Err(e) => ConvergenceRow {
                    m,
                    decay: None,
                    rmse: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut record = ConvergenceRecord {
        rows,
        ..Default::default()
    };
    record.fit();
    Ok(record)
}

fn sweep_row(
    cfg: &ProblemConfig,
    reference: Option<&[(f64, f64)]>,
) -> Result<(crate::metrics::CoefficientDecay, Option<f64>)> {
    cfg.validate()?;
    let sol = integrate(cfg)?;
    let decay = coefficient_decay(&sol.snapshots[0].tensor, &sol.weights)?;
    let err = match reference {
        Some(col) => {
            let got = col
                .iter()
                .map(|&(x, _)| sol.sample(0, x).map(|f| f.phi))
                .collect::<Result<Vec<_>>>()?;
            let want: Vec<f64> = col.iter().map(|&(_, v)| v).collect();
            Some(rmse(&got, &want)?)
        }
        None => None,
    };
    Ok((decay, err))
}

/// Parses `a..b` (inclusive) or a single value.
pub fn parse_m_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("M range `{s}` is not of the form a..b"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let a: usize = a.parse().map_err(|_| bad())?;
    let b: usize = b.parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Vec<(String, String)> {
        [("N", "4"), ("K", "8"), ("M", "2"), ("eval_times", "0.1, 0.31623"), ("rtol", "1e-7"), ("atol", "1e-7")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("M = 2").unwrap(), ("M".into(), "2".into()));
        assert!(parse_override("M2").is_err());
        assert_eq!(parse_m_range("3..8").unwrap(), vec![3, 4, 5, 6, 7, 8]);
        assert_eq!(parse_m_range("4").unwrap(), vec![4]);
        assert!(parse_m_range("5..2").is_err());
    }

    #[test]
    fn bad_override_keys_are_rejected() {
        let p = preset("thin-gaussian-su").unwrap();
        let err = preset_configs(&p, &[("nope".into(), "1".into())]).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(_)));
    }

    #[test]
    fn outputs_and_manifest_replay() {
        let dir = tempfile::tempdir().unwrap();
        let run = run_preset("thin-gaussian-su", &quick()).unwrap();
        let manifest = run.write_outputs(dir.path()).unwrap();
        assert_eq!(manifest.runs.len(), 2);
        assert_eq!(manifest.runs[0].config.max_order, 2);
        assert_eq!(manifest.overrides[2], "M=2");
        for f in &manifest.files {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let read = Manifest::read(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(read.runs[1].config, manifest.runs[1].config);

        let again = tempfile::tempdir().unwrap();
        read.replay().unwrap().write_outputs(again.path()).unwrap();
        for f in &manifest.files {
            let a = fs::read(dir.path().join(f)).unwrap();
            let b = fs::read(again.path().join(f)).unwrap();
            assert!(a == b, "{f} differs on replay");
        }
    }

    #[test]
    fn single_value_sweep_has_no_fit() {
        let p = preset("thin-gaussian-su").unwrap();
        let rec = sweep(&p, &quick(), &[2], 1.0).unwrap();
        assert_eq!(rec.rows.len(), 1);
        assert!(rec.fit.is_none());
        assert!(rec.rows[0].rmse.is_some());
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let p = preset("thin-gaussian-su").unwrap();
        let mut o = quick();
        o.push(("max_steps".into(), "3".into()));
        let rec = sweep(&p, &o, &[1, 2, 3], 1.0).unwrap();
        assert_eq!(rec.rows.len(), 3);
        assert!(rec.rows.iter().all(|r| r.failure.is_some()));
    }
}
