//! Solution tables on an `(x, t)` grid: the published reference tables that
//! ship with the crate, generated benchmark tables, and solver output, plus
//! RMSE comparison between them.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::rmse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Published,
    GeneratedS2,
    GeneratedSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableField {
    Phi,
    E,
}

impl fmt::Display for TableField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableField::Phi => "phi",
            TableField::E => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableModel {
    Transport,
    S2,
}

impl fmt::Display for TableModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableModel::Transport => "transport",
            TableModel::S2 => "s2",
        })
    }
}

/// `values[i][j]` is the value at `(xs[i], ts[j])`; `None` marks an entry the
/// table leaves blank.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Largest estimated error in each row, when known.
    pub row_errors: Option<Vec<f64>>,
    pub provenance: Provenance,
}

const ERROR_COLUMN: &str = "max_error";

impl BenchmarkTable {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>, provenance: Provenance) -> Self {
        let values = vec![vec![None; ts.len()]; xs.len()];
        Self {
            xs,
            ts,
            values,
            row_errors: None,
            provenance,
        }
    }

    pub fn get(&self, x: f64, t: f64) -> Option<f64> {
        let i = self.xs.iter().position(|&v| v == x)?;
        let j = self.ts.iter().position(|&v| v == t)?;
        self.values[i][j]
    }

    /// The table restricted to the columns at `ts`, which must all be present.
    pub fn select_times(&self, ts: &[f64]) -> Result<Self> {
        let cols = ts
            .iter()
            .map(|&t| {
                self.ts
                    .iter()
                    .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
                    .ok_or_else(|| Error::GridMismatch(format!("no column at t = {t} in {:?}", self.ts)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            xs: self.xs.clone(),
            ts: cols.iter().map(|&j| self.ts[j]).collect(),
            values: self.values.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect(),
            row_errors: self.row_errors.clone(),
            provenance: self.provenance,
        })
    }

    /// Column at time index `j` as `(x, value)` pairs, blanks skipped.
    pub fn column(&self, j: usize) -> Vec<(f64, f64)> {
        self.xs
            .iter()
            .zip(&self.values)
            .filter_map(|(&x, row)| row[j].map(|v| (x, v)))
            .collect()
    }

    /// Parses the CSV layout `x,t1,t2,...[,max_error]`; blank cells are
    /// missing entries and `#` lines are comments.
    pub fn parse_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines.next().ok_or(Error::ConfigParse {
            line: 1,
            msg: "empty table".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"x") {
            return Err(Error::ConfigParse {
                line: 1,
                msg: format!("first column must be `x`, got `{header}`"),
            });
        }
        let has_err = cols.last() == Some(&ERROR_COLUMN);
        let t_cols = &cols[1..cols.len() - usize::from(has_err)];
        let num = |line: usize, s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::ConfigParse {
                line: line + 1,
                msg: format!("not a number: `{s}`"),
            })
        };
        let ts = t_cols.iter().map(|s| num(0, s)).collect::<Result<Vec<_>>>()?;
        let mut table = BenchmarkTable::new(Vec::new(), ts, provenance);
        let mut errors = Vec::new();
        for (ln, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != cols.len() {
                return Err(Error::ConfigParse {
                    line: ln + 1,
                    msg: format!("expected {} columns, got {}", cols.len(), cells.len()),
                });
            }
            table.xs.push(num(ln, cells[0])?);
            let row = cells[1..1 + table.ts.len()]
                .iter()
                .map(|c| if c.is_empty() { Ok(None) } else { num(ln, c).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            table.values.push(row);
            if has_err {
                errors.push(num(ln, cells[cols.len() - 1])?);
            }
        }
        if has_err {
            table.row_errors = Some(errors);
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>, provenance: Provenance) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?, provenance)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut header: Vec<String> = vec!["x".into()];
        header.extend(self.ts.iter().map(|t| t.to_string()));
        if self.row_errors.is_some() {
            header.push(ERROR_COLUMN.into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, x) in self.xs.iter().enumerate() {
            let mut cells = vec![x.to_string()];
            cells.extend(self.values[i].iter().map(|v| v.map(|v| format!("{v:.17e}")).unwrap_or_default()));
            if let Some(errs) = &self.row_errors {
                cells.push(format!("{:e}", errs[i]));
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table CSV is ASCII")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeComparison {
    pub t: f64,
    pub points: usize,
    pub rmse: f64,
    pub max_abs: f64,
    pub max_at_x: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub times: Vec<TimeComparison>,
    pub pass: bool,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "t,points,rmse,max_abs,max_at_x,pass")?;
        for c in &self.times {
            writeln!(
                f,
                "{},{},{:e},{:e},{},{}",
                c.t, c.points, c.rmse, c.max_abs, c.max_at_x, c.pass
            )?;
        }
        write!(
            f,
            "# tolerance {:e}: {}",
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Describes how two grids differ, or `None` when they match to a relative 1e-9.
pub fn grid_diff(a: &BenchmarkTable, b: &BenchmarkTable) -> Option<String> {
    let close = |u: &[f64], v: &[f64]| {
        u.len() == v.len() && u.iter().zip(v).all(|(p, q)| (p - q).abs() <= 1e-9 * p.abs().max(1.0))
    };
    let mut msg = Vec::new();
    if !close(&a.xs, &b.xs) {
        msg.push(format!("x grids differ:\n  result:    {:?}\n  reference: {:?}", a.xs, b.xs));
    }
    if !close(&a.ts, &b.ts) {
        msg.push(format!("t grids differ:\n  result:    {:?}\n  reference: {:?}", a.ts, b.ts));
    }
    (!msg.is_empty()).then(|| msg.join("\n"))
}

/// Per-time RMSE and max-abs error over entries present in both tables. A
/// time passes when its RMSE is within `tolerance`.
pub fn compare(result: &BenchmarkTable, reference: &BenchmarkTable, tolerance: f64) -> Result<ComparisonReport> {
    if let Some(d) = grid_diff(result, reference) {
        return Err(Error::GridMismatch(d));
    }
    let mut times = Vec::new();
    for (j, &t) in reference.ts.iter().enumerate() {
        let mut y = Vec::new();
        let mut yhat = Vec::new();
        let mut xs = Vec::new();
        for i in 0..reference.xs.len() {
            if let (Some(a), Some(b)) = (result.values[i][j], reference.values[i][j]) {
                y.push(a);
                yhat.push(b);
                xs.push(reference.xs[i]);
            }
        }
        if y.is_empty() {
            continue;
        }
        let r = rmse(&y, &yhat)?;
        let (at, max_abs) = crate::metrics::max_abs_error(&y, &yhat)?;
        times.push(TimeComparison {
            t,
            points: y.len(),
            rmse: r,
            max_abs,
            max_at_x: xs[at],
            pass: r <= tolerance,
        });
    }
    let pass = times.iter().all(|c| c.pass);
    Ok(ComparisonReport {
        tolerance,
        times,
        pass,
    })
}

macro_rules! published_files {
    ($($name:literal),+ $(,)?) => {
        /// Published tables as `(file name, contents)`.
        pub const PUBLISHED: &[(&str, &str)] = &[
            $(
                (concat!($name, "_phi_transport.csv"), include_str!(concat!("../data/published/", $name, "_phi_transport.csv"))),
                (concat!($name, "_phi_s2.csv"), include_str!(concat!("../data/published/", $name, "_phi_s2.csv"))),
                (concat!($name, "_e_transport.csv"), include_str!(concat!("../data/published/", $name, "_e_transport.csv"))),
                (concat!($name, "_e_s2.csv"), include_str!(concat!("../data/published/", $name, "_e_s2.csv"))),
            )+
        ];
    };
}

published_files!(
    "thin-square-su",
    "thin-square-cv",
    "thin-gaussian-su",
    "thin-gaussian-cv",
    "thick-square-su",
    "thick-gaussian-su",
    "thick-gaussian-cv",
);

pub const PUBLISHED_CHECKSUMS: &str = include_str!("../data/published/SHA256SUMS");

/// Published table for a problem (e.g. `thin-square-su`).
pub fn published(problem: &str, field: TableField, model: TableModel) -> Result<BenchmarkTable> {
    let file = format!("{problem}_{field}_{model}.csv");
    let (_, text) = PUBLISHED
        .iter()
        .find(|(name, _)| *name == file)
        .ok_or_else(|| Error::UnknownPreset(problem.to_string()))?;
    BenchmarkTable::parse_csv(text, Provenance::Published)
}

/// Why a published table should not be compared against, if it should not.
pub fn published_caveat(problem: &str, field: TableField, model: TableModel) -> Option<&'static str> {
    match (problem, field, model) {
        ("thin-gaussian-su", TableField::Phi, TableModel::S2) => {
            Some("the printed S2 scalar-flux block repeats the material-energy block")
        }
        _ => None,
    }
}

/// Comparison tolerance for published entries: the transport tables agree
/// with the older literature to about three digits, the S2 tables to six.
pub fn published_tolerance(model: TableModel) -> f64 {
    match model {
        TableModel::Transport => 5e-4,
        TableModel::S2 => 5e-6,
    }
}

/// The thin-problem table grid.
pub const THIN_XS: [f64; 15] = [
    0.01, 0.1, 0.17783, 0.31623, 0.45, 0.5, 0.56234, 0.75, 1.0, 1.33352, 1.77828, 3.16228, 5.62341,
    10.0, 17.78279,
];
pub const THIN_TS: [f64; 7] = [0.1, 0.31623, 1.0, 3.16228, 10.0, 31.6228, 100.0];
pub const THICK_TS: [f64; 3] = [0.3, 3.0, 30.0];
