use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radtrans::error::Result;
use radtrans::presets::{catalog, preset};
use radtrans::problem::SourceKind;
use radtrans::run::{
    output_dir, parse_m_range, parse_override, preset_configs, reference_tables, run_configs, sweep, Manifest,
};
use radtrans::tables::{compare, published_caveat, published_tolerance, BenchmarkTable, Provenance, TableField};

/// Solver and benchmark driver. Output files go to `$RTBENCH_OUT`
/// (default `./rtbench-out`).
#[derive(Parser)]
#[command(name = "rtbench", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a preset at each of its table times.
    Solve {
        #[arg(long, required_unless_present_any = ["manifest", "list"])]
        preset: Option<String>,
        /// Config override `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Re-run the configurations echoed in a manifest.
        #[arg(long, conflicts_with_all = ["preset", "set"])]
        manifest: Option<PathBuf>,
        /// Compare against the published tables; exit 1 on failure.
        #[arg(long)]
        check: bool,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
    },
    /// Write the S2 reference tables for a thin problem.
    Benchmark {
        #[arg(long, value_enum)]
        source: Source,
    },
    /// Per-time RMSE of one table against another.
    Compare {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 5e-4)]
        tol: f64,
    },
    /// Solve a preset for a range of polynomial orders.
    Sweep {
        #[arg(long)]
        preset: String,
        /// Inclusive range `a..b`.
        #[arg(long = "M-range", value_name = "A..B")]
        m_range: String,
        /// End time of each run.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Square,
    Gaussian,
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn overrides(set: &[String]) -> Result<Vec<(String, String)>> {
    set.iter().map(|s| parse_override(s)).collect()
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Solve { list: true, .. } => {
            let mut out = std::io::stdout().lock();
            for p in catalog() {
                if writeln!(out, "{}", p.name).is_err() {
                    break;
                }
            }
            Ok(true)
        }
        Cmd::Solve {
            preset: name,
            set,
            manifest,
            check,
            ..
        } => {
            let result = match manifest {
                Some(path) => Manifest::read(path)?.replay()?,
                None => {
                    let p = preset(name.as_deref().unwrap_or_default())?;
                    let o = overrides(&set)?;
                    let cfgs = preset_configs(&p, &o)?;
                    run_configs(&p, &o, &cfgs)?
                }
            };
            let dir = output_dir();
            let m = result.write_outputs(&dir)?;
            for r in &m.runs {
                println!(
                    "t = {}: {} steps ({} rejected), {:?}, {:.2} s",
                    r.t, r.stats.accepted, r.stats.rejected, r.integrator, r.wall_seconds
                );
            }
            println!("wrote {} files to {}", m.files.len() + 1, dir.display());
            if !check {
                return Ok(true);
            }
            let tol = published_tolerance(result.preset.model);
            let mut pass = true;
            for field in [TableField::Phi, TableField::E] {
                if let Some(why) = published_caveat(result.preset.problem, field, result.preset.model) {
                    println!("{field}: not compared ({why})");
                    continue;
                }
                let reference = result.preset.published(field)?.select_times(&result.times())?;
                let report = compare(&result.table(field)?, &reference, tol)?;
                println!("{field}:\n{report}");
                pass &= report.pass;
            }
            Ok(pass)
        }
        Cmd::Benchmark { source } => {
            let (kind, name) = match source {
                Source::Square => (SourceKind::Square, "square"),
                Source::Gaussian => (SourceKind::Gaussian, "gaussian"),
            };
            let (phi, e) = reference_tables(kind)?;
            let dir = output_dir();
            fs::create_dir_all(&dir)?;
            for (table, field) in [(&phi, "phi"), (&e, "e")] {
                let path = dir.join(format!("s2-{name}_{field}.csv"));
                table.write_csv(BufWriter::new(fs::File::create(&path)?))?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Cmd::Compare { result, reference, tol } => {
            let a = BenchmarkTable::read(&result, Provenance::GeneratedSolver)?;
            let b = BenchmarkTable::read(&reference, Provenance::Published)?;
            let report = compare(&a, &b, tol)?;
            println!("{report}");
            Ok(report.pass)
        }
        Cmd::Sweep {
            preset: name,
            m_range,
            time,
            set,
        } => {
            let p = preset(&name)?;
            let ms = parse_m_range(&m_range)?;
            let record = sweep(&p, &overrides(&set)?, &ms, time)?;
            let dir = output_dir();
            fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}_sweep_t{time}.csv", p.name));
            record.write_csv(BufWriter::new(fs::File::create(&path)?))?;
            record.write_csv(std::io::stdout().lock())?;
            let failed = record.rows.iter().filter(|r| r.failure.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} runs failed", record.rows.len());
            }
            Ok(true)
        }
    }
}
