//! Catalog of the standard problems at desk resolution.
//!
//! Thin problems use `sigma_a = 1`, `l = 1`, `x0 = 0.5`, `t0 = 10` and the
//! uncollided source. Thick problems use `sigma_a = 800`, `l = 1/800`, the
//! standard source and a static mesh clustered at the source edges. The thick
//! source stays on for `t0 = 10 l`, so it deposits `10 int S dx` in total, the
//! same as the thin problems.

use crate::error::{Error, Result};
use crate::problem::{AngularRule, EquationOfState, MeshLaw, ProblemConfig, SourceKind, Treatment};
use crate::tables::{published, BenchmarkTable, TableField, TableModel, THICK_TS, THIN_TS, THIN_XS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Thin,
    Thick,
}

#[derive(Debug, Clone)]
pub struct ProblemPreset {
    pub name: String,
    /// Key of the published tables, e.g. `thin-square-su`.
    pub problem: &'static str,
    pub model: TableModel,
    pub regime: Regime,
    /// Base configuration; `eval_times` holds the table times.
    pub cfg: ProblemConfig,
}

const CV0: f64 = 0.03;
const THICK_L: f64 = 1.0 / 800.0;

fn base(problem: &'static str, model: TableModel) -> Result<ProblemPreset> {
    let mut parts = problem.split('-');
    let regime = match parts.next() {
        Some("thin") => Regime::Thin,
        _ => Regime::Thick,
    };
    let source = match parts.next() {
        Some("square") => SourceKind::Square,
        _ => SourceKind::Gaussian,
    };
    let nonlinear = parts.next() == Some("cv");
    let mut cfg = ProblemConfig {
        source_kind: source,
        x0: 0.5,
        t0: 10.0,
        n_cells: 32,
        max_order: 4,
        ..Default::default()
    };
    if nonlinear {
        cfg.eos = EquationOfState::constant_cv(CV0, &cfg.constants)?;
    }
    match regime {
        Regime::Thin => {
            cfg.treatment = Treatment::Uncollided;
            cfg.eval_times = THIN_TS.to_vec();
            cfg.rtol = 1e-10;
            cfg.atol = 1e-10;
            if source == SourceKind::Square {
                cfg.mesh_law = MeshLaw::ThinSquare;
                cfg.n_cells = 64;
                cfg.n_angles = 64;
                cfg.delta_x = 1e-4;
            } else {
                cfg.mesh_law = MeshLaw::StaticUniform;
                cfg.n_cells = 64;
                cfg.n_angles = 16;
            }
        }
        Regime::Thick => {
            cfg.sigma_a = 800.0;
            cfg.l = THICK_L;
            cfg.t0 = 10.0 * THICK_L;
            cfg.treatment = Treatment::Standard;
            cfg.mesh_law = MeshLaw::StaticLobatto;
            cfg.eval_times = THICK_TS.to_vec();
            cfg.n_angles = 16;
            cfg.rtol = 1e-8;
            cfg.atol = 1e-8;
            if source == SourceKind::Square {
                // the front at t = 0.3 needs more than 32 cells
                cfg.n_cells = 64;
                cfg.delta_x = 0.7;
            } else {
                cfg.x0 = 0.375;
                cfg.delta_x = 1.3;
            }
        }
    }
    if model == TableModel::S2 {
        cfg.n_angles = 2;
        cfg.angular_rule = AngularRule::GaussLegendre;
    }
    cfg.x_f = domain_width(&cfg, regime, cfg.t_final());
    cfg.validate()?;
    Ok(ProblemPreset {
        name: match model {
            TableModel::Transport => problem.to_string(),
            TableModel::S2 => format!("{problem}-s2"),
        },
        problem,
        model,
        regime,
        cfg,
    })
}

/// Final domain width for a run ending at `t`: wide enough for the wave
/// while the source is on, and for diffusive spreading (`~6 sqrt t`) after.
fn domain_width(cfg: &ProblemConfig, regime: Regime, t: f64) -> f64 {
    match regime {
        Regime::Thick => 2.0 * (cfg.x0 + cfg.delta_x),
        Regime::Thin => {
            let reach = match cfg.source_kind {
                SourceKind::Square => cfg.x0,
                _ => 6.0 * cfg.x0,
            };
            (2.0 * (reach + t.min(cfg.t0))).max(6.0 * t.sqrt())
        }
    }
}

pub const PROBLEMS: [&str; 7] = [
    "thin-square-su",
    "thin-square-cv",
    "thin-gaussian-su",
    "thin-gaussian-cv",
    "thick-square-su",
    "thick-gaussian-su",
    "thick-gaussian-cv",
];

pub fn catalog() -> Vec<ProblemPreset> {
    PROBLEMS
        .iter()
        .flat_map(|p| [TableModel::Transport, TableModel::S2].map(|m| base(p, m)))
        .map(|p| p.expect("built-in presets are valid"))
        .collect()
}

pub fn preset(name: &str) -> Result<ProblemPreset> {
    let (problem, model) = match name.strip_suffix("-s2") {
        Some(p) => (p, TableModel::S2),
        None => (name, TableModel::Transport),
    };
    let problem = PROBLEMS
        .iter()
        .find(|p| **p == problem)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    base(problem, model)
}

impl ProblemPreset {
    /// Configuration for a single run ending at `t`, with the domain width
    /// chosen for that time unless `keep_x_f` is set.
    pub fn config_for_time(&self, cfg: &ProblemConfig, t: f64, keep_x_f: bool) -> ProblemConfig {
        let mut c = cfg.clone();
        c.eval_times = vec![t];
        if !keep_x_f {
            c.x_f = domain_width(cfg, self.regime, t);
        }
        c
    }

    /// Positions of the published table for `field`. The thick tables do not
    /// all share one grid.
    pub fn table_xs(&self, field: TableField) -> Vec<f64> {
        match self.regime {
            Regime::Thin => THIN_XS.to_vec(),
            Regime::Thick => self
                .published(field)
                .expect("every preset has published tables")
                .xs,
        }
    }

    pub fn published(&self, field: TableField) -> Result<BenchmarkTable> {
        published(self.problem, field, self.model)
    }
}
