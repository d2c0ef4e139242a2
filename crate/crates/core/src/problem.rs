//! Physical constants, nondimensionalization, equations of state and sources.
//!
//! All quantities past this module are dimensionless: lengths in units of
//! `1/(l sigma_a)`, times in units of `1/(l v sigma_a)`, energies scaled by
//! `a T_H^4`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light, cm/ns.
pub const SPEED_OF_LIGHT: f64 = 29.998;
/// Radiation constant, GJ cm^-3 keV^-4.
pub const RADIATION_CONSTANT: f64 = 0.0137225;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Particle speed, cm/ns.
    pub v: f64,
    /// Radiation constant, GJ cm^-3 keV^-4.
    pub a: f64,
    /// Reference (hohlraum) temperature, keV.
    pub t_h: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            v: SPEED_OF_LIGHT,
            a: RADIATION_CONSTANT,
            t_h: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Square,
    Gaussian,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EosKind {
    SuOlson,
    ConstantCv,
}

/// Material equation of state in dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationOfState {
    pub kind: EosKind,
    /// Dimensional specific heat, GJ cm^-3 keV^-1. Only used by `ConstantCv`.
    pub cv0: f64,
    /// `cv0 / (a T_H^3)`.
    pub cv0_bar: f64,
}

impl EquationOfState {
    pub fn su_olson() -> Self {
        Self {
            kind: EosKind::SuOlson,
            cv0: 0.0,
            cv0_bar: 0.0,
        }
    }

    pub fn constant_cv(cv0: f64, constants: &PhysicalConstants) -> Result<Self> {
        if !(cv0 > 0.0) {
            return Err(Error::InvalidConfig(format!("cv0 must be positive, got {cv0}")));
        }
        Ok(Self {
            kind: EosKind::ConstantCv,
            cv0,
            cv0_bar: cv0 / (constants.a * constants.t_h.powi(3)),
        })
    }

    /// Dimensionless temperature for a (possibly negative) energy density.
    pub fn temperature(&self, e_bar: f64) -> f64 {
        temperature_from_energy(e_bar, self)
    }

    /// Sign-preserving emission `sign(T) |T|^4`.
    pub fn emission(&self, e_bar: f64) -> f64 {
        match self.kind {
            // sign(e)|e|^{1/4} raised back to the fourth power with the sign kept is e.
            EosKind::SuOlson => e_bar,
            EosKind::ConstantCv => {
                let t = e_bar / self.cv0_bar;
                let t2 = t * t;
                t2 * t2 * t.signum()
            }
        }
    }
}

pub fn temperature_from_energy(e_bar: f64, eos: &EquationOfState) -> f64 {
    match eos.kind {
        EosKind::SuOlson => e_bar.signum() * e_bar.abs().powf(0.25),
        EosKind::ConstantCv => e_bar / eos.cv0_bar,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularRule {
    GaussLegendre,
    GaussLobatto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    Standard,
    Uncollided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshLaw {
    ThinSquare,
    StaticUniform,
    StaticLobatto,
    ConstantSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    /// Explicit Dormand-Prince 5(4) unless the estimated explicit step count is
    /// prohibitive, in which case the L-stable SDIRK4.
    Auto,
    Dopri5,
    Sdirk4,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", $what, " `{}`"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(SourceKind, "source kind", {
    "square" => SourceKind::Square,
    "gaussian" => SourceKind::Gaussian,
    "none" => SourceKind::None,
});
keyword_enum!(EosKind, "equation of state", {
    "su_olson" => EosKind::SuOlson,
    "constant_cv" => EosKind::ConstantCv,
});
keyword_enum!(AngularRule, "angular rule", {
    "gauss_legendre" => AngularRule::GaussLegendre,
    "gauss_lobatto" => AngularRule::GaussLobatto,
});
keyword_enum!(Treatment, "source treatment", {
    "standard" => Treatment::Standard,
    "uncollided" => Treatment::Uncollided,
});
keyword_enum!(MeshLaw, "mesh law", {
    "thin_square" => MeshLaw::ThinSquare,
    "static_uniform" => MeshLaw::StaticUniform,
    "static_lobatto" => MeshLaw::StaticLobatto,
    "constant_speed" => MeshLaw::ConstantSpeed,
});
keyword_enum!(IntegratorKind, "integrator", {
    "auto" => IntegratorKind::Auto,
    "dopri5" => IntegratorKind::Dopri5,
    "sdirk4" => IntegratorKind::Sdirk4,
});

/// Full problem statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub constants: PhysicalConstants,
    /// Absorption cross section, cm^-1.
    pub sigma_a: f64,
    /// Length/time scaling; 1 for thin problems.
    pub l: f64,
    /// Source half-width (square) or width parameter (Gaussian).
    pub x0: f64,
    /// Source duration.
    pub t0: f64,
    pub source_kind: SourceKind,
    pub eos: EquationOfState,
    pub c_a: f64,
    /// Number of discrete ordinates.
    pub n_angles: usize,
    pub angular_rule: AngularRule,
    /// Cell count.
    pub n_cells: usize,
    /// Highest Legendre order in each cell.
    pub max_order: usize,
    pub treatment: Treatment,
    pub mesh_law: MeshLaw,
    /// Width the mesh should span at the final time.
    pub x_f: f64,
    /// Initial width of the outer mesh region.
    pub delta_x: f64,
    pub eval_times: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub integrator: IntegratorKind,
    pub max_steps: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            sigma_a: 1.0,
            l: 1.0,
            x0: 0.5,
            t0: 10.0,
            source_kind: SourceKind::Square,
            eos: EquationOfState::su_olson(),
            c_a: 1.0,
            n_angles: 16,
            angular_rule: AngularRule::GaussLobatto,
            n_cells: 16,
            max_order: 4,
            treatment: Treatment::Uncollided,
            mesh_law: MeshLaw::ThinSquare,
            x_f: 10.0,
            delta_x: 1e-4,
            eval_times: vec![1.0],
            rtol: 1e-10,
            atol: 1e-10,
            integrator: IntegratorKind::Auto,
            max_steps: 2_000_000,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.l > 0.0) {
            return bad(format!("l must be positive, got {}", self.l));
        }
        if !(self.sigma_a > 0.0) {
            return bad(format!("sigma_a must be positive, got {}", self.sigma_a));
        }
        if !(self.constants.t_h > 0.0) {
            return bad(format!("T_H must be positive, got {}", self.constants.t_h));
        }
        if self.n_cells < 4 || self.n_cells % 2 != 0 {
            return bad(format!("K must be even and at least 4, got {}", self.n_cells));
        }
        if self.n_angles < 2 || self.n_angles % 2 != 0 {
            return bad(format!("N must be even and at least 2, got {}", self.n_angles));
        }
        if self.c_a != 1.0 {
            return bad(format!("c_a is fixed at 1, got {}", self.c_a));
        }
        if self.source_kind != SourceKind::None && !(self.x0 > 0.0) {
            return bad(format!("x0 must be positive, got {}", self.x0));
        }
        if !(self.t0 >= 0.0) {
            return bad(format!("t0 must be nonnegative, got {}", self.t0));
        }
        if self.eos.kind == EosKind::ConstantCv && !(self.eos.cv0 > 0.0) {
            return bad(format!("cv0 must be positive, got {}", self.eos.cv0));
        }
        if self.eval_times.is_empty() {
            return bad("eval_times is empty".into());
        }
        if self.eval_times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return bad("eval_times must be positive and finite".into());
        }
        if self.eval_times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("eval_times must be strictly increasing".into());
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad("rtol and atol must be positive".into());
        }
        if !(self.x_f > 0.0) || !(self.delta_x > 0.0) {
            return bad("x_f and delta_x must be positive".into());
        }
        if self.mesh_law == MeshLaw::ThinSquare && self.n_cells % 4 != 0 {
            return bad(format!(
                "thin_square mesh needs K divisible by 4, got {}",
                self.n_cells
            ));
        }
        Ok(())
    }

    /// Largest evaluation time.
    pub fn t_final(&self) -> f64 {
        *self.eval_times.last().expect("validated config has eval times")
    }

    /// True for the two-angle Gauss-Legendre (S2) model.
    pub fn is_s2(&self) -> bool {
        self.n_angles == 2 && self.angular_rule == AngularRule::GaussLegendre
    }

    /// Fastest wavefront speed of the discretized model.
    pub fn wave_speed(&self) -> f64 {
        if self.is_s2() {
            1.0 / 3f64.sqrt()
        } else {
            1.0
        }
    }

    /// Maps dimensional position (cm) and time (ns) to dimensionless `(x, t)`.
    pub fn nondimensionalize(&self, z: f64, tau: f64) -> (f64, f64) {
        nondimensionalize(z, tau, self)
    }

    pub fn dimensionalize(&self, x: f64, t: f64) -> (f64, f64) {
        let s = self.l * self.sigma_a;
        (x / s, t / (s * self.constants.v))
    }

    pub fn source(&self, x: f64, t: f64) -> f64 {
        source_eval(x, t, self)
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("`{key}` expects a number, got `{v}`")))
        };
        let int = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("`{key}` expects an integer, got `{v}`")))
        };
        match key.trim() {
            "v" => self.constants.v = num(value)?,
            "a" => self.constants.a = num(value)?,
            "T_H" => {
                self.constants.t_h = num(value)?;
                self.refresh_eos();
            }
            "sigma_a" => self.sigma_a = num(value)?,
            "l" => self.l = num(value)?,
            "x0" => self.x0 = num(value)?,
            "t0" => self.t0 = num(value)?,
            "source_kind" => self.source_kind = value.parse()?,
            "eos" => {
                self.eos.kind = value.parse()?;
                self.refresh_eos();
            }
            "cv0" => {
                self.eos.cv0 = num(value)?;
                self.refresh_eos();
            }
            "c_a" => self.c_a = num(value)?,
            "N" => self.n_angles = int(value)?,
            "angular_rule" => self.angular_rule = value.parse()?,
            "K" => self.n_cells = int(value)?,
            "M" => self.max_order = int(value)?,
            "treatment" => self.treatment = value.parse()?,
            "mesh_law" => self.mesh_law = value.parse()?,
            "x_f" => self.x_f = num(value)?,
            "delta_x" => self.delta_x = num(value)?,
            "eval_times" => {
                self.eval_times = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<Result<_>>()?
            }
            "rtol" => self.rtol = num(value)?,
            "atol" => self.atol = num(value)?,
            "integrator" => self.integrator = value.parse()?,
            "max_steps" => self.max_steps = int(value)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn refresh_eos(&mut self) {
        self.eos.cv0_bar = match self.eos.kind {
            EosKind::SuOlson => 0.0,
            EosKind::ConstantCv => self.eos.cv0 / (self.constants.a * self.constants.t_h.powi(3)),
        };
    }

    /// Parses the `key = value` text format. Unset keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key, value).map_err(|e| match e {
                Error::UnknownKey(_) => e,
                other => Error::ConfigParse {
                    line: i + 1,
                    msg: other.to_string(),
                },
            })?;
        }
        Ok(cfg)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    /// Renders the config in the `key = value` format; parsing it back gives an equal config.
    pub fn to_config_string(&self) -> String {
        let times = self
            .eval_times
            .iter()
            .map(|t| format!("{t:?}"))
            .collect::<Vec<_>>()
            .join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("v", format!("{:?}", self.constants.v));
        kv("a", format!("{:?}", self.constants.a));
        kv("T_H", format!("{:?}", self.constants.t_h));
        kv("sigma_a", format!("{:?}", self.sigma_a));
        kv("l", format!("{:?}", self.l));
        kv("x0", format!("{:?}", self.x0));
        kv("t0", format!("{:?}", self.t0));
        kv("source_kind", self.source_kind.to_string());
        kv("eos", self.eos.kind.to_string());
        kv("cv0", format!("{:?}", self.eos.cv0));
        kv("c_a", format!("{:?}", self.c_a));
        kv("N", self.n_angles.to_string());
        kv("angular_rule", self.angular_rule.to_string());
        kv("K", self.n_cells.to_string());
        kv("M", self.max_order.to_string());
        kv("treatment", self.treatment.to_string());
        kv("mesh_law", self.mesh_law.to_string());
        kv("x_f", format!("{:?}", self.x_f));
        kv("delta_x", format!("{:?}", self.delta_x));
        kv("eval_times", times);
        kv("rtol", format!("{:?}", self.rtol));
        kv("atol", format!("{:?}", self.atol));
        kv("integrator", self.integrator.to_string());
        kv("max_steps", self.max_steps.to_string());
        s
    }
}

pub fn nondimensionalize(z: f64, tau: f64, cfg: &ProblemConfig) -> (f64, f64) {
    let s = cfg.l * cfg.sigma_a;
    (s * z, s * cfg.constants.v * tau)
}

/// Dimensionless source strength. Square support is closed: `|x| <= x0`, `t <= t0`.
pub fn source_eval(x: f64, t: f64, cfg: &ProblemConfig) -> f64 {
    if t > cfg.t0 || t < 0.0 {
        return 0.0;
    }
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
