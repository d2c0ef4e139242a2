//! Moving-mesh discontinuous Galerkin discrete-ordinates solver for grey,
//! non-equilibrium thermal radiative transfer in a purely absorbing slab,
//! together with semi-analytic S2 benchmark solutions.

pub mod adaptive;
pub mod benchmark;
pub mod dg;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod ode;
pub mod presets;
pub mod problem;
pub mod quadrature;
pub mod run;
pub mod special;
pub mod tables;
pub mod uncollided;

pub use error::{Error, Result};
