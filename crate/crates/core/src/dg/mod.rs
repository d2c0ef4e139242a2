//! Moving-mesh discontinuous Galerkin discretization of the discrete-ordinates
//! equations coupled to the material energy balance.

pub mod linear;
pub mod operators;
pub mod system;

pub use system::{DgSystem, Phase};
pub mod solution;

pub use solution::{integrate, Fields, Snapshot, Solution, SolutionTensor};
