//! Mixed finite elements for the steady Stokes equations on the unit square,
//! and a local-and-parallel two-grid iteration built on them.
//!
//! Everything numerical is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar to `f64`.

// NaN must fail validation, so negated comparisons are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eplp;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod partition;
pub mod problems;
pub mod saddle;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use fem::element::{ElementKind, Family};
pub use partition::ExtensionMode;
pub use problems::ProblemId;

pub type Mesh = mesh::Mesh<f64>;
pub type PatchSet = partition::PatchSet<f64>;
pub type FeSpace = fem::space::FeSpace<f64>;
pub type TwoLevel = fem::state::TwoLevel<f64>;
pub type StokesState = fem::state::StokesState<f64>;
pub type ErrorTriple = fem::norms::ErrorTriple<f64>;
pub type SaddleSystem = saddle::SaddleSystem<f64>;
pub type ManufacturedProblem = problems::ManufacturedProblem<f64>;
pub type EplpConfig = eplp::EplpConfig<f64>;
pub type EplpSolver = eplp::EplpSolver<f64>;
pub type EplpRun = eplp::EplpRun<f64>;
