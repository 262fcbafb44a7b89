//! Lattice minimisation of non-local mean-field free energies for
//! liquid-crystal order parameters, with the large-domain elastic limit and
//! numerical regularity probes.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64` for everyday use.

pub mod analysis;
pub mod error;
pub mod field;
pub mod kernel;
pub mod limit;
pub mod linalg;
pub mod potential;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instances of the main types.
pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type ElasticTensor64 = kernel::ElasticTensor<f64>;
pub type MicroModel64 = potential::MicroModel<f64>;
pub type BulkPotential64 = potential::BulkPotential<f64>;
pub type Problem64 = field::Problem<f64>;
pub type OrderField64 = field::OrderField<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolveResult64 = solver::SolveResult<f64>;
pub type ManifoldField64 = limit::ManifoldField<f64>;
