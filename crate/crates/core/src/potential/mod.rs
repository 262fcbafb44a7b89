//! Microscopic models, the singular potential by maximum-entropy duality,
//! and the bulk potential with its vacuum manifold.

mod bulk;
mod dual;
mod model;
mod primal;

pub use bulk::{compute_c0_and_nn, hessian_diagnostics, BulkConfig, BulkPotential, HessianReport, Vacuum};
pub use dual::{
    covariance, dual_eval, entropy, lambda, lambda_from, lambda_inverse, log_partition,
    minimal_distribution, psi_s, DualState, LambdaConfig,
};
pub use model::{circle_sigma, sphere_sigma, Manifold, MicroModel, CIRCLE_NODES, SPHERE_PHI, SPHERE_THETA};
pub use primal::primal_entropy_minimum;
