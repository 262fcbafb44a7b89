//! The elastic limit: `𝒩`-valued fields, the limit energy `∫L∇u·∇u`, its
//! minimisation, the singular-set detector and the Γ-convergence checks.

mod energy;
mod gamma;
mod harmonic;
mod manifold;
mod singular;

pub use energy::{
    central_gradient, compact_energy, compact_gradient, dirichlet_energy, gradient_density, limit_energy,
    limit_energy_masked,
};
pub use gamma::{gamma_liminf_check, gamma_limsup_check, transfer, LiminfRow, LimsupRow};
pub use harmonic::{harmonic_extension, harmonic_minimize, harmonic_multi_start, HarmonicConfig, HarmonicResult};
pub use manifold::ManifoldField;
pub use singular::{singular_set, SingularSetReport};

#[cfg(test)]
mod tests;
