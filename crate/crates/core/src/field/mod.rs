//! Lattice domains, boundary data, order fields and the discrete energies.

mod boundary;
mod convolve;
mod domain;
mod energy;
mod io;
mod order;
mod problem;

pub use boundary::{vacuum_point, BoundaryData, BoundaryPreset};
pub use convolve::{smooth_size, ConvMethod, Convolver};
pub use domain::{Domain, Geometry, Region};
pub use energy::{
    energy_oscillation, energy_oscillation_pairs, energy_oscillation_with, energy_primal, energy_primal_with,
    finite_thickness_energy, finite_thickness_with, h_eps_profile, local_energy, region_mask, scaling_check,
    EnergyBreakdown, HProfile, LocalEnergy, LocalValue, ScalingCheck,
};
pub use io::{energy_csv_row, read_field, write_field, FieldDump, ENERGY_CSV_HEADER};
pub use order::OrderField;
pub use problem::{layer_required, DualField, InteractionMode, LayerPolicy, Problem, ProblemConfig};

#[cfg(test)]
mod tests;
