//! Interaction kernels: evaluation, structural checks, moments, the
//! elastic tensor, and lattice sampling of the rescaled kernel.

mod assumptions;
mod elastic;
mod moments;
mod profile;
mod sampled;
mod spec;

pub use assumptions::{check_assumptions, detect_annulus, AnnulusParams, AssumptionReport};
pub use elastic::{
    annulus_second_moment_check, elastic_tensor, elastic_tensor_with, ellipticity_bounds,
    ellipticity_bounds_with, fit_ldg_constants, frank_constants, ElasticTensor, EllipticityBounds,
};
pub use moments::{compute_moments, compute_moments_with, KernelMoments, QuadratureConfig};
pub use profile::RadialProfile;
pub use sampled::{sample_on_lattice, truncation_radius, SampleConfig, SampledKernel};
pub use spec::{
    eigen_range, evaluate_kernel, frame_terms, kernel_gradient, min_eigen_g, q_basis, q_coords,
    q_matrix, KernelMode, KernelSpec,
};
