//! Numerical probes of the regularity theory: mollifier comparisons, the
//! Poincaré-type inequality, Campanato and energy decay, Hölder seminorms,
//! the decay lemma and uniform convergence away from the singular set.

mod decay;
mod inequalities;
mod mollifier;
mod uniform;

pub use decay::{
    campanato_profile, decay_lemma_check, decay_profile, holder_seminorm, loglog_fit, Calibration, DecayConfig,
    DecayProfile, DecaySample, DecayTable,
};
pub use inequalities::{mean_oscillation, mollify_h1_check, mollify_l2_check, poincare_check, InequalityCheck};
pub use mollifier::{build_mollifier, build_mollifier_on, Mollifier};
pub use uniform::{uniform_convergence_report, UniformRow};

#[cfg(test)]
mod tests;
