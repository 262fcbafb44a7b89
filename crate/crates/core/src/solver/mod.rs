//! Minimisation of the lattice energy: the damped Euler–Lagrange
//! iteration, a gradient-descent cross-check, and diagnostics.

mod descent;
mod el;
mod eval;
mod probe;

pub use descent::{energy_gradient, gradient_descent};
pub use el::el_fixed_point;
pub use probe::{omega_minimality_probe, ProbeReport};

use crate::error::{Error, Result};
use crate::field::{InteractionMode, OrderField, Problem};
use crate::potential::MicroModel;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Initial damping `α ∈ (0,1]`.
    pub alpha: T,
    /// Smallest damping before giving up.
    pub alpha_min: T,
    /// Sup-norm tolerance on `Λ(u) − K_ε∗u`.
    pub tol: T,
    pub max_iter: usize,
    /// Initial step of the gradient fallback.
    pub descent_step: T,
    pub seed: u64,
    pub mode: InteractionMode,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            alpha: T::lit(0.5),
            alpha_min: T::lit(1.0 / 1024.0),
            tol: T::lit(1e-6),
            max_iter: 5000,
            descent_step: T::lit(0.05),
            seed: 0,
            mode: InteractionMode::Full,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidInput("alpha must lie in (0, 1]".into()));
        }
        if !(self.alpha_min > T::zero() && self.alpha_min <= self.alpha) {
            return Err(Error::InvalidInput("alpha_min must lie in (0, alpha]".into()));
        }
        if !(self.tol > T::zero()) || !(self.descent_step > T::zero()) {
            return Err(Error::InvalidInput("tolerances and steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Damping or step length fell below its floor without an acceptable step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub field: OrderField<T>,
    /// `Λ(u)` on interior cells.
    pub duals: Vec<T>,
    pub residual_history: Vec<T>,
    /// Primal energy (constant included) after each accepted step, tracked by increments.
    pub energy_history: Vec<T>,
    /// Primal energy of the returned field, evaluated afresh.
    pub energy: T,
    pub residual: T,
    /// Physicality margin `δ`.
    pub margin: T,
    pub lipschitz: T,
    pub iterations: usize,
    pub termination: Termination,
    /// Damping or step length at exit.
    pub final_step: T,
}

impl<T: Real> SolveResult<T> {
    /// Errors with `MaxIterations` unless the residual tolerance was met.
    pub fn check(&self) -> Result<()> {
        match self.termination {
            Termination::Converged => Ok(()),
            _ => Err(Error::MaxIterations { iterations: self.iterations, residual: self.residual.as_f64() }),
        }
    }
}

/// `min_Ω dist(u(x), ∂𝒬)`.
pub fn physicality_margin<T: Real>(u: &OrderField<T>, model: &MicroModel<T>) -> T {
    u.domain
        .interior_indices()
        .into_iter()
        .map(|x| model.dist_to_boundary(u.cell(x)).max(T::zero()))
        .fold(model.sigma_max, |a, b| a.min(b))
}

/// `max |u(x) − u(y)|/h` over lattice-adjacent interior pairs.
pub fn lipschitz_estimate<T: Real>(u: &OrderField<T>) -> T {
    let d = &u.domain;
    let mut best = T::zero();
    for x in 0..d.len() {
        if !d.is_interior(x) {
            continue;
        }
        for axis in 0..3 {
            if let Some(y) = d.neighbour(x, axis, true) {
                if d.is_interior(y) {
                    let s = u.cell(x).iter().zip(u.cell(y)).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
                    best = best.max(s.sqrt() / d.h);
                }
            }
        }
    }
    best
}

/// Lowest-energy result over the boundary-datum start and `n_random` random starts.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart<T> {
    pub best: SolveResult<T>,
    /// `(start label, final energy, termination)` for every start.
    pub starts: Vec<(String, T, Termination)>,
}

pub fn multi_start<T: Real>(p: &Problem<T>, n_random: usize, cfg: &SolverConfig<T>) -> Result<MultiStart<T>> {
    let mut inits = vec![("boundary".to_string(), p.boundary_field())];
    for k in 0..n_random {
        inits.push((format!("random{k}"), p.random_field(T::lit(0.8), cfg.seed.wrapping_add(k as u64))));
    }
    let mut best: Option<SolveResult<T>> = None;
    let mut starts = Vec::new();
    for (label, init) in inits {
        let r = el_fixed_point(p, &init, cfg)?;
        starts.push((label, r.energy, r.termination));
        let better = match &best {
            None => true,
            Some(b) => r.energy < b.energy,
        };
        if better {
            best = Some(r);
        }
    }
    Ok(MultiStart { best: best.unwrap(), starts })
}
