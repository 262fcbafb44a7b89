use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::boundary::BoundaryData;
use super::domain::Domain;
use crate::error::{Error, Result};
use crate::potential::MicroModel;
use crate::real::Real;
use crate::rng;

/// Lattice order field `u: box → ℝᵐ`, cell-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderField<T> {
    pub domain: Arc<Domain<T>>,
    pub m: usize,
    pub eps: T,
    pub values: Vec<T>,
}

impl<T: Real> OrderField<T> {
    /// The boundary datum everywhere, interior included.
    pub fn from_boundary(domain: Arc<Domain<T>>, bd: &BoundaryData<T>, eps: T) -> Self {
        OrderField { m: bd.m, eps, values: bd.values.clone(), domain }
    }

    /// Boundary datum off Ω, `f(x)` on interior cells.
    pub fn with_interior(domain: Arc<Domain<T>>, bd: &BoundaryData<T>, eps: T, f: impl Fn(&[T; 3]) -> Vec<T>) -> Self {
        let mut u = Self::from_boundary(domain, bd, eps);
        for idx in u.domain.interior_indices() {
            let v = f(&u.domain.coord(idx));
            u.cell_mut(idx).copy_from_slice(&v);
        }
        u
    }

    /// Interior values drawn uniformly in the ball of radius `ratio·σ_max`.
    pub fn random_admissible(
        domain: Arc<Domain<T>>,
        bd: &BoundaryData<T>,
        model: &MicroModel<T>,
        eps: T,
        ratio: T,
        seed: u64,
    ) -> Self {
        let mut r = rng::stream(seed, "field.random");
        let m = bd.m;
        let mut u = Self::from_boundary(domain, bd, eps);
        for idx in u.domain.interior_indices() {
            let g: Vec<f64> = (0..m).map(|_| r.sample(StandardNormal)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let rad: f64 = r.gen::<f64>().powf(1.0 / m as f64) * (ratio * model.sigma_max).as_f64();
            for (a, c) in u.cell_mut(idx).iter_mut().enumerate() {
                *c = T::lit(g[a] / n * rad);
            }
        }
        u
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> &[T] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    #[inline]
    pub fn cell_mut(&mut self, idx: usize) -> &mut [T] {
        &mut self.values[idx * self.m..(idx + 1) * self.m]
    }

    /// Boundary cells carry the datum exactly and interior cells are strictly physical.
    pub fn check_admissible(&self, bd: &BoundaryData<T>, model: &MicroModel<T>) -> Result<()> {
        if self.values.len() != bd.values.len() || self.m != bd.m {
            return Err(Error::InvalidInput("field and boundary data have different shapes".into()));
        }
        for idx in 0..self.domain.len() {
            if self.domain.is_interior(idx) {
                if !(model.dist_to_boundary(self.cell(idx)) > T::zero()) {
                    return Err(Error::OutsideMomentDomain { dual_norm: f64::INFINITY, residual: f64::NAN });
                }
            } else if self.cell(idx) != bd.cell(idx) {
                return Err(Error::InvalidInput(format!("cell {idx} off Ω differs from the boundary datum")));
            }
        }
        Ok(())
    }

    /// `sup` over interior cells of `|u − v|`.
    pub fn interior_sup_distance(&self, other: &OrderField<T>) -> T {
        self.domain
            .interior_indices()
            .into_iter()
            .map(|idx| {
                self.cell(idx)
                    .iter()
                    .zip(other.cell(idx))
                    .fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))
                    .sqrt()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}
