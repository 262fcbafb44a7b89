use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{BoundaryData, Domain, OrderField};
use crate::potential::Vacuum;
use crate::real::Real;
use crate::rng;

/// Per-cell values on the vacuum manifold `𝒩`, stored in order-parameter
/// coordinates. Cells off Ω carry the boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldField<T> {
    pub domain: Arc<Domain<T>>,
    pub vacuum: Vacuum<T>,
    pub m: usize,
    pub values: Vec<T>,
}

impl<T: Real> ManifoldField<T> {
    /// Samples `f` on every cell and retracts onto `𝒩`.
    pub fn from_fn(domain: Arc<Domain<T>>, vacuum: Vacuum<T>, m: usize, f: impl Fn(&[T; 3]) -> Vec<T>) -> Self {
        let mut values = Vec::with_capacity(domain.len() * m);
        for x in 0..domain.len() {
            values.extend(vacuum.project(&f(&domain.coord(x))));
        }
        ManifoldField { domain, vacuum, m, values }
    }

    /// Retraction of the boundary datum on every cell.
    pub fn from_boundary(domain: Arc<Domain<T>>, vacuum: Vacuum<T>, bd: &BoundaryData<T>) -> Self {
        let m = bd.m;
        let mut values = Vec::with_capacity(domain.len() * m);
        for x in 0..domain.len() {
            values.extend(vacuum.project(bd.cell(x)));
        }
        ManifoldField { domain, vacuum, m, values }
    }

    /// Closest-point retraction of an order field.
    pub fn from_order_field(u: &OrderField<T>, vacuum: Vacuum<T>) -> Self {
        let values = u.values.chunks(u.m).flat_map(|c| vacuum.project(c)).collect();
        ManifoldField { domain: u.domain.clone(), vacuum, m: u.m, values }
    }

    pub fn to_order_field(&self, eps: T) -> OrderField<T> {
        OrderField { domain: self.domain.clone(), m: self.m, eps, values: self.values.clone() }
    }

    /// Replaces the interior values by the retraction of `f`.
    pub fn with_interior(&self, f: impl Fn(&[T; 3]) -> Vec<T>) -> Self {
        let mut out = self.clone();
        for x in self.domain.interior_indices() {
            let v = self.vacuum.project(&f(&self.domain.coord(x)));
            out.cell_mut(x).copy_from_slice(&v);
        }
        out
    }

    #[inline]
    pub fn cell(&self, x: usize) -> &[T] {
        &self.values[x * self.m..(x + 1) * self.m]
    }

    #[inline]
    pub fn cell_mut(&mut self, x: usize) -> &mut [T] {
        &mut self.values[x * self.m..(x + 1) * self.m]
    }

    /// Retracts every cell; the identity on `𝒩`-valued fields up to round-off.
    pub fn retract(&mut self) {
        let m = self.m;
        for c in self.values.chunks_mut(m) {
            let p = self.vacuum.project(c);
            c.copy_from_slice(&p);
        }
    }

    /// Largest distance from `𝒩` over all cells.
    pub fn max_distance(&self) -> T {
        self.values.chunks(self.m).fold(T::zero(), |d, c| d.max(self.vacuum.distance(c)))
    }

    pub fn validate(&self, tol: T) -> Result<()> {
        let d = self.max_distance();
        if d > tol {
            return Err(Error::InvalidInput(format!("field leaves the vacuum manifold by {:.3e}", d.as_f64())));
        }
        Ok(())
    }

    /// Molecular angle `θ` with `u = s₀(cos 2θ, sin 2θ)`; planar orbit only.
    pub fn angles(&self) -> Option<Vec<T>> {
        match self.vacuum {
            Vacuum::Circle { .. } => Some(self.values.chunks(2).map(|c| T::lit(0.5) * c[1].atan2(c[0])).collect()),
            _ => None,
        }
    }

    /// Largest per-cell distance between two fields on Ω.
    pub fn interior_sup_distance(&self, other: &ManifoldField<T>) -> T {
        let mut d = T::zero();
        for x in self.domain.interior_indices() {
            let s = self.cell(x).iter().zip(other.cell(x)).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
            d = d.max(s.sqrt());
        }
        d
    }

    /// `P(u + A·w(x)·ξ(x))` on Ω, with `w = (1 − |x|²/R²)₊` and `ξ` a random sum
    /// of four low-frequency modes; the boundary trace is kept.
    pub fn random_interpolant(&self, amplitude: T, seed: u64) -> Self {
        let mut r = rng::stream(seed, "limit.interpolant");
        let modes: Vec<([f64; 3], f64, Vec<f64>)> = (0..4)
            .map(|_| {
                let k = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
                let ph = r.gen_range(0.0..std::f64::consts::TAU);
                let c = (0..self.m).map(|_| r.gen_range(-1.0..1.0)).collect();
                (k, ph, c)
            })
            .collect();
        let rad = self.domain.radius;
        let mut out = self.clone();
        for x in self.domain.interior_indices() {
            let p = self.domain.coord(x);
            let w = (T::one() - (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (rad * rad)).max(T::zero());
            let mut v = self.cell(x).to_vec();
            for (k, ph, c) in &modes {
                let arg = T::lit(k[0]) * p[0] + T::lit(k[1]) * p[1] + T::lit(k[2]) * p[2] + T::lit(*ph);
                let s = arg.sin() * w * amplitude;
                for (vi, &ci) in v.iter_mut().zip(c) {
                    *vi = *vi + s * T::lit(ci);
                }
            }
            let pv = self.vacuum.project(&v);
            out.cell_mut(x).copy_from_slice(&pv);
        }
        out
    }
}
