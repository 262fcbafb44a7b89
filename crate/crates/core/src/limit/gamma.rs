use std::sync::Arc;

use super::energy::limit_energy_masked;
use super::manifold::ManifoldField;
use crate::error::{Error, Result};
use crate::field::{BoundaryPreset, Geometry, LocalEnergy, OrderField, Problem, ProblemConfig};
use crate::kernel::{elastic_tensor, ElasticTensor, KernelSpec};
use crate::potential::MicroModel;
use crate::real::Real;

/// `F_ε(v, B)` against `E₀(v, B)` at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimsupRow<T> {
    pub eps: T,
    pub f_eps: T,
    pub interaction: T,
    pub bulk: T,
    pub e0: T,
    /// `F_ε − E₀`.
    pub gap: T,
}

impl<T: Real> LimsupRow<T> {
    pub fn rel_gap(&self) -> T {
        if self.e0 == T::zero() {
            self.gap.fabs()
        } else {
            self.gap.fabs() / self.e0.fabs()
        }
    }
}

/// Evaluates `F_ε(v, B)` for each `ε` on a common lattice and compares with
/// the limit energy. `v` is retracted onto the vacuum manifold of each
/// `ε`-problem; `B` is the given ball or Ω.
#[allow(clippy::too_many_arguments)]
pub fn gamma_limsup_check<T: Real>(
    spec: &KernelSpec<T>,
    model: &MicroModel<T>,
    v: &(dyn Fn(&[T; 3]) -> Vec<T> + Sync),
    geometry: Geometry,
    radius: T,
    cells: usize,
    eps: &[T],
    ball: Option<([T; 3], T)>,
    cfg: &ProblemConfig<T>,
) -> Result<Vec<LimsupRow<T>>> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::InvalidInput("ε ladder must be non-empty and positive".into()));
    }
    let l = elastic_tensor(spec)?;
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let p = Problem::new(spec, model, e, geometry, radius, cells, BoundaryPreset::Vacuum, cfg)?;
        let mf = ManifoldField::from_fn(p.domain.clone(), p.bulk.vacuum.clone(), p.m(), v);
        rows.push(limsup_row(&p, &mf.to_order_field(e), &mf, &l, ball));
    }
    rows.into_iter().collect()
}

fn region<T: Real>(p: &Problem<T>, ball: Option<([T; 3], T)>) -> Vec<bool> {
    match ball {
        Some((x0, r)) => p.domain.ball_mask(&x0, r),
        None => p.domain.interior_mask(),
    }
}

fn limsup_row<T: Real>(
    p: &Problem<T>,
    u: &OrderField<T>,
    u0: &ManifoldField<T>,
    l: &ElasticTensor<T>,
    ball: Option<([T; 3], T)>,
) -> Result<LimsupRow<T>> {
    let mask = region(p, ball);
    let f = LocalEnergy::new(p, u)?.eval(&mask);
    let e0 = limit_energy_masked(u0, l, &mask);
    Ok(LimsupRow { eps: p.eps, f_eps: f.total, interaction: f.interaction, bulk: f.bulk, e0, gap: f.total - e0 })
}

/// One line of the local convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiminfRow<T> {
    pub eps: T,
    pub center: [T; 3],
    pub radius: T,
    /// `F_ε(u_ε, B_s)`.
    pub f_eps: T,
    /// `∫_{B_s} L∇u₀·∇u₀`.
    pub e0: T,
    pub gap: T,
    /// `‖u_ε − u₀‖_{L²(B_{s/2} ∩ Ω)}`.
    pub l2_half: T,
}

/// Transfers `u₀` onto the lattice of `target` (equal `h`, matched by cell centres).
pub fn transfer<T: Real>(u0: &ManifoldField<T>, target: &Arc<crate::field::Domain<T>>) -> Result<ManifoldField<T>> {
    let src = &u0.domain;
    if (src.h - target.h).fabs() > T::lit(1e-12) * src.h {
        return Err(Error::InvalidInput("fields must share the lattice spacing".into()));
    }
    let m = u0.m;
    let mut values = Vec::with_capacity(target.len() * m);
    for x in 0..target.len() {
        match src.locate(&target.coord(x)) {
            Some(y) => values.extend_from_slice(u0.cell(y)),
            None if !target.is_interior(x) => values.extend(u0.vacuum.representative(m)),
            None => return Err(Error::InvalidInput("limit field does not cover Ω".into())),
        }
    }
    Ok(ManifoldField { domain: target.clone(), vacuum: u0.vacuum.clone(), m, values })
}

/// Compares `F_ε(u_ε, B_s)` with the local limit energy and records the
/// `L²(B_{s/2})` distance, for every `(ε, ball)` pair.
pub fn gamma_liminf_check<T: Real>(
    seq: &[(&Problem<T>, &OrderField<T>)],
    u0: &ManifoldField<T>,
    l: &ElasticTensor<T>,
    balls: &[([T; 3], T)],
) -> Result<Vec<LiminfRow<T>>> {
    let mut out = Vec::new();
    for &(p, u) in seq {
        let v0 = transfer(u0, &p.domain)?;
        let le = LocalEnergy::new(p, u)?;
        let h3 = p.domain.cell_volume();
        for &(c, s) in balls {
            let mask = p.domain.ball_mask(&c, s);
            let f = le.eval(&mask).total;
            let e0 = limit_energy_masked(&v0, l, &mask);
            let half = p.domain.ball_mask(&c, s * T::lit(0.5));
            let mut d2 = T::zero();
            for x in 0..p.domain.len() {
                if half[x] && p.domain.is_interior(x) {
                    d2 = d2 + u.cell(x).iter().zip(v0.cell(x)).fold(T::zero(), |a, (&p, &q)| a + (p - q) * (p - q));
                }
            }
            out.push(LiminfRow { eps: p.eps, center: c, radius: s, f_eps: f, e0, gap: f - e0, l2_half: (d2 * h3).sqrt() });
        }
    }
    Ok(out)
}
