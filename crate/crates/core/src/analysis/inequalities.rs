use super::mollifier::Mollifier;
use crate::error::{Error, Result};
use crate::field::{LocalEnergy, OrderField};
use crate::real::Real;

/// Both sides of a checked inequality `lhs ≤ C·rhs` and the measured ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    /// `lhs/rhs`, with `0/0 = 0`.
    pub ratio: T,
}

impl<T: Real> InequalityCheck<T> {
    pub fn new(lhs: T, rhs: T) -> Self {
        let ratio = if lhs == T::zero() {
            T::zero()
        } else if rhs == T::zero() {
            T::infinity()
        } else {
            lhs / rhs
        };
        InequalityCheck { lhs, rhs, ratio }
    }
}

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
}

/// `ε⁻²∬_{G×G}K_ε(u(x)−u(y))^{⊗2}`, i.e. four times the interaction part of `F_ε(u, G)`.
fn double_integral<T: Real>(le: &LocalEnergy<'_, T>, mask: &[bool]) -> T {
    T::lit(4.0) * le.eval(mask).interaction
}

/// `∫_{B_{R/2}}|∇(φ_ε∗u)|²` against `ε⁻²∬_{B_R×B_R}K_ε(u(x)−u(y))^{⊗2}`.
pub fn mollify_h1_check<T: Real>(le: &LocalEnergy<'_, T>, moll: &Mollifier<T>, x0: &[T; 3], radius: T) -> Result<InequalityCheck<T>> {
    let p = le.problem;
    let u: &OrderField<T> = le.field;
    let dom = &p.domain;
    let h = dom.h;
    if (moll.eps - p.eps).fabs() > T::lit(1e-12) * p.eps || (moll.h - h).fabs() > T::lit(1e-12) * h {
        return Err(Error::InvalidInput("mollifier built for another ε or lattice".into()));
    }
    if radius * T::lit(0.5) + moll.reach() + h > radius {
        return Err(Error::ResolutionMismatch(format!(
            "mollifier reach {:.4} does not fit between B_(R/2) and B_R for R = {:.4}",
            moll.reach().as_f64(),
            radius.as_f64()
        )));
    }
    let inner = dom.ball_mask(x0, radius * T::lit(0.5));
    let m = u.m;
    let mut lhs = T::zero();
    let cells: Vec<usize> = (0..dom.len()).filter(|&x| inner[x]).collect();
    for &x in &cells {
        let mut nb = Vec::with_capacity(6);
        for a in 0..3 {
            for f in [true, false] {
                nb.push(dom.neighbour(x, a, f).ok_or_else(|| Error::ResolutionMismatch("ball reaches the box face".into()))?);
            }
        }
        let mv = moll.apply_at(dom, &u.values, m, &nb);
        for a in 0..3 {
            lhs = lhs + dist2(&mv[2 * a], &mv[2 * a + 1]) / (T::lit(4.0) * h * h);
        }
    }
    lhs = lhs * dom.cell_volume();
    let rhs = double_integral(le, &dom.ball_mask(x0, radius));
    Ok(InequalityCheck::new(lhs, rhs))
}

/// `∫_A|u − φ_ε∗u|²` against `ε⁻²∬_{A′×A′}K_ε(u(x)−u(y))^{⊗2}` for cell masks `A ⊂⊂ A′`.
pub fn mollify_l2_check<T: Real>(le: &LocalEnergy<'_, T>, moll: &Mollifier<T>, a: &[bool], a_outer: &[bool]) -> Result<InequalityCheck<T>> {
    let p = le.problem;
    let u = le.field;
    let dom = &p.domain;
    let [n0, n1, n2] = dom.dims;
    let cells: Vec<usize> = (0..dom.len()).filter(|&x| a[x]).collect();
    for &x in &cells {
        let [i, j, k] = dom.ijk(x);
        for (z, _) in &moll.weights {
            let (q0, q1, q2) = (i as isize + z[0], j as isize + z[1], k as isize + z[2]);
            let inside = q0 >= 0 && q1 >= 0 && q2 >= 0 && q0 < n0 as isize && q1 < n1 as isize && q2 < n2 as isize;
            if !inside || !a_outer[((q0 as usize) * n1 + q1 as usize) * n2 + q2 as usize] {
                return Err(Error::ResolutionMismatch("mollifier support leaves A′".into()));
            }
        }
    }
    let mv = moll.deviation_at(dom, &u.values, u.m, &cells);
    let lhs = mv.iter().fold(T::zero(), |s, v| s + v.iter().fold(T::zero(), |t, &d| t + d * d)) * dom.cell_volume();
    Ok(InequalityCheck::new(lhs, double_integral(le, a_outer)))
}

/// Mean oscillation `⨍_G|u − ū|²` over the cells of `mask`.
pub fn mean_oscillation<T: Real>(u: &OrderField<T>, mask: &[bool]) -> T {
    let m = u.m;
    let Some(first) = mask.iter().position(|&b| b) else { return T::zero() };
    // mean accumulated relative to one cell, exact for constants
    let c = u.cell(first).to_vec();
    let mut shift = vec![T::zero(); m];
    let mut n = 0usize;
    for (x, &b) in mask.iter().enumerate() {
        if b {
            n += 1;
            for a in 0..m {
                shift[a] = shift[a] + (u.cell(x)[a] - c[a]);
            }
        }
    }
    let nn = T::from_usize_lossy(n);
    let mean: Vec<T> = (0..m).map(|a| c[a] + shift[a] / nn).collect();
    let s = mask.iter().enumerate().filter(|(_, &b)| b).fold(T::zero(), |s, (x, _)| s + dist2(u.cell(x), &mean));
    s / nn
}

/// `⨍_{B_{ρ/2}}|u − ū|²` against `ρ⁻¹F_ε(u, B_ρ)`, valid for `ε ≤ ε₁ρ`.
pub fn poincare_check<T: Real>(le: &LocalEnergy<'_, T>, x0: &[T; 3], rho: T, eps1: T) -> Result<InequalityCheck<T>> {
    let p = le.problem;
    if p.eps > eps1 * rho {
        return Err(Error::ResolutionMismatch(format!(
            "ε/ρ = {:.4} exceeds ε₁ = {:.4}",
            (p.eps / rho).as_f64(),
            eps1.as_f64()
        )));
    }
    let osc = mean_oscillation(le.field, &p.domain.ball_mask(x0, rho * T::lit(0.5)));
    let f = le.ball(x0, rho).total / rho;
    Ok(InequalityCheck::new(osc, f))
}
