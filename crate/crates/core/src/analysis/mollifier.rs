use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Domain;
use crate::kernel::{detect_annulus, min_eigen_g, AnnulusParams, KernelSpec};
use crate::real::Real;

/// Radial bump supported in the shell `ρ₁ < |y| < ρ₂`, rescaled to
/// `φ_ε(z) = ε⁻³φ(z/ε)` and normalised on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier<T> {
    pub r1: T,
    pub r2: T,
    pub eps: T,
    pub h: T,
    /// Lattice offsets with weights `φ_ε(z)h³`, summing to one.
    pub weights: Vec<([isize; 3], T)>,
    /// Measured `max (φ_ε + ε|∇φ_ε|)/g_ε` over the support.
    pub domination: T,
}

/// `exp(−1/(1−t²))` on `|t| < 1` and its derivative.
fn bump<T: Real>(t: T) -> (T, T) {
    let s = T::one() - t * t;
    if s <= T::zero() {
        return (T::zero(), T::zero());
    }
    let v = (-T::one() / s).exp();
    (v, v * (-T::lit(2.0) * t / (s * s)))
}

impl<T: Real> Mollifier<T> {
    /// `φ(y)` and `|∇φ(y)|` before normalisation.
    fn profile(&self, r: T) -> (T, T) {
        let c = (self.r1 + self.r2) * T::lit(0.5);
        let w = (self.r2 - self.r1) * T::lit(0.5);
        let (v, d) = bump((r - c) / w);
        (v, (d / w).fabs())
    }

    pub fn mass(&self) -> T {
        self.weights.iter().fold(T::zero(), |s, w| s + w.1)
    }

    /// `(φ_ε ∗ u)(x)` at the listed cells; offsets leaving the box are skipped.
    pub fn apply_at(&self, domain: &Domain<T>, u: &[T], m: usize, cells: &[usize]) -> Vec<Vec<T>> {
        let [n0, n1, n2] = domain.dims;
        cells
            .par_iter()
            .map(|&x| {
                let [i, j, k] = domain.ijk(x);
                let mut acc = vec![T::zero(); m];
                for (z, w) in &self.weights {
                    let (a, b, c) = (i as isize + z[0], j as isize + z[1], k as isize + z[2]);
                    if a < 0 || b < 0 || c < 0 || a >= n0 as isize || b >= n1 as isize || c >= n2 as isize {
                        continue;
                    }
                    let y = ((a as usize) * n1 + b as usize) * n2 + c as usize;
                    for q in 0..m {
                        acc[q] = acc[q] + *w * u[y * m + q];
                    }
                }
                acc
            })
            .collect()
    }

    /// `Σ_z w_z(u(x+z) − u(x)) = (φ_ε∗u − u)(x)` for unit lattice mass; exact zero on constants.
    pub fn deviation_at(&self, domain: &Domain<T>, u: &[T], m: usize, cells: &[usize]) -> Vec<Vec<T>> {
        let [n0, n1, n2] = domain.dims;
        cells
            .par_iter()
            .map(|&x| {
                let [i, j, k] = domain.ijk(x);
                let mut acc = vec![T::zero(); m];
                for (z, w) in &self.weights {
                    let (a, b, c) = (i as isize + z[0], j as isize + z[1], k as isize + z[2]);
                    if a < 0 || b < 0 || c < 0 || a >= n0 as isize || b >= n1 as isize || c >= n2 as isize {
                        continue;
                    }
                    let y = ((a as usize) * n1 + b as usize) * n2 + c as usize;
                    for q in 0..m {
                        acc[q] = acc[q] + *w * (u[y * m + q] - u[x * m + q]);
                    }
                }
                acc
            })
            .collect()
    }

    /// Physical support radius `ρ₂ε`.
    pub fn reach(&self) -> T {
        self.r2 * self.eps
    }
}

/// Builds the mollifier on the annulus detected in `spec`.
pub fn build_mollifier<T: Real>(spec: &KernelSpec<T>, eps: T, h: T) -> Result<Mollifier<T>> {
    let a = detect_annulus(spec).ok_or_else(|| Error::PreconditionNotMet("kernel has no positive annulus".into()))?;
    build_mollifier_on(spec, a, eps, h)
}

/// Builds the mollifier on an explicit shell; the domination constant is
/// measured against `g` of `spec`.
pub fn build_mollifier_on<T: Real>(spec: &KernelSpec<T>, a: AnnulusParams<T>, eps: T, h: T) -> Result<Mollifier<T>> {
    if !(eps > T::zero() && h > T::zero()) {
        return Err(Error::InvalidInput("mollifier needs ε > 0 and h > 0".into()));
    }
    if (a.r2 - a.r1) * eps < T::lit(2.0) * h {
        return Err(Error::ResolutionMismatch(format!(
            "mollifier shell width {:.4} is below two cells ({:.4})",
            ((a.r2 - a.r1) * eps).as_f64(),
            (T::lit(2.0) * h).as_f64()
        )));
    }
    let mut mo = Mollifier { r1: a.r1, r2: a.r2, eps, h, weights: Vec::new(), domination: T::zero() };
    let n = (a.r2 * eps / h).ceil().as_f64() as isize;
    let mut raw = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let z = [T::lit(i as f64) * h, T::lit(j as f64) * h, T::lit(k as f64) * h];
                let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt() / eps;
                let (v, d) = mo.profile(r);
                if v > T::zero() {
                    raw.push(([i, j, k], v, d, [z[0] / eps, z[1] / eps, z[2] / eps]));
                }
            }
        }
    }
    let total = raw.iter().fold(T::zero(), |s, r| s + r.1);
    // lattice normalisation: Σ φ_ε h³ = 1 ⇔ φ_ε = c·bump with c = 1/(h³Σbump)
    let c = T::one() / (total * h * h * h);
    let mut dom = T::zero();
    for (z, v, d, y) in &raw {
        mo.weights.push((*z, *v / total));
        // φ_ε + ε|∇φ_ε| = ε⁻³(φ + |∇φ|)(y) and g_ε = ε⁻³g(y); the ε⁻³ cancels
        let phi = c * *v * eps * eps * eps;
        let grad = c * *d * eps * eps * eps;
        let g = min_eigen_g(spec, y);
        dom = dom.max(if g > T::zero() { (phi + grad) / g } else { T::infinity() });
    }
    mo.domination = dom;
    Ok(mo)
}
