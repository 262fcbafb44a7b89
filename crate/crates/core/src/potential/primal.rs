use super::model::MicroModel;
use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::real::Real;

/// Direct minimisation of `Σ wᵢ fᵢ ln fᵢ` over `fᵢ > 0` with `Σ wᵢ fᵢ = 1` and
/// `Σ wᵢ fᵢ σᵢ = u`, by infeasible-start Newton on the equality-constrained
/// problem. Independent of the exponential-family closed form; used as an
/// oracle for the dual route.
pub fn primal_entropy_minimum<T: Real>(model: &MicroModel<T>, u: &[T]) -> Result<T> {
    let n = model.n_nodes();
    let m = model.m;
    let c: Vec<T> = std::iter::once(T::one()).chain(u.iter().copied()).collect();
    let k = m + 1;
    let row = |r: usize, i: usize| -> T {
        if r == 0 {
            model.weights[i]
        } else {
            model.weights[i] * model.sigma_at(i)[r - 1]
        }
    };
    let mut f = vec![T::one(); n];
    let resid = |f: &[T], nu: &[T]| -> T {
        // dual residual ∇φ + Aᵀν and primal residual Af − c
        let mut s = T::zero();
        for i in 0..n {
            let mut g = model.weights[i] * (f[i].ln() + T::one());
            for r in 0..k {
                g = g + row(r, i) * nu[r];
            }
            s = s + g * g;
        }
        for r in 0..k {
            let af = (0..n).fold(T::zero(), |a, i| a + row(r, i) * f[i]);
            s = s + (af - c[r]) * (af - c[r]);
        }
        s.sqrt()
    };
    let mut nu = vec![T::zero(); k];
    for _ in 0..200 {
        let grad: Vec<T> = (0..n).map(|i| model.weights[i] * (f[i].ln() + T::one())).collect();
        let dinv: Vec<T> = (0..n).map(|i| f[i] / model.weights[i]).collect();
        let rp: Vec<T> = (0..k).map(|r| c[r] - (0..n).fold(T::zero(), |a, i| a + row(r, i) * f[i])).collect();
        let mut s = vec![T::zero(); k * k];
        let mut rhs = vec![T::zero(); k];
        for r in 0..k {
            for q in 0..k {
                s[r * k + q] = (0..n).fold(T::zero(), |a, i| a + row(r, i) * dinv[i] * row(q, i));
            }
            rhs[r] = -(0..n).fold(T::zero(), |a, i| a + row(r, i) * dinv[i] * grad[i]) - rp[r];
        }
        let nu_new = lu_solve(&s, k, &rhs).ok_or_else(|| Error::InvalidInput("singular KKT system".into()))?;
        let df: Vec<T> = (0..n)
            .map(|i| {
                let at = (0..k).fold(T::zero(), |a, r| a + row(r, i) * nu_new[r]);
                -dinv[i] * (grad[i] + at)
            })
            .collect();
        let dnu: Vec<T> = (0..k).map(|r| nu_new[r] - nu[r]).collect();
        let r0 = resid(&f, &nu);
        let mut t = T::one();
        for i in 0..n {
            if df[i] < T::zero() {
                t = t.min(T::lit(0.99) * f[i] / -df[i]);
            }
        }
        loop {
            let ft: Vec<T> = (0..n).map(|i| f[i] + t * df[i]).collect();
            let nt: Vec<T> = (0..k).map(|r| nu[r] + t * dnu[r]).collect();
            if resid(&ft, &nt) <= (T::one() - T::lit(0.01) * t) * r0 || t < T::lit(1e-12) {
                f = ft;
                nu = nt;
                break;
            }
            t = t * T::lit(0.5);
        }
        if resid(&f, &nu) < T::lit(1e-13) {
            break;
        }
    }
    let primal_gap = (0..k).fold(T::zero(), |a, r| {
        let af = (0..n).fold(T::zero(), |s, i| s + row(r, i) * f[i]);
        a.max((af - c[r]).fabs())
    });
    if primal_gap > T::lit(1e-10) {
        return Err(Error::OutsideMomentDomain { dual_norm: f64::INFINITY, residual: primal_gap.as_f64() });
    }
    Ok((0..n).fold(T::zero(), |a, i| a + model.weights[i] * f[i] * f[i].ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::psi_s;

    #[test]
    fn uniform_density_at_zero() {
        let m = MicroModel::<f64>::default_circle();
        assert!(primal_entropy_minimum(&m, &[0.0, 0.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn agrees_with_dual() {
        let m = MicroModel::<f64>::default_circle();
        let u = [0.4, 0.0];
        let p = primal_entropy_minimum(&m, &u).unwrap();
        assert!((p - psi_s(&m, &u).unwrap()).abs() < 1e-10);
    }
}
