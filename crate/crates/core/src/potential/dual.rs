use super::model::MicroModel;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::real::Real;

/// Newton options for inverting `b ↦ ∇lnZ(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaConfig<T> {
    /// Largest admissible `|b|`; beyond it `u` counts as outside the moment set.
    pub cap: T,
    /// Target residual `|∇lnZ(b) − u|`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for LambdaConfig<T> {
    fn default() -> Self {
        LambdaConfig { cap: T::lit(50.0), tol: T::lit(1e-10).max(T::eps() * T::lit(64.0)), max_iter: 200 }
    }
}

/// Dual variable with its log partition value and moment.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState<T> {
    pub b: Vec<T>,
    pub ln_z: T,
    pub u: Vec<T>,
}

/// `lnZ`, `∇lnZ` and optionally `∇²lnZ` (row-major covariance) at `b`.
pub fn dual_eval<T: Real>(model: &MicroModel<T>, b: &[T], want_cov: bool) -> (T, Vec<T>, Option<Vec<T>>) {
    let m = model.m;
    let n = model.n_nodes();
    let mut shift = T::neg_infinity();
    for i in 0..n {
        let s = model.sigma_at(i);
        let a = (0..m).fold(T::zero(), |acc, k| acc + b[k] * s[k]);
        shift = shift.max(a);
    }
    let mut z = T::zero();
    let mut mom = vec![T::zero(); m];
    let mut sec = if want_cov { vec![T::zero(); m * m] } else { Vec::new() };
    for i in 0..n {
        let s = model.sigma_at(i);
        let a = (0..m).fold(T::zero(), |acc, k| acc + b[k] * s[k]);
        let e = model.weights[i] * (a - shift).exp();
        z = z + e;
        for k in 0..m {
            mom[k] = mom[k] + e * s[k];
        }
        if want_cov {
            for k in 0..m {
                let ek = e * s[k];
                for l in k..m {
                    sec[k * m + l] = sec[k * m + l] + ek * s[l];
                }
            }
        }
    }
    let ln_z = shift + z.ln();
    let u: Vec<T> = mom.iter().map(|&x| x / z).collect();
    let cov = want_cov.then(|| {
        let mut c = vec![T::zero(); m * m];
        for k in 0..m {
            for l in k..m {
                let v = sec[k * m + l] / z - u[k] * u[l];
                c[k * m + l] = v;
                c[l * m + k] = v;
            }
        }
        c
    });
    (ln_z, u, cov)
}

/// `lnZ(b) = ln Σ wᵢ exp(b·σᵢ)`.
pub fn log_partition<T: Real>(model: &MicroModel<T>, b: &[T]) -> T {
    dual_eval(model, b, false).0
}

/// `∇lnZ(b)`, the moment of the exponential-family density with multiplier `b`.
pub fn lambda_inverse<T: Real>(model: &MicroModel<T>, b: &[T]) -> Vec<T> {
    dual_eval(model, b, false).1
}

/// Covariance `∇²lnZ(b)`.
pub fn covariance<T: Real>(model: &MicroModel<T>, b: &[T]) -> Vec<T> {
    dual_eval(model, b, true).2.unwrap()
}

/// `Λ(u)`: the `b` with `∇lnZ(b) = u`, from `b = 0`.
pub fn lambda<T: Real>(model: &MicroModel<T>, u: &[T]) -> Result<Vec<T>> {
    lambda_from(model, u, &vec![T::zero(); model.m], &LambdaConfig::default()).map(|s| s.b)
}

/// Damped Newton on the convex dual `lnZ(b) − b·u`, starting at `b0`.
pub fn lambda_from<T: Real>(
    model: &MicroModel<T>,
    u: &[T],
    b0: &[T],
    cfg: &LambdaConfig<T>,
) -> Result<DualState<T>> {
    let m = model.m;
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutsideMomentDomain { dual_norm: f64::INFINITY, residual: f64::INFINITY });
    }
    let mut b = b0.to_vec();
    let norm = |v: &[T]| v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let (mut ln_z, mut mu, mut cov) = dual_eval(model, &b, true);
    let mut phi = ln_z - (0..m).fold(T::zero(), |s, k| s + b[k] * u[k]);
    let mut polished = false;
    for _ in 0..cfg.max_iter {
        let grad: Vec<T> = (0..m).map(|k| mu[k] - u[k]).collect();
        let res = norm(&grad);
        if res <= cfg.tol {
            if polished {
                return Ok(DualState { b, ln_z, u: mu });
            }
            polished = true;
        }
        let mut c = cov.take().unwrap();
        let mut l = cholesky(&c, m);
        let mut bump = T::lit(1e-14);
        while l.is_none() {
            for k in 0..m {
                c[k * m + k] = c[k * m + k] + bump;
            }
            bump = bump * T::lit(10.0);
            l = cholesky(&c, m);
            if bump > T::one() {
                break;
            }
        }
        let l = l.ok_or(Error::OutsideMomentDomain { dual_norm: norm(&b).as_f64(), residual: res.as_f64() })?;
        let step = cholesky_solve(&l, m, &grad);
        let slope = -(0..m).fold(T::zero(), |s, k| s + step[k] * grad[k]);
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = (0..m).map(|k| b[k] - t * step[k]).collect();
            let (lz, mu_t, cov_t) = dual_eval(model, &trial, true);
            let phi_t = lz - (0..m).fold(T::zero(), |s, k| s + trial[k] * u[k]);
            // near the root the objective decrease is below round-off; there the
            // gradient norm is the reliable merit function
            let res_t = norm(&(0..m).map(|k| mu_t[k] - u[k]).collect::<Vec<_>>());
            let ok = phi_t <= phi + T::lit(1e-4) * t * slope
                || (res < T::lit(1e-6) && res_t < res)
                || (polished && phi_t <= phi + phi.fabs() * T::eps() * T::lit(16.0));
            if ok {
                b = trial;
                ln_z = lz;
                mu = mu_t;
                cov = cov_t;
                phi = phi_t;
                accepted = true;
                break;
            }
            t = t * T::lit(0.5);
        }
        if norm(&b) > cfg.cap {
            return Err(Error::OutsideMomentDomain { dual_norm: norm(&b).as_f64(), residual: res.as_f64() });
        }
        if !accepted {
            let grad: Vec<T> = (0..m).map(|k| mu[k] - u[k]).collect();
            let res = norm(&grad);
            if res <= cfg.tol {
                return Ok(DualState { b, ln_z, u: mu });
            }
            return Err(Error::OutsideMomentDomain { dual_norm: norm(&b).as_f64(), residual: res.as_f64() });
        }
        if cov.is_none() {
            cov = Some(dual_eval(model, &b, true).2.unwrap());
        }
    }
    let res = norm(&(0..m).map(|k| mu[k] - u[k]).collect::<Vec<_>>());
    if res <= cfg.tol {
        return Ok(DualState { b, ln_z, u: mu });
    }
    Err(Error::OutsideMomentDomain { dual_norm: norm(&b).as_f64(), residual: res.as_f64() })
}

/// `ψ_s(u) = b·u − lnZ(b)` at `b = Λ(u)`.
pub fn psi_s<T: Real>(model: &MicroModel<T>, u: &[T]) -> Result<T> {
    let st = lambda_from(model, u, &vec![T::zero(); model.m], &LambdaConfig::default())?;
    Ok(legendre_value(&st.b, u, st.ln_z))
}

/// `b·u − lnZ`, clamped at zero against round-off.
pub(crate) fn legendre_value<T: Real>(b: &[T], u: &[T], ln_z: T) -> T {
    let v = b.iter().zip(u).fold(T::zero(), |s, (&x, &y)| s + x * y) - ln_z;
    v.max(T::zero())
}

/// Density `fᵢ = exp(b·σᵢ)/Z` of the entropy minimiser with moment `u`.
pub fn minimal_distribution<T: Real>(model: &MicroModel<T>, u: &[T]) -> Result<Vec<T>> {
    let st = lambda_from(model, u, &vec![T::zero(); model.m], &LambdaConfig::default())?;
    Ok((0..model.n_nodes())
        .map(|i| {
            let a = model.sigma_at(i).iter().zip(&st.b).fold(T::zero(), |s, (&x, &y)| s + x * y);
            (a - st.ln_z).exp()
        })
        .collect())
}

/// Relative entropy `Σ wᵢ fᵢ ln fᵢ`.
pub fn entropy<T: Real>(model: &MicroModel<T>, f: &[T]) -> T {
    f.iter()
        .zip(&model.weights)
        .fold(T::zero(), |s, (&fi, &w)| if fi > T::zero() { s + w * fi * fi.ln() } else { s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_multiplier() {
        let c = MicroModel::<f64>::default_circle();
        assert!(log_partition(&c, &[0.0, 0.0]).abs() < 1e-15);
        assert!(lambda_inverse(&c, &[0.0, 0.0]).iter().all(|x| x.abs() < 1e-15));
        assert!(lambda(&c, &[0.0, 0.0]).unwrap().iter().all(|x| x.abs() < 1e-14));
        assert!(psi_s(&c, &[0.0, 0.0]).unwrap() < 1e-15);
        let f = minimal_distribution(&c, &[0.0, 0.0]).unwrap();
        assert!(f.iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn near_boundary_is_rejected() {
        let c = MicroModel::<f64>::default_circle();
        let err = lambda(&c, &[0.999, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutsideMomentDomain { .. }));
        assert!(lambda(&c, &[1.2, 0.0]).is_err());
    }

    #[test]
    fn blow_up_is_monotone() {
        let s = MicroModel::<f64>::default_sphere();
        let e = crate::potential::model::sphere_sigma(&[0.0, 0.0, 1.0]);
        let mut last = 0.0;
        for t in [0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95] {
            let u: Vec<f64> = e.iter().map(|x| t * x).collect();
            let b = lambda(&s, &u).unwrap();
            let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(n > last);
            last = n;
        }
    }

    #[test]
    fn entropy_equals_potential() {
        let c = MicroModel::<f64>::default_circle();
        let u = [0.3, -0.4];
        let f = minimal_distribution(&c, &u).unwrap();
        assert!((entropy(&c, &f) - psi_s(&c, &u).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn roundtrip_circle(b0 in -3.5f64..3.5, b1 in -3.5f64..3.5) {
            let c = MicroModel::<f64>::default_circle();
            let u = lambda_inverse(&c, &[b0, b1]);
            let b = lambda(&c, &u).unwrap();
            prop_assert!((b[0] - b0).abs() < 1e-8 && (b[1] - b1).abs() < 1e-8);
        }

        #[test]
        fn psi_s_convex(a in -0.7f64..0.7, b in -0.7f64..0.7, c in -0.7f64..0.7, d in -0.7f64..0.7) {
            prop_assume!(a * a + b * b < 0.81 && c * c + d * d < 0.81);
            let m = MicroModel::<f64>::default_circle();
            let mid = [(a + c) / 2.0, (b + d) / 2.0];
            let lhs = psi_s(&m, &mid).unwrap();
            let rhs = 0.5 * (psi_s(&m, &[a, b]).unwrap() + psi_s(&m, &[c, d]).unwrap());
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
