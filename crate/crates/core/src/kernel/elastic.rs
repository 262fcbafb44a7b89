use rand::Rng;

use super::assumptions::{check_assumptions, AnnulusParams};
use super::moments::{angular_factors, compute_moments_with, radial_integral, QuadratureConfig};
use super::spec::{q_basis, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::real::Real;
use crate::rng;

/// Fourth-order tensor `L_{ijαβ}` stored at `((i·3+j)·m+α)·m+β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticTensor<T> {
    pub m: usize,
    pub data: Vec<T>,
}

impl<T: Real> ElasticTensor<T> {
    pub fn zeros(m: usize) -> Self {
        ElasticTensor { m, data: vec![T::zero(); 9 * m * m] }
    }

    /// `λ δ_ij δ_αβ`.
    pub fn isotropic(m: usize, lambda: T) -> Self {
        let mut t = Self::zeros(m);
        for i in 0..3 {
            for a in 0..m {
                let idx = t.index(i, i, a, a);
                t.data[idx] = lambda;
            }
        }
        t
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        ((i * 3 + j) * self.m + a) * self.m + b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> T {
        self.data[self.index(i, j, a, b)]
    }

    /// `Lξ·ξ = Σ L_{ijαβ} ξ_{αi} ξ_{βj}` for `ξ` row-major `m×3`.
    pub fn contract(&self, xi: &[T]) -> T {
        self.bilinear(xi, xi)
    }

    pub fn bilinear(&self, xi: &[T], eta: &[T]) -> T {
        let m = self.m;
        let mut s = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..m {
                    let xa = xi[a * 3 + i];
                    if xa == T::zero() {
                        continue;
                    }
                    for b in 0..m {
                        s = s + self.get(i, j, a, b) * xa * eta[b * 3 + j];
                    }
                }
            }
        }
        s
    }

    /// `(Lξ)_{αi} = Σ_{jβ} L_{ijαβ} ξ_{βj}`.
    pub fn apply(&self, xi: &[T]) -> Vec<T> {
        let m = self.m;
        let mut out = vec![T::zero(); 3 * m];
        for i in 0..3 {
            for a in 0..m {
                let mut s = T::zero();
                for j in 0..3 {
                    for b in 0..m {
                        s = s + self.get(i, j, a, b) * xi[b * 3 + j];
                    }
                }
                out[a * 3 + i] = s;
            }
        }
        out
    }

    /// Quadratic form as a symmetric `3m×3m` matrix indexed by `(α·3+i)`.
    pub fn as_matrix(&self) -> Vec<T> {
        let m = self.m;
        let n = 3 * m;
        let mut out = vec![T::zero(); n * n];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..m {
                    for b in 0..m {
                        out[(a * 3 + i) * n + b * 3 + j] = self.get(i, j, a, b);
                    }
                }
            }
        }
        out
    }

    /// Extreme Rayleigh quotients over all `ξ` (exact eigenvalues).
    pub fn eigen_range(&self) -> (T, T) {
        let w = sym_eigenvalues(&self.as_matrix(), 3 * self.m);
        (w[0], w[w.len() - 1])
    }

    /// Averages `L_{ijαβ}` with `L_{jiβα}`.
    pub fn symmetrize(&mut self) {
        let m = self.m;
        let half = T::lit(0.5);
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..m {
                    for b in 0..m {
                        let p = self.index(i, j, a, b);
                        let q = self.index(j, i, b, a);
                        if p < q {
                            let s = (self.data[p] + self.data[q]) * half;
                            self.data[p] = s;
                            self.data[q] = s;
                        }
                    }
                }
            }
        }
    }

    /// `λ` if the tensor equals `λ δ_ij δ_αβ` to relative tolerance `tol`.
    pub fn isotropic_lambda(&self, tol: T) -> Option<T> {
        let lambda = self.get(0, 0, 0, 0);
        let iso = Self::isotropic(self.m, lambda);
        let scale = lambda.fabs().max(T::min_positive_value());
        let dev = self.data.iter().zip(&iso.data).fold(T::zero(), |d, (&x, &y)| d.max((x - y).fabs()));
        (dev <= tol * scale).then_some(lambda)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |d, (&x, &y)| d.max((x - y).fabs()))
    }
}

/// `L_{ijαβ} = ¼∫K_αβ(z) z_i z_j dz`.
pub fn elastic_tensor_with<T: Real>(spec: &KernelSpec<T>, cfg: &QuadratureConfig) -> Result<ElasticTensor<T>> {
    cfg.validate()?;
    let m = spec.m;
    let mut t = ElasticTensor::zeros(m);
    let factors = angular_factors(spec, cfg);
    let four_pi = T::lit(4.0) * T::PI();
    for ((deg, prof), (_, avg_pp)) in spec.active_profiles().iter().zip(&factors) {
        let d = *deg;
        let tail = prof.tail_power().map(|e| e + T::lit(4.0) + T::from_usize_lossy(d as usize));
        let rad = radial_integral(&prof.breaks(), tail, cfg, |r| prof.value(r) * r.powi(4 + d))?
            .ok_or_else(|| Error::PreconditionNotMet("second moment of the kernel diverges".into()))?
            .0;
        let c = T::lit(0.25) * four_pi * rad;
        for (x, &a) in t.data.iter_mut().zip(avg_pp) {
            *x = *x + c * a;
        }
    }
    t.symmetrize();
    Ok(t)
}

pub fn elastic_tensor<T: Real>(spec: &KernelSpec<T>) -> Result<ElasticTensor<T>> {
    elastic_tensor_with(spec, &QuadratureConfig::default())
}

/// Structural ellipticity constants together with measured Rayleigh quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityBounds<T> {
    pub annulus: Option<AnnulusParams<T>>,
    /// `kπ(ρ₂⁵−ρ₁⁵)/15`: annulus lower bound with the radial Jacobian.
    pub lower_annulus: T,
    /// `kπ(ρ₂³−ρ₁³)/9`: the constant obtained when the Jacobian `r²` is dropped.
    pub lower_published: T,
    /// Set when the dimensionally inconsistent constant differs from the corrected one.
    pub published_flagged: bool,
    /// `m2/12`, lower bound from the full `g` moment.
    pub lower_g_moment: T,
    /// `C·m2/12` with the measured `λ_max ≤ C g` constant.
    pub upper: T,
    pub rayleigh_min: T,
    pub rayleigh_max: T,
    /// Exact extremes of the quadratic form.
    pub eigen_min: T,
    pub eigen_max: T,
}

pub fn ellipticity_bounds<T: Real>(spec: &KernelSpec<T>) -> Result<EllipticityBounds<T>> {
    ellipticity_bounds_with(spec, &QuadratureConfig::default(), 100, 0)
}

pub fn ellipticity_bounds_with<T: Real>(
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
    n_random: usize,
    seed: u64,
) -> Result<EllipticityBounds<T>> {
    let report = check_assumptions(spec, cfg)?;
    let mo = compute_moments_with(spec, cfg)?;
    let l = elastic_tensor_with(spec, cfg)?;
    let pi = T::PI();
    let (lower_annulus, lower_published) = match report.annulus {
        Some(a) => (
            a.k * pi * (a.r2.powi(5) - a.r1.powi(5)) / T::lit(15.0),
            a.k * pi * (a.r2.powi(3) - a.r1.powi(3)) / T::lit(9.0),
        ),
        None => (T::zero(), T::zero()),
    };
    let mut rng = rng::stream(seed, "kernel.rayleigh");
    let mut rmin = T::infinity();
    let mut rmax = T::neg_infinity();
    let n = 3 * spec.m;
    for _ in 0..n_random {
        let xi: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        let nn = xi.iter().fold(T::zero(), |s, &x| s + x * x);
        let r = l.contract(&xi) / nn;
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let (emin, emax) = l.eigen_range();
    let tol = T::lit(1e-12) * emax.fabs().max(T::one());
    Ok(EllipticityBounds {
        annulus: report.annulus,
        lower_annulus,
        lower_published,
        published_flagged: (lower_published - lower_annulus).fabs() > tol,
        lower_g_moment: mo.m2 / T::lit(12.0),
        upper: report.k5_constant * mo.m2 / T::lit(12.0),
        rayleigh_min: rmin,
        rayleigh_max: rmax,
        eigen_min: emin,
        eigen_max: emax,
    })
}

/// Frank constants `(K₁, K₂, K₃)` from the Landau–de Gennes constants.
pub fn frank_constants<T: Real>(l1: T, l2: T, l3: T, s0: T) -> (T, T, T) {
    let s2 = s0 * s0;
    let two = T::lit(2.0);
    (s2 * (two * l1 + l2 + l3), two * s2 * l1, two * s2 * l1)
}

/// Basis tensors for `L₁|∇Q|² + L₂ ∂_jQ_ij∂_kQ_ik + L₃ ∂_kQ_ij∂_jQ_ik` in
/// Q-coordinates.
fn ldg_basis<T: Real>() -> [ElasticTensor<T>; 3] {
    let e = q_basis::<T>();
    let b1 = ElasticTensor::isotropic(5, T::one());
    let mut b2 = ElasticTensor::zeros(5);
    let mut b3 = ElasticTensor::zeros(5);
    for j in 0..3 {
        for k in 0..3 {
            for a in 0..5 {
                for b in 0..5 {
                    let s = (0..3).fold(T::zero(), |s, i| s + e[a][i][j] * e[b][i][k]);
                    let p = b2.index(j, k, a, b);
                    b2.data[p] = s;
                    let q = b3.index(k, j, a, b);
                    b3.data[q] = s;
                }
            }
        }
    }
    b3.symmetrize();
    b2.symmetrize();
    [b1, b2, b3]
}

/// Least-squares fit of a Q-tensor elastic tensor onto `(L₁, L₂, L₃)`;
/// returns the constants and the relative residual.
pub fn fit_ldg_constants<T: Real>(l: &ElasticTensor<T>) -> Result<([T; 3], T)> {
    if l.m != 5 {
        return Err(Error::InvalidInput("Landau–de Gennes fit needs m = 5".into()));
    }
    let basis = ldg_basis::<T>();
    let mut g = [T::zero(); 9];
    let mut rhs = [T::zero(); 3];
    for p in 0..3 {
        for q in 0..3 {
            g[p * 3 + q] = basis[p].data.iter().zip(&basis[q].data).fold(T::zero(), |s, (&x, &y)| s + x * y);
        }
        rhs[p] = basis[p].data.iter().zip(&l.data).fold(T::zero(), |s, (&x, &y)| s + x * y);
    }
    let c = crate::linalg::lu_solve(&g, 3, &rhs)
        .ok_or_else(|| Error::InvalidInput("degenerate elastic basis".into()))?;
    let mut res = T::zero();
    let mut nrm = T::zero();
    for idx in 0..l.data.len() {
        let fit = (0..3).fold(T::zero(), |s, p| s + c[p] * basis[p].data[idx]);
        res = res + (fit - l.data[idx]) * (fit - l.data[idx]);
        nrm = nrm + l.data[idx] * l.data[idx];
    }
    let rel = if nrm > T::zero() { (res / nrm).sqrt() } else { T::zero() };
    Ok(([c[0], c[1], c[2]], rel))
}

/// Lattice (midpoint) quadrature of `∫_{ρ₁<|z|<ρ₂} z₁² dz` at `n` cells per
/// unit length, next to the two closed-form candidates
/// `(4π/15)(ρ₂⁵−ρ₁⁵)` and `(4π/9)(ρ₂³−ρ₁³)`.
pub fn annulus_second_moment_check(r1: f64, r2: f64, n: usize) -> (f64, f64, f64) {
    let h = 1.0 / n as f64;
    let k = (r2 / h).ceil() as i64 + 1;
    let mut s = 0.0;
    for i in -k..k {
        let x = (i as f64 + 0.5) * h;
        for j in -k..k {
            let y = (j as f64 + 0.5) * h;
            for l in -k..k {
                let z = (l as f64 + 0.5) * h;
                let r = (x * x + y * y + z * z).sqrt();
                if r > r1 && r < r2 {
                    s += x * x;
                }
            }
        }
    }
    let pi = std::f64::consts::PI;
    (
        s * h * h * h,
        4.0 * pi / 15.0 * (r2.powi(5) - r1.powi(5)),
        4.0 * pi / 9.0 * (r2.powi(3) - r1.powi(3)),
    )
}

#[cfg(test)]
mod tests {
    use super::super::profile::RadialProfile;
    use super::*;

    #[test]
    fn frank_examples() {
        assert_eq!(frank_constants(1.0, 0.0, 0.0, 1.0), (2.0, 2.0, 2.0));
        assert_eq!(frank_constants(0.0, 0.0, 0.0, 0.7), (0.0, 0.0, 0.0));
        assert_eq!(frank_constants(1.0, 1.0, 1.0, 2.0), (16.0, 8.0, 8.0));
    }

    #[test]
    fn scalar_annulus_is_isotropic() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Annulus { k: 1.0, r1: 0.5, r2: 1.0 }, 2);
        let l = elastic_tensor(&spec).unwrap();
        let m2 = 4.0 * std::f64::consts::PI / 5.0 * (1.0 - 0.5f64.powi(5));
        let lam = l.isotropic_lambda(1e-12).unwrap();
        assert!((lam - m2 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn zero_kernel_zero_tensor() {
        let spec = KernelSpec::<f64>::scalar(RadialProfile::Zero, 2);
        assert!(elastic_tensor(&spec).unwrap().data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ldg_fit_recovers_single_constant() {
        let l = ElasticTensor::<f64>::isotropic(5, 0.3);
        let (c, res) = fit_ldg_constants(&l).unwrap();
        assert!((c[0] - 0.3).abs() < 1e-12 && c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn lattice_oracle_prefers_jacobian_constant() {
        let (lat, good, bad) = annulus_second_moment_check(0.5, 1.0, 40);
        assert!((lat - good).abs() / good < 0.02);
        assert!((lat - bad).abs() / bad > 0.2);
    }
}
