use super::profile::RadialProfile;
use crate::linalg::sym_eigenvalues;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// `K(z) = f₁(|z|)·Id_m`.
    ScalarIsotropic,
    /// Frame-indifferent Q-tensor kernel (`m = 5`).
    NematicFrameIndifferent,
}

/// Kernel description: mode, radial profiles, and the decay data used for
/// finite-thickness boundary layers.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub mode: KernelMode,
    pub f1: RadialProfile<T>,
    pub f2: RadialProfile<T>,
    pub f3: RadialProfile<T>,
    pub m: usize,
    /// Decay exponent `q ≥ 2` for the layer-thickness rule.
    pub q: T,
    /// Layer thickness constant `τ`.
    pub tau: T,
}

/// Orthonormal basis of traceless symmetric 3×3 matrices (Frobenius product).
pub fn q_basis<T: Real>() -> [[[T; 3]; 3]; 5] {
    let a = 1.0 / 6f64.sqrt();
    let b = 1.0 / 2f64.sqrt();
    let raw = [
        [[-a, 0.0, 0.0], [0.0, -a, 0.0], [0.0, 0.0, 2.0 * a]],
        [[b, 0.0, 0.0], [0.0, -b, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, b, 0.0], [b, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, 0.0, b], [0.0, 0.0, 0.0], [b, 0.0, 0.0]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, b], [0.0, b, 0.0]],
    ];
    let mut out = [[[T::zero(); 3]; 3]; 5];
    for (o, r) in out.iter_mut().zip(raw.iter()) {
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] = T::lit(r[i][j]);
            }
        }
    }
    out
}

/// Coordinates of a traceless symmetric matrix in [`q_basis`].
pub fn q_coords<T: Real>(q: &[[T; 3]; 3]) -> [T; 5] {
    let e = q_basis::<T>();
    let mut c = [T::zero(); 5];
    for (a, ea) in e.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                c[a] = c[a] + ea[i][j] * q[i][j];
            }
        }
    }
    c
}

/// Traceless symmetric matrix from its coordinates.
pub fn q_matrix<T: Real>(c: &[T]) -> [[T; 3]; 3] {
    let e = q_basis::<T>();
    let mut q = [[T::zero(); 3]; 3];
    for (a, ea) in e.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                q[i][j] = q[i][j] + c[a] * ea[i][j];
            }
        }
    }
    q
}

fn mat3_vec<T: Real>(m: &[[T; 3]; 3], z: &[T; 3]) -> [T; 3] {
    [
        m[0][0] * z[0] + m[0][1] * z[1] + m[0][2] * z[2],
        m[1][0] * z[0] + m[1][1] * z[1] + m[1][2] * z[2],
        m[2][0] * z[0] + m[2][1] * z[1] + m[2][2] * z[2],
    ]
}

fn dot3<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl<T: Real> KernelSpec<T> {
    pub fn scalar(f1: RadialProfile<T>, m: usize) -> Self {
        KernelSpec {
            mode: KernelMode::ScalarIsotropic,
            f1,
            f2: RadialProfile::Zero,
            f3: RadialProfile::Zero,
            m,
            q: T::lit(2.0),
            tau: T::one(),
        }
    }

    pub fn nematic(f1: RadialProfile<T>, f2: RadialProfile<T>, f3: RadialProfile<T>) -> Self {
        KernelSpec {
            mode: KernelMode::NematicFrameIndifferent,
            f1,
            f2,
            f3,
            m: 5,
            q: T::lit(2.0),
            tau: T::one(),
        }
    }

    pub fn with_layer(mut self, q: T, tau: T) -> Self {
        self.q = q;
        self.tau = tau;
        self
    }

    pub fn profiles(&self) -> [&RadialProfile<T>; 3] {
        [&self.f1, &self.f2, &self.f3]
    }

    pub fn is_zero(&self) -> bool {
        match self.mode {
            KernelMode::ScalarIsotropic => self.f1.is_zero(),
            KernelMode::NematicFrameIndifferent => self.profiles().iter().all(|p| p.is_zero()),
        }
    }

    /// Whether `K(z)` is a multiple of the identity for every `z`.
    pub fn is_isotropic(&self) -> bool {
        self.mode == KernelMode::ScalarIsotropic || (self.f2.is_zero() && self.f3.is_zero())
    }

    /// Sorted union of profile breakpoints.
    pub fn breaks(&self) -> Vec<T> {
        let mut b: Vec<T> = Vec::new();
        for (_, p) in self.active_profiles() {
            b.extend(p.breaks());
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    /// Nonzero profiles paired with the homogeneity degree of their angular factor.
    pub fn active_profiles(&self) -> Vec<(i32, &RadialProfile<T>)> {
        let mut v = Vec::new();
        if !self.f1.is_zero() {
            v.push((0, &self.f1));
        }
        if self.mode == KernelMode::NematicFrameIndifferent {
            if !self.f2.is_zero() {
                v.push((2, &self.f2));
            }
            if !self.f3.is_zero() {
                v.push((4, &self.f3));
            }
        }
        v
    }

    /// Exponent of the slowest-decaying term of `‖K(z)‖` at large `|z|`, if any
    /// term has a power tail.
    pub fn tail_power(&self) -> Option<T> {
        self.active_profiles()
            .iter()
            .filter_map(|(deg, p)| p.tail_power().map(|e| e + T::from_usize_lossy(*deg as usize)))
            .fold(None, |acc: Option<T>, e| Some(acc.map_or(e, |a| a.max(e))))
    }

    /// Largest radius where `K` is nonzero, if bounded.
    pub fn support_radius(&self) -> Option<T> {
        if self.tail_power().is_some() {
            return None;
        }
        Some(self.breaks().last().copied().unwrap_or(T::zero()))
    }

    /// Scalar envelope `ν(r) ≥ ‖K(z)‖_op` for `|z| = r`.
    pub fn envelope(&self, r: T) -> T {
        let mut v = self.f1.value(r).fabs();
        if self.mode == KernelMode::NematicFrameIndifferent {
            v = v + T::lit(5.0 / 3.0) * r * r * self.f2.value(r).fabs()
                + T::lit(2.0 / 3.0) * r.powi(4) * self.f3.value(r).fabs();
        }
        v
    }

    /// Smallest feature length of the kernel and the cells demanded across it.
    pub fn resolution_demand(&self) -> Option<(T, usize)> {
        self.active_profiles()
            .iter()
            .filter_map(|(_, p)| p.resolution_demand())
            .fold(None, |acc: Option<(T, usize)>, (l, c)| match acc {
                None => Some((l, c)),
                Some((la, ca)) => {
                    if l / T::from_usize_lossy(c) < la / T::from_usize_lossy(ca) {
                        Some((l, c))
                    } else {
                        Some((la, ca))
                    }
                }
            })
    }
}

/// The two frame-indifferent angular matrices `(E_α z)·(E_β z)` and
/// `(zᵀE_α z)(zᵀE_β z)`, each row-major `5×5`.
pub fn frame_terms<T: Real>(z: &[T; 3]) -> (Vec<T>, Vec<T>) {
    let e = q_basis::<T>();
    let ez: Vec<[T; 3]> = e.iter().map(|ea| mat3_vec(ea, z)).collect();
    let zez: Vec<T> = ez.iter().map(|v| dot3(v, z)).collect();
    let mut g = vec![T::zero(); 25];
    let mut h = vec![T::zero(); 25];
    for a in 0..5 {
        for b in 0..5 {
            g[a * 5 + b] = dot3(&ez[a], &ez[b]);
            h[a * 5 + b] = zez[a] * zez[b];
        }
    }
    (g, h)
}

/// `K(z)` as a row-major `m×m` matrix.
pub fn evaluate_kernel<T: Real>(spec: &KernelSpec<T>, z: &[T; 3]) -> Vec<T> {
    let m = spec.m;
    let r = dot3(z, z).sqrt();
    let mut k = vec![T::zero(); m * m];
    let f1 = spec.f1.value(r);
    for a in 0..m {
        k[a * m + a] = f1;
    }
    if spec.mode == KernelMode::NematicFrameIndifferent {
        let f2 = spec.f2.value(r);
        let f3 = spec.f3.value(r);
        if f2 != T::zero() || f3 != T::zero() {
            let (g, h) = frame_terms(z);
            for ab in 0..25 {
                k[ab] = k[ab] + f2 * g[ab] + f3 * h[ab];
            }
        }
    }
    k
}

/// Gradient `∂_l K_αβ(z)` as `[l][α·m+β]`, away from jump spheres.
pub fn kernel_gradient<T: Real>(spec: &KernelSpec<T>, z: &[T; 3]) -> [Vec<T>; 3] {
    let m = spec.m;
    let r = dot3(z, z).sqrt();
    let mut g = [vec![T::zero(); m * m], vec![T::zero(); m * m], vec![T::zero(); m * m]];
    if r == T::zero() {
        return g;
    }
    let dir = [z[0] / r, z[1] / r, z[2] / r];
    let d1 = spec.f1.derivative(r);
    for (l, gl) in g.iter_mut().enumerate() {
        for a in 0..m {
            gl[a * m + a] = d1 * dir[l];
        }
    }
    if spec.mode == KernelMode::NematicFrameIndifferent {
        let (f2, d2) = (spec.f2.value(r), spec.f2.derivative(r));
        let (f3, d3) = (spec.f3.value(r), spec.f3.derivative(r));
        let e = q_basis::<T>();
        let ez: Vec<[T; 3]> = e.iter().map(|ea| mat3_vec(ea, z)).collect();
        let zez: Vec<T> = ez.iter().map(|v| dot3(v, z)).collect();
        for (l, gl) in g.iter_mut().enumerate() {
            for a in 0..5 {
                for b in 0..5 {
                    let gab = dot3(&ez[a], &ez[b]);
                    let dgab = e[a][0][l] * ez[b][0]
                        + e[a][1][l] * ez[b][1]
                        + e[a][2][l] * ez[b][2]
                        + ez[a][0] * e[b][0][l]
                        + ez[a][1] * e[b][1][l]
                        + ez[a][2] * e[b][2][l];
                    let hab = zez[a] * zez[b];
                    let two = T::lit(2.0);
                    let dhab = two * ez[a][l] * zez[b] + zez[a] * two * ez[b][l];
                    gl[a * 5 + b] = gl[a * 5 + b]
                        + d2 * dir[l] * gab
                        + f2 * dgab
                        + d3 * dir[l] * hab
                        + f3 * dhab;
                }
            }
        }
    }
    g
}

/// `g(z) = λ_min(K(z))`.
pub fn min_eigen_g<T: Real>(spec: &KernelSpec<T>, z: &[T; 3]) -> T {
    if spec.is_isotropic() {
        return spec.f1.value(dot3(z, z).sqrt());
    }
    sym_eigenvalues(&evaluate_kernel(spec, z), spec.m)[0]
}

/// `(λ_min, λ_max)` of `K(z)`.
pub fn eigen_range<T: Real>(spec: &KernelSpec<T>, z: &[T; 3]) -> (T, T) {
    if spec.is_isotropic() {
        let v = spec.f1.value(dot3(z, z).sqrt());
        return (v, v);
    }
    let w = sym_eigenvalues(&evaluate_kernel(spec, z), spec.m);
    (w[0], w[spec.m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nematic() -> KernelSpec<f64> {
        KernelSpec::nematic(
            RadialProfile::Gaussian { k: 1.0, a: 1.0 },
            RadialProfile::Gaussian { k: 0.4, a: 0.8 },
            RadialProfile::Gaussian { k: 0.2, a: 0.9 },
        )
    }

    #[test]
    fn basis_is_orthonormal() {
        let e = q_basis::<f64>();
        for a in 0..5 {
            for b in 0..5 {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += e[a][i][j] * e[b][i][j];
                    }
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-15);
            }
            let tr = e[a][0][0] + e[a][1][1] + e[a][2][2];
            assert!(tr.abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_gaussian_value() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Gaussian { k: 1.0, a: 0.5f64.sqrt() }, 2);
        let k = evaluate_kernel(&spec, &[1.0, 0.0, 0.0]);
        let e = (-1.0f64).exp();
        assert!((k[0] - e).abs() < 1e-15 && (k[3] - e).abs() < 1e-15);
        assert_eq!(k[1], 0.0);
    }

    #[test]
    fn evenness_is_bitwise() {
        let spec = nematic();
        let z = [0.31, -0.72, 0.45];
        let mz = [-0.31, 0.72, -0.45];
        assert_eq!(evaluate_kernel(&spec, &z), evaluate_kernel(&spec, &mz));
    }

    #[test]
    fn kernel_is_symmetric() {
        let k = evaluate_kernel(&nematic(), &[0.2, 0.9, -0.4]);
        for a in 0..5 {
            for b in 0..5 {
                assert_eq!(k[a * 5 + b], k[b * 5 + a]);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = nematic();
        let z = [0.4, -0.3, 0.7];
        let g = kernel_gradient(&spec, &z);
        let h = 1e-6;
        for l in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[l] += h;
            zm[l] -= h;
            let kp = evaluate_kernel(&spec, &zp);
            let km = evaluate_kernel(&spec, &zm);
            for i in 0..25 {
                let fd = (kp[i] - km[i]) / (2.0 * h);
                assert!((fd - g[l][i]).abs() < 1e-7, "l={l} i={i}");
            }
        }
    }

    #[test]
    fn annulus_g_values() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Annulus { k: 2.5, r1: 0.5, r2: 1.0 }, 2);
        assert_eq!(min_eigen_g(&spec, &[0.7, 0.0, 0.0]), 2.5);
        assert_eq!(min_eigen_g(&spec, &[0.0, 1.2, 0.0]), 0.0);
    }
}
