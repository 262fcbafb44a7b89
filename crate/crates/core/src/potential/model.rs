use crate::kernel::{q_coords, q_matrix};
use crate::linalg::sym_eigen;
use crate::quadrature::SphereRule;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// Planar molecules: `σ(θ) = (cos 2θ, sin 2θ)`, `m = 2`.
    Circle,
    /// Rod-like molecules in 3D: `σ(p)` = coordinates of `p⊗p − I/3`, `m = 5`.
    Sphere,
}

/// Molecular manifold with a probability quadrature and order-parameter samples.
#[derive(Debug, Clone)]
pub struct MicroModel<T> {
    pub manifold: Manifold,
    pub m: usize,
    pub weights: Vec<T>,
    /// Node-major `σ(pᵢ)`, `m` entries per node.
    pub sigma: Vec<T>,
    pub sigma_max: T,
}

pub const CIRCLE_NODES: usize = 256;
pub const SPHERE_THETA: usize = 16;
pub const SPHERE_PHI: usize = 32;

/// Order parameter of a planar molecule at angle `θ`.
pub fn circle_sigma<T: Real>(theta: T) -> [T; 2] {
    let two = T::lit(2.0);
    [(two * theta).cos(), (two * theta).sin()]
}

/// Order parameter of a rod along the unit vector `p`.
pub fn sphere_sigma<T: Real>(p: &[T; 3]) -> [T; 5] {
    let third = T::one() / T::lit(3.0);
    let mut q = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            q[i][j] = p[i] * p[j] - if i == j { third } else { T::zero() };
        }
    }
    q_coords(&q)
}

impl<T: Real> MicroModel<T> {
    pub fn circle(n: usize) -> Self {
        let mut sigma = Vec::with_capacity(2 * n);
        for i in 0..n {
            let th = T::lit(2.0 * std::f64::consts::PI * i as f64 / n as f64);
            sigma.extend(circle_sigma(th));
        }
        MicroModel {
            manifold: Manifold::Circle,
            m: 2,
            weights: vec![T::one() / T::from_usize_lossy(n); n],
            sigma,
            sigma_max: T::one(),
        }
    }

    pub fn sphere(n_theta: usize, n_phi: usize) -> Self {
        let rule = SphereRule::<T>::product(n_theta, n_phi);
        let mut sigma = Vec::with_capacity(5 * rule.len());
        for p in &rule.points {
            sigma.extend(sphere_sigma(p));
        }
        MicroModel {
            manifold: Manifold::Sphere,
            m: 5,
            weights: rule.weights,
            sigma,
            sigma_max: T::lit(2.0 / 3.0).sqrt(),
        }
    }

    /// 256-node circle model.
    pub fn default_circle() -> Self {
        Self::circle(CIRCLE_NODES)
    }

    /// 512-node product-rule sphere model.
    pub fn default_sphere() -> Self {
        Self::sphere(SPHERE_THETA, SPHERE_PHI)
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn sigma_at(&self, i: usize) -> &[T] {
        &self.sigma[i * self.m..(i + 1) * self.m]
    }

    /// `Σ wᵢσᵢ`.
    pub fn mean_sigma(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.m];
        for (i, &w) in self.weights.iter().enumerate() {
            for (a, &x) in self.sigma_at(i).iter().enumerate() {
                s[a] = s[a] + w * x;
            }
        }
        s
    }

    /// Euclidean distance from `u` to the boundary of the moment set
    /// (negative outside).
    pub fn dist_to_boundary(&self, u: &[T]) -> T {
        match self.manifold {
            Manifold::Circle => T::one() - (u[0] * u[0] + u[1] * u[1]).sqrt(),
            Manifold::Sphere => {
                let q = q_matrix(u);
                let flat: Vec<T> = q.iter().flat_map(|r| r.iter().copied()).collect();
                let (w, _) = sym_eigen(&flat, 3);
                (w[0] + T::one() / T::lit(3.0)) * T::lit(1.5).sqrt()
            }
        }
    }

    /// Rotation generators acting on order parameters at `u`: tangent vectors
    /// of the symmetry orbit through `u`.
    pub fn orbit_tangents(&self, u: &[T]) -> Vec<Vec<T>> {
        match self.manifold {
            Manifold::Circle => vec![vec![-u[1], u[0]]],
            Manifold::Sphere => {
                let q = q_matrix(u);
                let mut out = Vec::new();
                for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
                    let mut w = [[T::zero(); 3]; 3];
                    w[a][b] = T::one();
                    w[b][a] = -T::one();
                    // δQ = WQ − QW
                    let mut d = [[T::zero(); 3]; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            let mut s = T::zero();
                            for k in 0..3 {
                                s = s + w[i][k] * q[k][j] - q[i][k] * w[k][j];
                            }
                            d[i][j] = s;
                        }
                    }
                    out.push(q_coords(&d).to_vec());
                }
                out
            }
        }
    }

    /// Applies the symmetry with parameter `angle` about axis `axis` (ignored on
    /// the circle) to an order parameter.
    pub fn rotate(&self, u: &[T], angle: T, axis: usize) -> Vec<T> {
        match self.manifold {
            Manifold::Circle => {
                // molecule rotation by θ turns σ by 2θ
                let (s, c) = (T::lit(2.0) * angle).sin_cos();
                vec![c * u[0] - s * u[1], s * u[0] + c * u[1]]
            }
            Manifold::Sphere => {
                let (s, c) = angle.sin_cos();
                let (a, b) = match axis % 3 {
                    0 => (1, 2),
                    1 => (2, 0),
                    _ => (0, 1),
                };
                let mut r = [[T::zero(); 3]; 3];
                for (i, row) in r.iter_mut().enumerate() {
                    row[i] = T::one();
                }
                r[a][a] = c;
                r[b][b] = c;
                r[a][b] = -s;
                r[b][a] = s;
                let q = q_matrix(u);
                let mut out = [[T::zero(); 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut acc = T::zero();
                        for k in 0..3 {
                            for l in 0..3 {
                                acc = acc + r[i][k] * q[k][l] * r[j][l];
                            }
                        }
                        out[i][j] = acc;
                    }
                }
                q_coords(&out).to_vec()
            }
        }
    }
}
