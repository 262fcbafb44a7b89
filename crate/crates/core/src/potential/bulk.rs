use rand::Rng;

use super::dual::{dual_eval, lambda_from, legendre_value, DualState, LambdaConfig};
use super::model::{sphere_sigma, Manifold, MicroModel};
use crate::error::{Error, Result};
use crate::kernel::q_matrix;
use crate::linalg::{lu_solve, spd_inverse, sym_eigen, sym_eigenvalues};
use crate::real::Real;
use crate::rng;

/// Zero set of the bulk potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Vacuum<T> {
    /// A single point (convex regime: the origin).
    Point(Vec<T>),
    /// Circle `|u| = radius` (planar model, isotropic interaction).
    Circle { radius: T },
    /// Uniaxial orbit `{S·σ(n) : n ∈ S²}` with signed scalar order `S`.
    Uniaxial { order: T, sigma_max: T },
    /// Finitely many minimisers (anisotropic interaction).
    Discrete(Vec<Vec<T>>),
}

impl<T: Real> Vacuum<T> {
    /// `|u|` for `u` on the vacuum set (largest over a discrete set).
    pub fn radius(&self) -> T {
        let n = |v: &[T]| v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        match self {
            Vacuum::Point(p) => n(p),
            Vacuum::Circle { radius } => *radius,
            Vacuum::Uniaxial { order, sigma_max } => order.fabs() * *sigma_max,
            Vacuum::Discrete(pts) => pts.iter().fold(T::zero(), |a, p| a.max(n(p))),
        }
    }

    /// Manifold dimension of the vacuum set.
    pub fn dimension(&self) -> usize {
        match self {
            Vacuum::Circle { radius } if *radius > T::zero() => 1,
            Vacuum::Uniaxial { order, .. } if *order != T::zero() => 2,
            _ => 0,
        }
    }

    pub fn representative(&self, m: usize) -> Vec<T> {
        match self {
            Vacuum::Point(p) => p.clone(),
            Vacuum::Circle { radius } => {
                let mut v = vec![T::zero(); m];
                v[0] = *radius;
                v
            }
            Vacuum::Uniaxial { order, .. } => {
                sphere_sigma(&[T::zero(), T::zero(), T::one()]).iter().map(|&x| x * *order).collect()
            }
            Vacuum::Discrete(pts) => pts[0].clone(),
        }
    }

    /// Closest vacuum point to `u`.
    pub fn project(&self, u: &[T]) -> Vec<T> {
        match self {
            Vacuum::Point(p) => p.clone(),
            Vacuum::Circle { radius } => {
                let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
                if n == T::zero() {
                    vec![*radius, T::zero()]
                } else {
                    vec![*radius * u[0] / n, *radius * u[1] / n]
                }
            }
            Vacuum::Uniaxial { order, .. } => {
                let q = q_matrix(u);
                let flat: Vec<T> = q.iter().flat_map(|r| r.iter().copied()).collect();
                let (_, v) = sym_eigen(&flat, 3);
                // prolate order aligns with the top eigenvector, oblate with the bottom one
                let col = if *order >= T::zero() { 2 } else { 0 };
                let n = [v[col], v[3 + col], v[6 + col]];
                sphere_sigma(&n).iter().map(|&x| x * *order).collect()
            }
            Vacuum::Discrete(pts) => {
                let d = |p: &Vec<T>| p.iter().zip(u).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
                pts.iter()
                    .min_by(|a, b| d(a).partial_cmp(&d(b)).unwrap())
                    .cloned()
                    .unwrap()
            }
        }
    }

    pub fn distance(&self, u: &[T]) -> T {
        let p = self.project(u);
        p.iter().zip(u).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkConfig<T> {
    /// Grid points for the radial critical-point scan.
    pub scan_points: usize,
    /// Transverse curvature below this flags a degenerate vacuum.
    pub degeneracy_tol: T,
    pub lambda: LambdaConfig<T>,
}

impl<T: Real> Default for BulkConfig<T> {
    fn default() -> Self {
        BulkConfig { scan_points: 4000, degeneracy_tol: T::lit(1e-8), lambda: LambdaConfig::default() }
    }
}

/// `ψ_b(u) = ψ_s(u) − ½(∫K)u·u + c₀` with its vacuum data.
#[derive(Debug, Clone)]
pub struct BulkPotential<T> {
    pub model: MicroModel<T>,
    /// Row-major `m×m` interaction matrix.
    pub int_k: Vec<T>,
    pub c0: T,
    /// Radius `|u|` of the vacuum set.
    pub s0: T,
    pub vacuum: Vacuum<T>,
    /// Smallest curvature of `ψ_b` normal to the vacuum set.
    pub transverse_curvature: T,
    pub degenerate: bool,
    /// `κ` when `∫K = κ·Id`.
    pub kappa: Option<T>,
    pub lambda_cfg: LambdaConfig<T>,
}

fn isotropic_factor<T: Real>(a: &[T], m: usize) -> Option<T> {
    let k = a[0];
    let scale = a.iter().fold(T::zero(), |s, &x| s.max(x.fabs())).max(T::min_positive_value());
    for i in 0..m {
        for j in 0..m {
            let want = if i == j { k } else { T::zero() };
            if (a[i * m + j] - want).fabs() > T::lit(1e-12) * scale {
                return None;
            }
        }
    }
    Some(k)
}

/// Critical points of the radial profile `β ↦ β − κ G(β)`, `G(β) = e·∇lnZ(βe)`.
fn radial_candidates<T: Real>(model: &MicroModel<T>, dir: &[T], kappa: T, cap: T, n: usize, signed: bool) -> Vec<(T, T)> {
    let g = |beta: T| -> (T, T) {
        let b: Vec<T> = dir.iter().map(|&x| x * beta).collect();
        let (lz, u, _) = dual_eval(model, &b, false);
        (dir.iter().zip(&u).fold(T::zero(), |s, (&a, &c)| s + a * c), lz)
    };
    let f = |beta: T| beta - kappa * g(beta).0;
    let mut out = vec![(T::zero(), T::zero())];
    let sides: &[T] = if signed { &[T::one(), -T::one()] } else { &[T::one()] };
    for &side in sides {
        let grid: Vec<T> = (1..=n)
            .map(|j| {
                let t = T::from_usize_lossy(j) / T::from_usize_lossy(n);
                side * cap * t * t
            })
            .collect();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (f(a), f(b));
            if fa == T::zero() || (fa > T::zero()) != (fb > T::zero()) {
                let (mut lo, mut hi, flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if (f(mid) > T::zero()) == (flo > T::zero()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let beta = (lo + hi) * T::lit(0.5);
                if beta.fabs() < T::lit(1e-6) {
                    continue;
                }
                let (s, lz) = g(beta);
                // ψ_s(s e) = βs − lnZ(βe) at the matched pair
                let h = beta * s - lz - T::lit(0.5) * kappa * s * s;
                out.push((s, h));
            }
        }
    }
    out
}

/// Normalising constant, vacuum radius and vacuum set of `ψ_b`.
pub fn compute_c0_and_nn<T: Real>(
    model: &MicroModel<T>,
    int_k: &[T],
    cfg: &BulkConfig<T>,
) -> Result<BulkPotential<T>> {
    let m = model.m;
    if int_k.len() != m * m {
        return Err(Error::InvalidInput(format!("interaction matrix must be {m}x{m}")));
    }
    let kappa = isotropic_factor(int_k, m);
    let (c0, vacuum) = match kappa {
        Some(k) => {
            let (dir, signed) = match model.manifold {
                Manifold::Circle => (vec![T::one(), T::zero()], false),
                Manifold::Sphere => {
                    let e = sphere_sigma(&[T::zero(), T::zero(), T::one()]);
                    let n = model.sigma_max;
                    (e.iter().map(|&x| x / n).collect::<Vec<_>>(), true)
                }
            };
            let cands = radial_candidates(model, &dir, k, cfg.lambda.cap, cfg.scan_points, signed);
            // ordered states must beat the isotropic one by more than round-off
            let floor = -T::lit(1e-13) * (T::one() + k.fabs());
            let (s, h) = cands
                .iter()
                .copied()
                .filter(|c| c.1 < floor)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap_or((T::zero(), T::zero()));
            let vac = if s == T::zero() {
                Vacuum::Point(vec![T::zero(); m])
            } else {
                match model.manifold {
                    Manifold::Circle => Vacuum::Circle { radius: s.fabs() },
                    Manifold::Sphere => Vacuum::Uniaxial { order: s / model.sigma_max, sigma_max: model.sigma_max },
                }
            };
            (-h.min(T::zero()), vac)
        }
        None => general_minimum(model, int_k, cfg)?,
    };
    let mut bulk = BulkPotential {
        model: model.clone(),
        int_k: int_k.to_vec(),
        c0,
        s0: vacuum.radius(),
        vacuum,
        transverse_curvature: T::zero(),
        degenerate: false,
        kappa,
        lambda_cfg: cfg.lambda,
    };
    bulk.transverse_curvature = bulk.transverse_curvature_at(&bulk.vacuum.representative(m))?;
    bulk.degenerate = bulk.transverse_curvature < cfg.degeneracy_tol;
    Ok(bulk)
}

/// Multi-start Newton on `b = (∫K)∇lnZ(b)` for anisotropic interactions.
fn general_minimum<T: Real>(model: &MicroModel<T>, int_k: &[T], cfg: &BulkConfig<T>) -> Result<(T, Vacuum<T>)> {
    let m = model.m;
    let mut rng = rng::stream(0, "potential.vacuum");
    let mut best: Vec<(T, Vec<T>)> = vec![(T::zero(), vec![T::zero(); m])];
    let n_dirs = if m == 2 { 16 } else { 40 };
    for d in 0..n_dirs {
        let dir: Vec<T> = if m == 2 {
            let th = T::lit(std::f64::consts::PI * d as f64 / n_dirs as f64);
            vec![th.cos(), th.sin()]
        } else {
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| T::lit(x / n)).collect()
        };
        for mag in [0.5, 2.0, 8.0, 24.0] {
            let mut b: Vec<T> = dir.iter().map(|&x| x * T::lit(mag)).collect();
            let mut ok = false;
            for _ in 0..100 {
                let (_, u, cov) = dual_eval(model, &b, true);
                let cov = cov.unwrap();
                let ku: Vec<T> = (0..m).map(|i| (0..m).fold(T::zero(), |s, j| s + int_k[i * m + j] * u[j])).collect();
                let f: Vec<T> = (0..m).map(|i| b[i] - ku[i]).collect();
                let res = f.iter().fold(T::zero(), |s, &x| s.max(x.fabs()));
                if res < T::lit(1e-12) {
                    ok = true;
                    break;
                }
                let mut jac = vec![T::zero(); m * m];
                for i in 0..m {
                    for j in 0..m {
                        let kc = (0..m).fold(T::zero(), |s, l| s + int_k[i * m + l] * cov[l * m + j]);
                        jac[i * m + j] = if i == j { T::one() } else { T::zero() } - kc;
                    }
                }
                let step = match lu_solve(&jac, m, &f) {
                    Some(s) => s,
                    None => break,
                };
                let sn = step.iter().fold(T::zero(), |s, &x| s.max(x.fabs()));
                let t = if sn > T::lit(5.0) { T::lit(5.0) / sn } else { T::one() };
                for i in 0..m {
                    b[i] = b[i] - t * step[i];
                }
                if b.iter().fold(T::zero(), |s, &x| s + x * x).sqrt() > cfg.lambda.cap {
                    break;
                }
            }
            if !ok {
                continue;
            }
            let (lz, u, _) = dual_eval(model, &b, false);
            let quad = (0..m).fold(T::zero(), |s, i| {
                s + u[i] * (0..m).fold(T::zero(), |t, j| t + int_k[i * m + j] * u[j])
            });
            let h = legendre_value(&b, &u, lz) - T::lit(0.5) * quad;
            best.push((h, u));
        }
    }
    let hmin = best.iter().fold(T::infinity(), |a, (h, _)| a.min(*h));
    let tol = T::lit(1e-9) * (T::one() + hmin.fabs());
    let mut pts: Vec<Vec<T>> = Vec::new();
    for (h, u) in &best {
        if *h <= hmin + tol {
            let dup = pts.iter().any(|p| p.iter().zip(u).all(|(&a, &b)| (a - b).fabs() < T::lit(1e-6)));
            if !dup {
                pts.push(u.clone());
            }
        }
    }
    let vac = if pts.len() == 1 { Vacuum::Point(pts.remove(0)) } else { Vacuum::Discrete(pts) };
    Ok((-hmin.min(T::zero()), vac))
}

impl<T: Real> BulkPotential<T> {
    pub fn new(model: &MicroModel<T>, int_k: &[T]) -> Result<Self> {
        compute_c0_and_nn(model, int_k, &BulkConfig::default())
    }

    pub fn m(&self) -> usize {
        self.model.m
    }

    /// Errors with `DegenerateMinimum` if the vacuum is not transversally non-degenerate.
    pub fn ensure_nondegenerate(&self) -> Result<()> {
        if self.degenerate {
            return Err(Error::DegenerateMinimum { curvature: self.transverse_curvature.as_f64() });
        }
        Ok(())
    }

    fn quad(&self, u: &[T]) -> T {
        let m = self.m();
        (0..m).fold(T::zero(), |s, i| s + u[i] * (0..m).fold(T::zero(), |t, j| t + self.int_k[i * m + j] * u[j]))
    }

    /// `ψ_s − ½u·∫K u + c₀`, with results inside the cancellation error of
    /// the sum set to zero so that the vacuum evaluates to exactly zero.
    pub fn combine(&self, psi_s: T, quad: T) -> T {
        let half = T::lit(0.5) * quad;
        let v = psi_s - half + self.c0;
        let floor = T::lit(8.0) * T::eps() * (psi_s.fabs() + half.fabs() + self.c0.fabs());
        if v.fabs() <= floor {
            T::zero()
        } else {
            v
        }
    }

    /// `ψ_b(u)` with a warm-start dual guess; returns the dual state too.
    pub fn psi_b_from(&self, u: &[T], b0: &[T]) -> Result<(T, DualState<T>)> {
        let st = lambda_from(&self.model, u, b0, &self.lambda_cfg)?;
        let v = self.combine(legendre_value(&st.b, u, st.ln_z), self.quad(u));
        Ok((v, st))
    }

    pub fn psi_b(&self, u: &[T]) -> Result<T> {
        self.psi_b_from(u, &vec![T::zero(); self.m()]).map(|x| x.0)
    }

    /// `ψ_s(u)` with a warm start.
    pub fn psi_s_from(&self, u: &[T], b0: &[T]) -> Result<(T, DualState<T>)> {
        let st = lambda_from(&self.model, u, b0, &self.lambda_cfg)?;
        Ok((legendre_value(&st.b, u, st.ln_z), st))
    }

    /// `∇²ψ_b(u) = (∇²lnZ(Λ(u)))⁻¹ − ∫K`.
    pub fn hessian_psi_b(&self, u: &[T]) -> Result<Vec<T>> {
        let m = self.m();
        let st = lambda_from(&self.model, u, &vec![T::zero(); m], &self.lambda_cfg)?;
        let cov = dual_eval(&self.model, &st.b, true).2.unwrap();
        let inv = spd_inverse(&cov, m).ok_or(Error::OutsideMomentDomain {
            dual_norm: st.b.iter().fold(0.0, |s, x| s + x.as_f64() * x.as_f64()).sqrt(),
            residual: 0.0,
        })?;
        Ok(inv.iter().zip(&self.int_k).map(|(&a, &k)| a - k).collect())
    }

    /// Smallest eigenvalue of `∇²ψ_b(u)` on the complement of the vacuum tangent space.
    pub fn transverse_curvature_at(&self, u: &[T]) -> Result<T> {
        let m = self.m();
        let h = self.hessian_psi_b(u)?;
        let tangents = if self.vacuum.dimension() > 0 { self.model.orbit_tangents(u) } else { Vec::new() };
        // orthonormal basis of the tangent span
        let mut basis: Vec<Vec<T>> = Vec::new();
        for t in tangents.into_iter() {
            let mut v = t;
            for b in &basis {
                let d = v.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = *x - d * y;
                }
            }
            let n = v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
            if n > T::lit(1e-10) {
                basis.push(v.iter().map(|&x| x / n).collect());
            }
        }
        // complement by Gram–Schmidt on unit vectors
        let mut comp: Vec<Vec<T>> = Vec::new();
        for k in 0..m {
            let mut v = vec![T::zero(); m];
            v[k] = T::one();
            for b in basis.iter().chain(comp.iter()) {
                let d = v.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = *x - d * y;
                }
            }
            let n = v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
            if n > T::lit(1e-8) {
                comp.push(v.iter().map(|&x| x / n).collect());
            }
        }
        let d = comp.len();
        if d == 0 {
            return Ok(T::infinity());
        }
        let mut p = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut s = T::zero();
                for a in 0..m {
                    for b in 0..m {
                        s = s + comp[i][a] * h[a * m + b] * comp[j][b];
                    }
                }
                p[i * d + j] = s;
            }
        }
        Ok(sym_eigenvalues(&p, d)[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport<T> {
    /// `min λ_min(∇²ψ_s)` over the sampled moment set.
    pub c_est: T,
    /// Largest `‖∇²ψ_s·∇²lnZ − Id‖_max` with `∇²ψ_s` from finite differences of `Λ`.
    pub inverse_relation_error: T,
    /// Largest covariance norm seen, to compare with `σ_max²`.
    pub max_covariance_norm: T,
    pub sigma_max_sq: T,
    pub transverse_curvature: T,
    pub samples: usize,
}

/// Convexity and non-degeneracy diagnostics of the potentials.
pub fn hessian_diagnostics<T: Real>(bulk: &BulkPotential<T>, seed: u64) -> Result<HessianReport<T>> {
    let model = &bulk.model;
    let m = model.m;
    let mut rng = rng::stream(seed, "potential.hessian");
    let mut c_est = T::infinity();
    let mut inv_err = T::zero();
    let mut cov_max = T::zero();
    let mut samples = 0;
    for &mag in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0] {
        for _ in 0..12 {
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b: Vec<T> = v.iter().map(|x| T::lit(mag * x / n)).collect();
            let (_, u, cov) = dual_eval(model, &b, true);
            let cov = cov.unwrap();
            let w = sym_eigenvalues(&cov, m);
            cov_max = cov_max.max(w[m - 1]);
            c_est = c_est.min(T::one() / w[m - 1]);
            samples += 1;
            if mag <= 5.0 {
                let delta = T::lit(1e-5);
                let mut hfd = vec![T::zero(); m * m];
                for k in 0..m {
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[k] = up[k] + delta;
                    dn[k] = dn[k] - delta;
                    let bp = lambda_from(model, &up, &b, &bulk.lambda_cfg)?.b;
                    let bm = lambda_from(model, &dn, &b, &bulk.lambda_cfg)?.b;
                    for i in 0..m {
                        hfd[i * m + k] = (bp[i] - bm[i]) / (delta + delta);
                    }
                }
                for i in 0..m {
                    for j in 0..m {
                        let p = (0..m).fold(T::zero(), |s, k| s + hfd[i * m + k] * cov[k * m + j]);
                        let e = if i == j { T::one() } else { T::zero() };
                        inv_err = inv_err.max((p - e).fabs());
                    }
                }
            }
        }
    }
    Ok(HessianReport {
        c_est,
        inverse_relation_error: inv_err,
        max_covariance_norm: cov_max,
        sigma_max_sq: model.sigma_max * model.sigma_max,
        transverse_curvature: bulk.transverse_curvature,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(m: usize, k: f64) -> Vec<f64> {
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = k;
        }
        a
    }

    #[test]
    fn convex_regime_has_point_vacuum() {
        let model = MicroModel::<f64>::default_circle();
        let b = BulkPotential::new(&model, &iso(2, 1.5)).unwrap();
        assert_eq!(b.s0, 0.0);
        assert_eq!(b.c0, 0.0);
        assert!(matches!(b.vacuum, Vacuum::Point(_)));
        let z = BulkPotential::new(&model, &iso(2, 0.0)).unwrap();
        assert!(z.psi_b(&[0.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ordered_circle_vacuum() {
        let model = MicroModel::<f64>::default_circle();
        let b = BulkPotential::new(&model, &iso(2, 8.0)).unwrap();
        assert!(b.s0 > 0.8 && b.s0 < 1.0);
        assert!(!b.degenerate);
        for k in 0..8 {
            let th = std::f64::consts::PI * k as f64 / 8.0;
            let u = [b.s0 * th.cos(), b.s0 * th.sin()];
            assert!(b.psi_b(&u).unwrap().abs() < 1e-8);
        }
        assert!(b.psi_b(&[0.3, 0.1]).unwrap() > 0.0);
    }

    #[test]
    fn ordered_sphere_vacuum_is_prolate() {
        let model = MicroModel::<f64>::default_sphere();
        let b = BulkPotential::new(&model, &iso(5, 12.0)).unwrap();
        match b.vacuum {
            Vacuum::Uniaxial { order, .. } => assert!(order > 0.3),
            ref v => panic!("unexpected vacuum {v:?}"),
        }
        let u = b.vacuum.representative(5);
        assert!(b.psi_b(&u).unwrap().abs() < 1e-8);
        let r = model.rotate(&u, 0.9, 0);
        // the product rule is only approximately rotation invariant
        assert!(b.psi_b(&r).unwrap().abs() < 1e-6);
        assert!(b.vacuum.distance(&r) < 1e-12);
    }

    #[test]
    fn anisotropic_interaction() {
        let model = MicroModel::<f64>::default_circle();
        let b = BulkPotential::new(&model, &[8.0, 0.0, 0.0, 6.0]).unwrap();
        let u = b.vacuum.representative(2);
        assert!(b.psi_b(&u).unwrap().abs() < 1e-8);
        assert!(u[0].abs() > 0.5 && u[1].abs() < 1e-6);
    }
}
