use super::spec::{evaluate_kernel, frame_terms, kernel_gradient, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::quadrature::{RadialRule, SphereRule, Tail};
use crate::real::Real;

/// Radial and angular resolution for kernel integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss panels per segment between breakpoints.
    pub panels: usize,
    /// Points per Gauss panel.
    pub order: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Allowed relative change when the panel count is doubled.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { panels: 8, order: 16, n_theta: 16, n_phi: 32, rel_tol: 1e-9 }
    }
}

impl QuadratureConfig {
    pub const MIN_PANELS: usize = 2;
    pub const MIN_ORDER: usize = 6;

    pub fn validate(&self) -> Result<()> {
        if self.panels < Self::MIN_PANELS || self.order < Self::MIN_ORDER {
            return Err(Error::InvalidInput(format!(
                "quadrature resolution below minimum (panels >= {}, order >= {})",
                Self::MIN_PANELS,
                Self::MIN_ORDER
            )));
        }
        if self.n_theta < 4 || self.n_phi < 8 {
            return Err(Error::InvalidInput("spherical rule needs n_theta >= 4, n_phi >= 8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMoments<T> {
    pub m: usize,
    /// `∫K`, row-major `m×m`.
    pub int_k: Vec<T>,
    pub int_g: T,
    pub m2: T,
    pub m3grad: T,
    pub q: T,
    pub mq: T,
    /// Largest relative change seen when doubling radial resolution.
    pub refinement_change: T,
}

impl<T: Real> KernelMoments<T> {
    pub fn all_finite(&self) -> bool {
        self.int_k.iter().all(|x| x.is_finite())
            && self.int_g.is_finite()
            && self.m2.is_finite()
            && self.m3grad.is_finite()
            && self.mq.is_finite()
    }
}

/// One radial integral `∫_0^∞ f(r) dr` with a refinement check.
///
/// `tail_exponent` is the power of `f` at large `r` (if `f` has a power tail).
/// Returns `Ok(None)` for divergent integrals.
pub(crate) fn radial_integral<T: Real>(
    breaks: &[T],
    tail_exponent: Option<T>,
    cfg: &QuadratureConfig,
    f: impl Fn(T) -> T,
) -> Result<Option<(T, T)>> {
    let tail = match tail_exponent {
        Some(e) => Tail::Power { exponent: e },
        None => Tail::None,
    };
    let coarse = match RadialRule::build(breaks, tail, cfg.panels, cfg.order) {
        Some(r) => r.integrate(&f),
        None => return Ok(None),
    };
    let fine = RadialRule::build(breaks, tail, 2 * cfg.panels, cfg.order)
        .expect("refined rule exists when coarse does")
        .integrate(&f);
    let scale = fine.fabs().max(coarse.fabs());
    let change = if scale > T::zero() { (fine - coarse).fabs() / scale } else { T::zero() };
    if change > T::lit(cfg.rel_tol) && (fine - coarse).fabs() > T::lit(1e-300) {
        return Err(Error::QuadratureUnderresolved(format!(
            "radial integral changed by {:.3e} relative under refinement",
            change.as_f64()
        )));
    }
    Ok(Some((fine, change)))
}

/// Angular average of `Φ_k(p) ⊗ (p_i p_j)` pieces used by moment and tensor
/// integrals: returns, for each active profile, the sphere average of
/// `Φ(p) p_i p_j` (index `((i·3+j)·m+α)·m+β`) and of `Φ(p)` alone.
pub(crate) fn angular_factors<T: Real>(
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Vec<(Vec<T>, Vec<T>)> {
    let m = spec.m;
    let rule = SphereRule::<T>::product(cfg.n_theta, cfg.n_phi);
    let mut out = Vec::new();
    for (deg, _) in spec.active_profiles() {
        let mut avg = vec![T::zero(); m * m];
        let mut avg_pp = vec![T::zero(); 9 * m * m];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let phi = angular_factor(spec, deg, p);
            for ab in 0..m * m {
                avg[ab] = avg[ab] + w * phi[ab];
            }
            for i in 0..3 {
                for j in 0..3 {
                    let pij = p[i] * p[j];
                    let base = (i * 3 + j) * m * m;
                    for ab in 0..m * m {
                        avg_pp[base + ab] = avg_pp[base + ab] + w * pij * phi[ab];
                    }
                }
            }
        }
        out.push((avg, avg_pp));
    }
    out
}

/// The angular matrix multiplying the profile of homogeneity degree `deg` at unit `p`.
fn angular_factor<T: Real>(spec: &KernelSpec<T>, deg: i32, p: &[T; 3]) -> Vec<T> {
    let m = spec.m;
    match deg {
        0 => crate::linalg::identity(m),
        _ => {
            let (g, h) = frame_terms(p);
            if deg == 2 {
                g
            } else {
                h
            }
        }
    }
}

/// Direction used for radial scans: eigenvalues and gradient norms of a
/// frame-indifferent kernel depend on `|z|` only.
pub(crate) fn axis<T: Real>(r: T) -> [T; 3] {
    [T::zero(), T::zero(), r]
}

pub(crate) fn g_radial<T: Real>(spec: &KernelSpec<T>, r: T) -> T {
    super::spec::min_eigen_g(spec, &axis(r))
}

fn grad_norm_radial<T: Real>(spec: &KernelSpec<T>, r: T) -> T {
    let g = kernel_gradient(spec, &axis(r));
    g.iter().flat_map(|v| v.iter()).fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// Sign changes of profile derivatives inside the breakpoint segments.
fn derivative_roots<T: Real>(spec: &KernelSpec<T>, breaks: &[T]) -> Vec<T> {
    let mut roots = Vec::new();
    let mut pts = vec![T::zero()];
    pts.extend_from_slice(breaks);
    for (_, prof) in spec.active_profiles() {
        for seg in pts.windows(2) {
            let n = 256;
            let step = (seg[1] - seg[0]) / T::from_usize_lossy(n);
            for i in 0..n {
                let mut a = seg[0] + step * T::from_usize_lossy(i);
                let mut b = a + step;
                let (fa, fb) = (prof.derivative(a), prof.derivative(b));
                if fa == T::zero() || fb == T::zero() || (fa > T::zero()) == (fb > T::zero()) {
                    continue;
                }
                let sa = fa > T::zero();
                for _ in 0..100 {
                    let mid = (a + b) * T::lit(0.5);
                    if (prof.derivative(mid) > T::zero()) == sa {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                roots.push((a + b) * T::lit(0.5));
            }
        }
    }
    roots
}

/// Sum of the Frobenius norms of kernel jumps on each jump sphere, weighted by
/// `4π r⁵` (surface area times `|z|³`).
fn jump_contribution<T: Real>(spec: &KernelSpec<T>) -> T {
    let mut radii: Vec<T> = spec
        .active_profiles()
        .iter()
        .flat_map(|(_, p)| p.jumps().into_iter().map(|(r, _)| r))
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let mut total = T::zero();
    let m = spec.m;
    for r in radii {
        let mut jump = vec![T::zero(); m * m];
        for (deg, prof) in spec.active_profiles() {
            for (rj, d) in prof.jumps() {
                if rj == r {
                    let phi = angular_factor(spec, deg, &[T::zero(), T::zero(), T::one()]);
                    let scale = d * r.powi(deg);
                    for ab in 0..m * m {
                        jump[ab] = jump[ab] + scale * phi[ab];
                    }
                }
            }
        }
        let fro = jump.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        total = total + T::lit(4.0) * T::PI() * r.powi(5) * fro;
    }
    total
}

fn value_or_inf<T: Real>(v: Option<(T, T)>, change: &mut T) -> T {
    match v {
        Some((x, c)) => {
            *change = change.max(c);
            x
        }
        None => T::infinity(),
    }
}

/// Moments of the kernel. Divergent moments come back as `+∞`; use
/// [`compute_moments`] when all of them are required to be finite.
pub fn compute_moments_with<T: Real>(
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<KernelMoments<T>> {
    cfg.validate()?;
    let m = spec.m;
    let four_pi = T::lit(4.0) * T::PI();
    let breaks = spec.breaks();
    let mut change = T::zero();
    if spec.is_zero() {
        return Ok(KernelMoments {
            m,
            int_k: vec![T::zero(); m * m],
            int_g: T::zero(),
            m2: T::zero(),
            m3grad: T::zero(),
            q: spec.q,
            mq: T::zero(),
            refinement_change: T::zero(),
        });
    }

    let mut int_k = vec![T::zero(); m * m];
    let factors = angular_factors(spec, cfg);
    for ((deg, prof), (avg, _)) in spec.active_profiles().iter().zip(&factors) {
        let d = *deg;
        let tail = prof.tail_power().map(|e| e + T::lit(2.0) + T::from_usize_lossy(d as usize));
        let rad = radial_integral(&prof.breaks(), tail, cfg, |r| prof.value(r) * r.powi(2 + d))?;
        let v = value_or_inf(rad, &mut change);
        for ab in 0..m * m {
            int_k[ab] = int_k[ab] + four_pi * v * avg[ab];
        }
    }

    let g_tail = |extra: T| spec.tail_power().map(|e| e + T::lit(2.0) + extra);
    let int_g = value_or_inf(
        radial_integral(&breaks, g_tail(T::zero()), cfg, |r| g_radial(spec, r) * r * r)?,
        &mut change,
    ) * four_pi;
    let m2 = value_or_inf(
        radial_integral(&breaks, g_tail(T::lit(2.0)), cfg, |r| g_radial(spec, r) * r.powi(4))?,
        &mut change,
    ) * four_pi;
    let q = spec.q;
    let mq = value_or_inf(
        radial_integral(&breaks, g_tail(q), cfg, |r| g_radial(spec, r) * r.powf(q + T::lit(2.0)))?,
        &mut change,
    ) * four_pi;
    // ∇ lowers the power by one; |z|³ and the Jacobian add five.
    // ‖∇K‖ has kinks where profile derivatives change sign, so split there.
    let mut gbreaks = breaks.clone();
    gbreaks.extend(derivative_roots(spec, &breaks));
    gbreaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gcfg = QuadratureConfig { rel_tol: cfg.rel_tol.max(1e-7), ..*cfg };
    let smooth = value_or_inf(
        radial_integral(&gbreaks, g_tail(T::lit(2.0)), &gcfg, |r| {
            grad_norm_radial(spec, r) * r.powi(5)
        })?,
        &mut change,
    ) * four_pi;
    let m3grad = smooth + jump_contribution(spec);

    Ok(KernelMoments { m, int_k, int_g, m2, m3grad, q, mq, refinement_change: change })
}

/// Moments with the default resolution; fails if any moment diverges.
pub fn compute_moments<T: Real>(spec: &KernelSpec<T>) -> Result<KernelMoments<T>> {
    let mo = compute_moments_with(spec, &QuadratureConfig::default())?;
    if !mo.all_finite() {
        return Err(Error::PreconditionNotMet(
            "kernel has a divergent moment (integrability or finite second moment fails)".into(),
        ));
    }
    Ok(mo)
}

/// Radial sample grid for pointwise scans of `g` and `λ_max`.
pub(crate) fn scan_radii<T: Real>(spec: &KernelSpec<T>, n: usize) -> Vec<T> {
    let last = spec.breaks().last().copied().unwrap_or(T::one());
    let r_max = if spec.tail_power().is_some() { last * T::lit(4.0) } else { last * T::lit(1.25) };
    (1..=n).map(|i| r_max * T::from_usize_lossy(i) / T::from_usize_lossy(n + 1)).collect()
}

/// Largest `λ_max(K)/g` over a radial scan, `+∞` if `λ_max > 0` where `g = 0`.
pub(crate) fn lambda_max_ratio<T: Real>(spec: &KernelSpec<T>, radii: &[T]) -> T {
    let mut c = T::one();
    for &r in radii {
        let w = if spec.is_isotropic() {
            let v = spec.f1.value(r);
            vec![v, v]
        } else {
            sym_eigenvalues(&evaluate_kernel(spec, &axis(r)), spec.m)
        };
        let (lo, hi) = (w[0], w[w.len() - 1]);
        if hi <= T::zero() {
            continue;
        }
        if lo <= T::zero() {
            return T::infinity();
        }
        c = c.max(hi / lo);
    }
    c
}
