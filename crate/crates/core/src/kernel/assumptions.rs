use rand::Rng;

use super::moments::{compute_moments_with, g_radial, lambda_max_ratio, scan_radii, KernelMoments, QuadratureConfig};
use super::spec::{evaluate_kernel, KernelSpec};
use crate::error::Result;
use crate::real::Real;
use crate::rng;

/// Shell `ρ₁ < |z| < ρ₂` on which `g ≥ k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusParams<T> {
    pub r1: T,
    pub r2: T,
    pub k: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<T> {
    /// `K ∈ L¹` with integrable gradient and no jumps.
    pub k1_sobolev: bool,
    /// Integrable with a finite-mass distributional gradient (jumps allowed).
    pub k1_bv: bool,
    /// Evenness and symmetry on random probes.
    pub k2_even: bool,
    /// `g ≥ 0` on the radial scan.
    pub k3_nonnegative: bool,
    pub annulus: Option<AnnulusParams<T>>,
    /// `g ∈ L¹` with finite second moment.
    pub k4_second_moment: bool,
    /// Measured `C` with `λ_max ≤ C g` (`+∞` if none exists on the scan).
    pub k5_constant: T,
    /// `∫‖∇K‖|z|³ < ∞`.
    pub k6_gradient_moment: bool,
    /// Finite `q`-th moment with `q ≥ 2` and `τ > 0`.
    pub layer_feasible: bool,
    pub moments: KernelMoments<T>,
}

impl<T: Real> AssumptionReport<T> {
    pub fn passes(&self) -> bool {
        self.k1_bv
            && self.k2_even
            && self.k3_nonnegative
            && self.annulus.is_some()
            && self.k4_second_moment
            && self.k5_constant.is_finite()
            && self.k6_gradient_moment
    }

    /// Names of failed assumptions.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.k1_bv {
            f.push("K1");
        }
        if !self.k2_even {
            f.push("K2");
        }
        if !self.k3_nonnegative || self.annulus.is_none() {
            f.push("K3");
        }
        if !self.k4_second_moment {
            f.push("K4");
        }
        if !self.k5_constant.is_finite() {
            f.push("K5");
        }
        if !self.k6_gradient_moment {
            f.push("K6");
        }
        f
    }
}

const SCAN_POINTS: usize = 4096;

/// Shell of width where `g` stays above half its peak, edges refined by bisection.
pub fn detect_annulus<T: Real>(spec: &KernelSpec<T>) -> Option<AnnulusParams<T>> {
    let radii = scan_radii(spec, SCAN_POINTS);
    let g: Vec<T> = radii.iter().map(|&r| g_radial(spec, r)).collect();
    let (imax, gmax) = g
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bg), (i, &v)| if v > bg { (i, v) } else { (bi, bg) });
    if !(gmax > T::zero()) {
        return None;
    }
    let thr = gmax * T::lit(0.5);
    let mut lo = imax;
    while lo > 0 && g[lo - 1] >= thr {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < g.len() && g[hi + 1] >= thr {
        hi += 1;
    }
    let above = |r: T| g_radial(spec, r) >= thr;
    let bisect = |mut inside: T, mut outside: T| {
        for _ in 0..200 {
            let mid = (inside + outside) * T::lit(0.5);
            if mid == inside || mid == outside {
                break;
            }
            if above(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let r2 = if hi + 1 < g.len() { bisect(radii[hi], radii[hi + 1]) } else { radii[hi] };
    let r1 = if lo > 0 { bisect(radii[lo], radii[lo - 1]) } else { r2 * T::lit(0.5) };
    // k: smallest g on the shell, sampled together with the refined edges
    let k = radii[lo..=hi]
        .iter()
        .zip(&g[lo..=hi])
        .filter(|(&r, _)| r >= r1 && r <= r2)
        .fold(g_radial(spec, r1).min(g_radial(spec, r2)), |a, (_, &b)| a.min(b));
    (k > T::zero() && r1 < r2).then_some(AnnulusParams { r1, r2, k })
}

pub fn check_assumptions<T: Real>(spec: &KernelSpec<T>, cfg: &QuadratureConfig) -> Result<AssumptionReport<T>> {
    let moments = compute_moments_with(spec, cfg)?;
    let radii = scan_radii(spec, SCAN_POINTS);
    let g_min = radii.iter().fold(T::infinity(), |a, &r| a.min(g_radial(spec, r)));
    let scale = radii.iter().fold(T::zero(), |a, &r| a.max(spec.envelope(r)));
    let k3_nonnegative = g_min >= -T::lit(1e-12) * scale.max(T::one());

    let mut rng = rng::stream(0, "kernel.assumptions");
    let reach = radii.last().copied().unwrap_or(T::one());
    let mut k2_even = true;
    for _ in 0..32 {
        let z: [T; 3] = std::array::from_fn(|_| reach * T::lit(rng.gen_range(-1.0..1.0)));
        let mz = [-z[0], -z[1], -z[2]];
        let a = evaluate_kernel(spec, &z);
        let b = evaluate_kernel(spec, &mz);
        let m = spec.m;
        let sym = (0..m).all(|i| (0..m).all(|j| a[i * m + j] == a[j * m + i]));
        k2_even &= a == b && sym;
    }

    let envelope_mass = super::moments::radial_integral(
        &spec.breaks(),
        spec.tail_power().map(|e| e + T::lit(2.0)),
        cfg,
        |r| spec.envelope(r) * r * r,
    )?
    .is_some();
    let has_jumps = spec.active_profiles().iter().any(|(_, p)| !p.jumps().is_empty());
    let k6 = moments.m3grad.is_finite();
    let k1_bv = envelope_mass && k6;
    let layer_feasible = moments.mq.is_finite() && spec.q >= T::lit(2.0) && spec.tau > T::zero();

    Ok(AssumptionReport {
        k1_sobolev: k1_bv && !has_jumps,
        k1_bv,
        k2_even,
        k3_nonnegative,
        annulus: if k3_nonnegative { detect_annulus(spec) } else { None },
        k4_second_moment: moments.int_g.is_finite() && moments.m2.is_finite(),
        k5_constant: lambda_max_ratio(spec, &radii),
        k6_gradient_moment: k6,
        layer_feasible,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::super::profile::RadialProfile;
    use super::*;

    #[test]
    fn annulus_recovered() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Annulus { k: 1.3, r1: 0.45, r2: 1.1 }, 2);
        let rep = check_assumptions(&spec, &QuadratureConfig::default()).unwrap();
        assert!(rep.passes(), "{:?}", rep.failures());
        let a = rep.annulus.unwrap();
        assert!((a.k - 1.3).abs() < 1e-10);
        assert!((a.r1 - 0.45).abs() < 1e-9 && (a.r2 - 1.1).abs() < 1e-9);
        assert!(!rep.k1_sobolev && rep.k1_bv);
        assert_eq!(rep.k5_constant, 1.0);
    }

    #[test]
    fn lorentzian_fails_second_moment() {
        let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Lorentzian { k: 1.0 }, 2);
        let rep = check_assumptions(&spec, &QuadratureConfig::default()).unwrap();
        assert!(!rep.k4_second_moment);
        assert!(rep.failures().contains(&"K4"));
    }

    #[test]
    fn nematic_k5_at_least_one() {
        let spec: KernelSpec<f64> = KernelSpec::nematic(
            RadialProfile::Gaussian { k: 1.0, a: 1.0 },
            RadialProfile::Gaussian { k: 0.3, a: 1.0 },
            RadialProfile::Gaussian { k: 0.1, a: 1.0 },
        );
        let rep = check_assumptions(&spec, &QuadratureConfig::default()).unwrap();
        assert!(rep.k5_constant >= 1.0 && rep.k5_constant.is_finite());
        assert!(rep.passes(), "{:?}", rep.failures());
    }
}
