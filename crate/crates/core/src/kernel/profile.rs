use crate::quadrature::{RadialRule, Tail};
use crate::real::Real;

/// Closed-form radial profile `f(r)` used to build kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile<T> {
    Zero,
    /// `k` on the open shell `r1 < r < r2`, zero elsewhere.
    Annulus { k: T, r1: T, r2: T },
    /// `k·exp(-r²/2a²)`.
    Gaussian { k: T, a: T },
    /// `c·φ(r)/r⁶` with a C¹ smoothstep `φ` rising from 0 at `r_in` to 1 at `r_out`.
    InverseSixth { c: T, r_in: T, r_out: T },
    /// `k/(1+r²)`. Infinite second moment in three dimensions.
    Lorentzian { k: T },
}

/// Truncation radius of the Gaussian preset in units of `a`.
const GAUSS_CUTOFF: f64 = 12.0;

fn smoothstep<T: Real>(t: T) -> (T, T) {
    if t <= T::zero() {
        (T::zero(), T::zero())
    } else if t >= T::one() {
        (T::one(), T::zero())
    } else {
        let three = T::lit(3.0);
        let two = T::lit(2.0);
        (t * t * (three - two * t), T::lit(6.0) * t * (T::one() - t))
    }
}

impl<T: Real> RadialProfile<T> {
    pub fn value(&self, r: T) -> T {
        match *self {
            RadialProfile::Zero => T::zero(),
            RadialProfile::Annulus { k, r1, r2 } => {
                if r > r1 && r < r2 {
                    k
                } else {
                    T::zero()
                }
            }
            RadialProfile::Gaussian { k, a } => {
                if r > a * T::lit(GAUSS_CUTOFF) {
                    T::zero()
                } else {
                    k * (-(r * r) / (T::lit(2.0) * a * a)).exp()
                }
            }
            RadialProfile::InverseSixth { c, r_in, r_out } => {
                if r <= r_in {
                    return T::zero();
                }
                let (phi, _) = smoothstep((r - r_in) / (r_out - r_in));
                c * phi / r.powi(6)
            }
            RadialProfile::Lorentzian { k } => k / (T::one() + r * r),
        }
    }

    /// Derivative away from jump points.
    pub fn derivative(&self, r: T) -> T {
        match *self {
            RadialProfile::Zero | RadialProfile::Annulus { .. } => T::zero(),
            RadialProfile::Gaussian { a, .. } => {
                if r > a * T::lit(GAUSS_CUTOFF) {
                    T::zero()
                } else {
                    -self.value(r) * r / (a * a)
                }
            }
            RadialProfile::InverseSixth { c, r_in, r_out } => {
                if r <= r_in {
                    return T::zero();
                }
                let w = r_out - r_in;
                let (phi, dphi) = smoothstep((r - r_in) / w);
                c * (dphi / w / r.powi(6) - T::lit(6.0) * phi / r.powi(7))
            }
            RadialProfile::Lorentzian { k } => {
                let d = T::one() + r * r;
                -T::lit(2.0) * k * r / (d * d)
            }
        }
    }

    /// Jump discontinuities as `(radius, value_after - value_before)`.
    pub fn jumps(&self) -> Vec<(T, T)> {
        match *self {
            RadialProfile::Annulus { k, r1, r2 } => vec![(r1, k), (r2, -k)],
            _ => Vec::new(),
        }
    }

    /// Breakpoints for composite quadrature; the last one starts the tail.
    pub fn breaks(&self) -> Vec<T> {
        match *self {
            RadialProfile::Zero => Vec::new(),
            RadialProfile::Annulus { r1, r2, .. } => vec![r1, r2],
            RadialProfile::Gaussian { a, .. } => [1.0, 2.0, 4.0, 6.0, 8.0, GAUSS_CUTOFF]
                .iter()
                .map(|&s| a * T::lit(s))
                .collect(),
            RadialProfile::InverseSixth { r_in, r_out, .. } => vec![r_in, r_out],
            RadialProfile::Lorentzian { .. } => vec![T::one(), T::lit(2.0), T::lit(4.0)],
        }
    }

    /// Power-law exponent of the profile beyond the last breakpoint, if it
    /// does not vanish there.
    pub fn tail_power(&self) -> Option<T> {
        match *self {
            RadialProfile::InverseSixth { .. } => Some(T::lit(-6.0)),
            RadialProfile::Lorentzian { .. } => Some(T::lit(-2.0)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            RadialProfile::Zero => true,
            RadialProfile::Annulus { k, .. } | RadialProfile::Gaussian { k, .. } => k == T::zero(),
            RadialProfile::InverseSixth { c, .. } => c == T::zero(),
            RadialProfile::Lorentzian { k } => k == T::zero(),
        }
    }

    /// Smallest feature length and the number of lattice cells it needs.
    pub fn resolution_demand(&self) -> Option<(T, usize)> {
        match *self {
            RadialProfile::Zero => None,
            RadialProfile::Annulus { r1, r2, .. } => Some((r2 - r1, 4)),
            RadialProfile::Gaussian { a, .. } => Some((a, 1)),
            RadialProfile::InverseSixth { r_in, r_out, .. } => Some((r_out - r_in, 1)),
            RadialProfile::Lorentzian { .. } => Some((T::one(), 1)),
        }
    }

    /// Same shape with amplitude multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        match *self {
            RadialProfile::Zero => RadialProfile::Zero,
            RadialProfile::Annulus { k, r1, r2 } => RadialProfile::Annulus { k: k * s, r1, r2 },
            RadialProfile::Gaussian { k, a } => RadialProfile::Gaussian { k: k * s, a },
            RadialProfile::InverseSixth { c, r_in, r_out } => {
                RadialProfile::InverseSixth { c: c * s, r_in, r_out }
            }
            RadialProfile::Lorentzian { k } => RadialProfile::Lorentzian { k: k * s },
        }
    }

    /// `4π∫ f(r) r² dr`, or `None` if divergent.
    pub fn mass(&self) -> Option<T> {
        if self.is_zero() {
            return Some(T::zero());
        }
        let tail = match self.tail_power() {
            Some(p) => Tail::Power { exponent: p + T::lit(2.0) },
            None => Tail::None,
        };
        let rule = RadialRule::build(&self.breaks(), tail, 16, 16)?;
        Some(T::lit(4.0) * T::PI() * rule.integrate(|r| self.value(r) * r * r))
    }

    /// Rescales the amplitude so that `4π∫ f r² dr = target`.
    pub fn with_mass(&self, target: T) -> Option<Self> {
        let m = self.mass()?;
        if m == T::zero() {
            return None;
        }
        Some(self.scaled(target / m))
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadialProfile::Zero => "zero",
            RadialProfile::Annulus { .. } => "annulus",
            RadialProfile::Gaussian { .. } => "gaussian",
            RadialProfile::InverseSixth { .. } => "inverse_sixth",
            RadialProfile::Lorentzian { .. } => "lorentzian",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_mass_closed_form() {
        let p: RadialProfile<f64> = RadialProfile::Annulus { k: 2.0, r1: 0.5, r2: 1.0 };
        let exact = 2.0 * 4.0 * std::f64::consts::PI / 3.0 * (1.0 - 0.125);
        assert!((p.mass().unwrap() - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass_closed_form() {
        let p: RadialProfile<f64> = RadialProfile::Gaussian { k: 1.0, a: 0.7 };
        let exact = (2.0 * std::f64::consts::PI).powf(1.5) * 0.7f64.powi(3);
        assert!((p.mass().unwrap() / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let profiles: [RadialProfile<f64>; 3] = [
            RadialProfile::Gaussian { k: 1.3, a: 0.8 },
            RadialProfile::InverseSixth { c: 1.0, r_in: 0.5, r_out: 1.0 },
            RadialProfile::Lorentzian { k: 1.0 },
        ];
        for p in profiles {
            for &r in &[0.3, 0.6, 0.77, 1.4, 2.2] {
                let h = 1e-6;
                let fd = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
                assert!((fd - p.derivative(r)).abs() < 1e-6 * (1.0 + fd.abs()), "{p:?} r={r}");
            }
        }
    }

    #[test]
    fn lorentzian_mass_diverges() {
        assert!(RadialProfile::<f64>::Lorentzian { k: 1.0 }.mass().is_none());
    }

    #[test]
    fn with_mass_normalises() {
        let p: RadialProfile<f64> = RadialProfile::InverseSixth { c: 1.0, r_in: 0.4, r_out: 0.9 }.with_mass(3.0).unwrap();
        assert!((p.mass().unwrap() - 3.0).abs() < 1e-12);
    }
}
