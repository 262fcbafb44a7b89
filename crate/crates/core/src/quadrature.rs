//! Gauss–Legendre rules on intervals, composite radial rules on [0, ∞) and a
//! product rule on the unit sphere.

use crate::real::Real;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Behaviour of a radial integrand beyond its last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail<T> {
    /// Integrand vanishes past the last breakpoint.
    None,
    /// Integrand behaves like `r^exponent` past the last breakpoint.
    Power { exponent: T },
}

/// Fixed node set approximating `∫_0^∞ F(r) dr ≈ Σ wᵢ F(rᵢ)`.
#[derive(Debug, Clone)]
pub struct RadialRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> RadialRule<T> {
    /// Composite rule with `panels` Gauss panels of `order` points per segment
    /// between consecutive breakpoints (0 prepended). Returns `None` when the
    /// power tail is not integrable.
    pub fn build(breaks: &[T], tail: Tail<T>, panels: usize, order: usize) -> Option<Self> {
        let (gx, gw) = gauss_legendre(order);
        let mut pts = vec![T::zero()];
        for &b in breaks {
            if b > *pts.last().unwrap() {
                pts.push(b);
            }
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let hp = (b - a) / T::from_usize_lossy(panels);
            for p in 0..panels {
                let lo = a + hp * T::from_usize_lossy(p);
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(lo + hp * T::lit(0.5 * (x + 1.0)));
                    weights.push(hp * T::lit(0.5 * w));
                }
            }
        }
        if let Tail::Power { exponent } = tail {
            let r0 = *pts.last().unwrap();
            if r0 <= T::zero() {
                return None;
            }
            // t = 1/r maps the tail to (0, 1/r0]; integrand in t ~ t^e
            let e = -exponent - T::lit(2.0);
            if e <= -T::one() + T::lit(1e-9) {
                return None;
            }
            let nu = (e + T::one()).ceil() / (e + T::one());
            let big_t = T::one() / r0;
            let hp = T::one() / T::from_usize_lossy(panels);
            for p in 0..panels {
                let lo = hp * T::from_usize_lossy(p);
                for (x, w) in gx.iter().zip(&gw) {
                    let s = lo + hp * T::lit(0.5 * (x + 1.0));
                    let ws = hp * T::lit(0.5 * w);
                    let t = big_t * s.powf(nu);
                    let dt = big_t * nu * s.powf(nu - T::one());
                    nodes.push(T::one() / t);
                    weights.push(ws * dt / (t * t));
                }
            }
        }
        Some(RadialRule { nodes, weights })
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |s, (&r, &w)| s + w * f(r))
    }
}

/// Product rule on S²: Gauss–Legendre in cos θ times uniform azimuth.
/// Weights sum to one (average over the sphere).
#[derive(Debug, Clone)]
pub struct SphereRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> SphereRule<T> {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let (gx, gw) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in gx.iter().zip(&gw) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_phi as f64;
                points.push([T::lit(s * phi.cos()), T::lit(s * phi.sin()), T::lit(*c)]);
                weights.push(T::lit(0.5 * w / n_phi as f64));
            }
        }
        SphereRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
