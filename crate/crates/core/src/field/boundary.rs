use super::domain::{Domain, Region};
use crate::error::{Error, Result};
use crate::potential::{circle_sigma, sphere_sigma, BulkPotential, Manifold, Vacuum};
use crate::real::Real;

/// Boundary-data presets. Angle presets use the molecular angle `θ`, so the
/// planar order parameter is `s₀(cos 2θ, sin 2θ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPreset<T> {
    /// A fixed value; must be a vacuum point where Ω is concerned.
    Constant(Vec<T>),
    /// The vacuum representative of the bulk potential.
    Vacuum,
    /// `θ(x) = slope·x₁ + curvature·|x|²` (planar) or the director
    /// `(sin θ, 0, cos θ)` (uniaxial). Off Ω the magnitude relaxes to
    /// `exterior_ratio·s₀` over a distance `ramp`.
    SmoothAngle { slope: T, curvature: T, exterior_ratio: T, ramp: T },
    /// Planar line defect along the x₃ axis: `2θ = winding·arg(x₁ + i x₂)`.
    Vortex { winding: i32, exterior_ratio: T, ramp: T },
}

impl<T: Real> BoundaryPreset<T> {
    pub fn smooth(slope: T, curvature: T) -> Self {
        BoundaryPreset::SmoothAngle { slope, curvature, exterior_ratio: T::one(), ramp: T::lit(0.1) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryPreset::Constant(_) => "constant",
            BoundaryPreset::Vacuum => "vacuum",
            BoundaryPreset::SmoothAngle { .. } => "smooth",
            BoundaryPreset::Vortex { .. } => "vortex",
        }
    }

    /// Molecular angle at `x` for the angle presets.
    pub fn angle(&self, x: &[T; 3]) -> Option<T> {
        match *self {
            BoundaryPreset::SmoothAngle { slope, curvature, .. } => {
                Some(slope * x[0] + curvature * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
            }
            BoundaryPreset::Vortex { winding, .. } => {
                Some(T::lit(0.5 * winding as f64) * x[1].atan2(x[0]))
            }
            _ => None,
        }
    }

    fn magnitude(&self, outside: T) -> T {
        let (ratio, ramp) = match *self {
            BoundaryPreset::SmoothAngle { exterior_ratio, ramp, .. } => (exterior_ratio, ramp),
            BoundaryPreset::Vortex { exterior_ratio, ramp, .. } => (exterior_ratio, ramp),
            _ => return T::one(),
        };
        if outside <= T::zero() {
            return T::one();
        }
        let t = if ramp > T::zero() { (outside / ramp).min(T::one()) } else { T::one() };
        let s = t * t * (T::lit(3.0) - T::lit(2.0) * t);
        T::one() - (T::one() - ratio) * s
    }
}

/// Vacuum-valued order parameter for a molecular angle or director.
pub fn vacuum_point<T: Real>(bulk: &BulkPotential<T>, theta: T) -> Result<Vec<T>> {
    match (&bulk.model.manifold, &bulk.vacuum) {
        (_, Vacuum::Point(p)) if bulk.s0 == T::zero() => Ok(p.clone()),
        (Manifold::Circle, Vacuum::Circle { radius }) => {
            Ok(circle_sigma(theta).iter().map(|&c| c * *radius).collect())
        }
        (Manifold::Sphere, Vacuum::Uniaxial { order, .. }) => {
            let n = [theta.sin(), T::zero(), theta.cos()];
            Ok(sphere_sigma(&n).iter().map(|&c| c * *order).collect())
        }
        _ => Err(Error::InvalidInput("angle presets need an orbit-shaped vacuum".into())),
    }
}

/// Boundary datum on every cell of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub preset: BoundaryPreset<T>,
    pub m: usize,
    pub values: Vec<T>,
    /// Molecular angle per cell for the angle presets.
    pub angles: Option<Vec<T>>,
}

impl<T: Real> BoundaryData<T> {
    pub fn build(preset: BoundaryPreset<T>, domain: &Domain<T>, bulk: &BulkPotential<T>) -> Result<Self> {
        let m = bulk.m();
        let n = domain.len();
        let mut values = vec![T::zero(); n * m];
        let mut angles = None;
        match &preset {
            BoundaryPreset::Constant(v) => {
                if v.len() != m {
                    return Err(Error::InvalidInput(format!("constant boundary needs {m} components")));
                }
                for c in values.chunks_mut(m) {
                    c.copy_from_slice(v);
                }
            }
            BoundaryPreset::Vacuum => {
                let v = bulk.vacuum.representative(m);
                for c in values.chunks_mut(m) {
                    c.copy_from_slice(&v);
                }
            }
            _ => {
                let mut th = vec![T::zero(); n];
                for idx in 0..n {
                    let x = domain.coord(idx);
                    let t = preset.angle(&x).unwrap();
                    th[idx] = t;
                    let s = preset.magnitude(domain.outside_distance(&x));
                    let p = vacuum_point(bulk, t)?;
                    for (d, &c) in values[idx * m..(idx + 1) * m].iter_mut().zip(&p) {
                        *d = c * s;
                    }
                }
                angles = Some(th);
            }
        }
        let bd = BoundaryData { preset, m, values, angles };
        bd.validate(domain, bulk)?;
        Ok(bd)
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> &[T] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    /// Values must lie in the moment set everywhere and on the vacuum set in Ω.
    pub fn validate(&self, domain: &Domain<T>, bulk: &BulkPotential<T>) -> Result<()> {
        let tol = T::lit(1e-9) * (T::one() + bulk.s0);
        for idx in 0..domain.len() {
            let u = self.cell(idx);
            if !(bulk.model.dist_to_boundary(u) > T::zero()) {
                return Err(Error::InvalidInput(format!("boundary value at cell {idx} leaves the moment set")));
            }
            if domain.region(idx) == Region::Interior && bulk.vacuum.distance(u) > tol {
                return Err(Error::InvalidInput(format!("boundary value at interior cell {idx} is off the vacuum set")));
            }
        }
        Ok(())
    }
}
