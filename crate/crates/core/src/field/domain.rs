use crate::error::{Error, Result};
use crate::real::Real;

/// Cell classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Region {
    /// Inside Ω.
    Interior = 0,
    /// Boundary layer `Ω_ε ∖ Ω`.
    Layer = 1,
    Exterior = 2,
}

impl Region {
    pub fn from_tag(t: u8) -> Option<Region> {
        match t {
            0 => Some(Region::Interior),
            1 => Some(Region::Layer),
            2 => Some(Region::Exterior),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `|x| < R`.
    Ball,
    /// `max |xᵢ| < R`.
    Cube,
}

/// Cubic lattice box centred at the origin with Ω, the layer and the exterior tagged.
///
/// Cell `(i,j,k)` has flat index `(i·n₁ + j)·n₂ + k` and centre `origin + h·(i,j,k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T> {
    pub dims: [usize; 3],
    pub h: T,
    pub origin: [T; 3],
    pub geometry: Geometry,
    /// Radius (ball) or half-width (cube) of Ω.
    pub radius: T,
    /// Physical thickness of `Ω_ε ∖ Ω`.
    pub layer: T,
    pub regions: Vec<Region>,
    pub n_interior: usize,
}

impl<T: Real> Domain<T> {
    /// `cells` lattice cells across Ω, `pad` extra cells on every side.
    pub fn new(geometry: Geometry, radius: T, cells: usize, pad: usize, layer: T) -> Result<Self> {
        if cells == 0 || !(radius > T::zero()) {
            return Err(Error::InvalidInput("domain needs a positive radius and at least one cell".into()));
        }
        if layer < T::zero() {
            return Err(Error::InvalidInput("layer thickness must be nonnegative".into()));
        }
        let h = T::lit(2.0) * radius / T::from_usize_lossy(cells);
        let n = cells + 2 * pad;
        let o = -h * T::from_usize_lossy(n - 1) * T::lit(0.5);
        let mut d = Domain {
            dims: [n; 3],
            h,
            origin: [o; 3],
            geometry,
            radius,
            layer,
            regions: Vec::new(),
            n_interior: 0,
        };
        d.regions = (0..d.len())
            .map(|idx| {
                let dist = d.outside_distance(&d.coord(idx));
                if dist < T::zero() {
                    Region::Interior
                } else if dist <= layer {
                    Region::Layer
                } else {
                    Region::Exterior
                }
            })
            .collect();
        d.n_interior = d.regions.iter().filter(|&&r| r == Region::Interior).count();
        Ok(d)
    }

    /// Pads so that the stencil of half-width `reach` cells and the layer both fit in the box.
    pub fn with_reach(geometry: Geometry, radius: T, cells: usize, reach: usize, layer: T) -> Result<Self> {
        let h = T::lit(2.0) * radius / T::from_usize_lossy(cells.max(1));
        let layer_cells = if layer.is_finite() { (layer / h).ceil().to_usize().unwrap_or(0) } else { 0 };
        Self::new(geometry, radius, cells, reach.max(layer_cells) + 1, layer)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        [idx / (self.dims[1] * self.dims[2]), j, k]
    }

    pub fn coord(&self, idx: usize) -> [T; 3] {
        let c = self.ijk(idx);
        [
            self.origin[0] + self.h * T::from_usize_lossy(c[0]),
            self.origin[1] + self.h * T::from_usize_lossy(c[1]),
            self.origin[2] + self.h * T::from_usize_lossy(c[2]),
        ]
    }

    pub fn cell_volume(&self) -> T {
        self.h * self.h * self.h
    }

    /// Signed distance from Ω (negative inside).
    pub fn outside_distance(&self, x: &[T; 3]) -> T {
        match self.geometry {
            Geometry::Ball => (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - self.radius,
            Geometry::Cube => {
                let d: Vec<T> = x.iter().map(|&c| c.fabs() - self.radius).collect();
                let out = d.iter().fold(T::zero(), |s, &v| s + v.max(T::zero()) * v.max(T::zero())).sqrt();
                if out > T::zero() {
                    out
                } else {
                    d.iter().fold(T::neg_infinity(), |a, &v| a.max(v))
                }
            }
        }
    }

    #[inline]
    pub fn region(&self, idx: usize) -> Region {
        self.regions[idx]
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.regions[idx] == Region::Interior
    }

    /// `Ω_ε = Ω ∪ layer`.
    #[inline]
    pub fn in_omega_eps(&self, idx: usize) -> bool {
        self.regions[idx] != Region::Exterior
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    /// `|Ω|` as counted on the lattice.
    pub fn interior_volume(&self) -> T {
        T::from_usize_lossy(self.n_interior) * self.cell_volume()
    }

    /// Cells whose centres lie in the open ball `B_ρ(x₀)`.
    pub fn ball_mask(&self, x0: &[T; 3], rho: T) -> Vec<bool> {
        (0..self.len())
            .map(|idx| {
                let x = self.coord(idx);
                let d2 = (0..3).fold(T::zero(), |s, a| s + (x[a] - x0[a]) * (x[a] - x0[a]));
                d2 < rho * rho
            })
            .collect()
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.regions.iter().map(|&r| r == Region::Interior).collect()
    }

    /// Cell whose centre is within `h/4` of `x`, if any; used to match lattices with equal `h`.
    pub fn locate(&self, x: &[T; 3]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let s = (x[a] - self.origin[a]) / self.h;
            let r = s.round();
            if (s - r).fabs() > T::lit(0.25) || r < T::zero() || r >= T::from_usize_lossy(self.dims[a]) {
                return None;
            }
            c[a] = r.as_f64() as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    /// Lattice neighbours `idx ± e_a`, when inside the box.
    pub fn neighbour(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let mut c = self.ijk(idx);
        if forward {
            if c[axis] + 1 >= self.dims[axis] {
                return None;
            }
            c[axis] += 1;
        } else {
            if c[axis] == 0 {
                return None;
            }
            c[axis] -= 1;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    /// Trilinear interpolation of an `m`-component cell field at `x`; `None` outside the cell-centre hull.
    pub fn interpolate(&self, values: &[T], m: usize, x: &[T; 3]) -> Option<Vec<T>> {
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..3 {
            let s = (x[a] - self.origin[a]) / self.h;
            let last = T::from_usize_lossy(self.dims[a] - 1);
            if s < -T::lit(1e-12) || s > last + T::lit(1e-12) {
                return None;
            }
            let s = s.max(T::zero()).min(last);
            let f = s.floor().min(last - T::one()).max(T::zero());
            base[a] = f.to_usize().unwrap_or(0);
            frac[a] = s - f;
        }
        let mut out = vec![T::zero(); m];
        for corner in 0..8usize {
            let mut w = T::one();
            let mut c = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w = w * frac[a];
                    c[a] = (c[a] + 1).min(self.dims[a] - 1);
                } else {
                    w = w * (T::one() - frac[a]);
                }
            }
            if w == T::zero() {
                continue;
            }
            let idx = self.index(c[0], c[1], c[2]);
            for (o, &v) in out.iter_mut().zip(&values[idx * m..(idx + 1) * m]) {
                *o = *o + w * v;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_partition_box() {
        let d = Domain::<f64>::new(Geometry::Ball, 1.0, 8, 3, 0.3).unwrap();
        assert_eq!(d.dims, [14; 3]);
        let counts = [Region::Interior, Region::Layer, Region::Exterior]
            .map(|r| d.regions.iter().filter(|&&x| x == r).count());
        assert_eq!(counts.iter().sum::<usize>(), d.len());
        assert!(counts.iter().all(|&c| c > 0));
        assert_eq!(d.n_interior, counts[0]);
        // the box is centred
        let c = d.coord(0);
        let e = d.coord(d.len() - 1);
        assert!((c[0] + e[0]).abs() < 1e-14);
    }

    #[test]
    fn index_roundtrip() {
        let d = Domain::<f64>::new(Geometry::Cube, 1.0, 4, 1, 0.0).unwrap();
        for idx in 0..d.len() {
            let [i, j, k] = d.ijk(idx);
            assert_eq!(d.index(i, j, k), idx);
        }
        assert_eq!(d.n_interior, 64);
    }

    #[test]
    fn trilinear_reproduces_linear_fields() {
        let d = Domain::<f64>::new(Geometry::Ball, 1.0, 6, 1, 0.0).unwrap();
        let v: Vec<f64> = (0..d.len())
            .flat_map(|i| {
                let x = d.coord(i);
                [1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2], x[2]]
            })
            .collect();
        let p = [0.123, -0.31, 0.4];
        let got = d.interpolate(&v, 2, &p).unwrap();
        assert!((got[0] - (1.0 + 0.246 + 0.31 + 0.2)).abs() < 1e-12);
        assert!((got[1] - 0.4).abs() < 1e-12);
        assert!(d.interpolate(&v, 2, &[5.0, 0.0, 0.0]).is_none());
    }
}
