use rayon::prelude::*;

use super::energy::gradient_density;
use super::manifold::ManifoldField;
use crate::real::Real;

/// Scaled Dirichlet densities `ρ⁻¹∫_{B_ρ(x)}|∇u₀|²` on a radii ladder and the
/// cells flagged at the smallest resolvable radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSetReport<T> {
    /// Resolvable radii (`ρ ≥ 4h`), decreasing.
    pub radii: Vec<T>,
    /// Radii discarded as unresolvable.
    pub dropped: Vec<T>,
    /// Ω cells, in the order of the density rows.
    pub cells: Vec<usize>,
    /// `densities[j][n]` for radius `j` and cell `cells[n]`.
    pub densities: Vec<Vec<T>>,
    pub threshold: T,
    pub flagged: Vec<usize>,
}

impl<T: Real> SingularSetReport<T> {
    /// Fraction of Ω cells flagged.
    pub fn flagged_fraction(&self) -> T {
        if self.cells.is_empty() {
            return T::zero();
        }
        T::from_usize_lossy(self.flagged.len()) / T::from_usize_lossy(self.cells.len())
    }

    /// Flags under a different threshold, reusing the densities.
    pub fn reflag(&self, threshold: T) -> Vec<usize> {
        match self.densities.last() {
            Some(row) => self.cells.iter().zip(row).filter(|(_, &d)| d > threshold).map(|(&c, _)| c).collect(),
            None => Vec::new(),
        }
    }
}

/// Ball offsets `|z| < ρ` in cells.
fn ball_offsets(rho_cells: f64) -> Vec<[isize; 3]> {
    let r = rho_cells.ceil() as isize;
    let mut out = Vec::new();
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                if ((i * i + j * j + k * k) as f64) < rho_cells * rho_cells {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Sums `per` over `B_ρ(x)` intersected with the box.
fn ball_sum<T: Real>(dims: [usize; 3], per: &[T], x: usize, offsets: &[[isize; 3]]) -> T {
    let [n0, n1, n2] = dims;
    let (i, j, k) = ((x / (n1 * n2)) as isize, ((x / n2) % n1) as isize, (x % n2) as isize);
    let mut s = T::zero();
    for z in offsets {
        let (a, b, c) = (i + z[0], j + z[1], k + z[2]);
        if a < 0 || b < 0 || c < 0 || a >= n0 as isize || b >= n1 as isize || c >= n2 as isize {
            continue;
        }
        s = s + per[((a as usize) * n1 + b as usize) * n2 + c as usize];
    }
    s
}

/// Flags Ω cells whose scaled density at the smallest resolvable radius exceeds `threshold`.
pub fn singular_set<T: Real>(u0: &ManifoldField<T>, radii: &[T], threshold: T) -> SingularSetReport<T> {
    let dom = &u0.domain;
    let h = dom.h;
    let mut keep: Vec<T> = radii.iter().copied().filter(|&r| r >= T::lit(4.0) * h * (T::one() - T::lit(1e-12))).collect();
    let dropped = radii.iter().copied().filter(|r| !keep.contains(r)).collect();
    keep.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let dens = gradient_density(u0);
    let cells = dom.interior_indices();
    let h3 = dom.cell_volume();
    let densities: Vec<Vec<T>> = keep
        .iter()
        .map(|&rho| {
            let off = ball_offsets((rho / h).as_f64());
            cells.par_iter().map(|&x| ball_sum(dom.dims, &dens, x, &off) * h3 / rho).collect()
        })
        .collect();
    let mut rep = SingularSetReport { radii: keep, dropped, cells, densities, threshold, flagged: Vec::new() };
    rep.flagged = rep.reflag(threshold);
    rep
}
