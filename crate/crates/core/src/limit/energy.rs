use rayon::prelude::*;

use super::manifold::ManifoldField;
use crate::field::Domain;
use crate::kernel::ElasticTensor;
use crate::real::Real;

/// Central-difference gradient `ξ_{αi} = ∂_i u_α` (row-major `m×3`) at cell `x`;
/// one-sided at the box faces.
pub fn central_gradient<T: Real>(domain: &Domain<T>, values: &[T], m: usize, x: usize) -> Vec<T> {
    let mut xi = vec![T::zero(); 3 * m];
    let h = domain.h;
    for i in 0..3 {
        let f = domain.neighbour(x, i, true);
        let b = domain.neighbour(x, i, false);
        let (p, q, d) = match (f, b) {
            (Some(f), Some(b)) => (f, b, h + h),
            (Some(f), None) => (f, x, h),
            (None, Some(b)) => (x, b, h),
            (None, None) => continue,
        };
        for a in 0..m {
            xi[a * 3 + i] = (values[p * m + a] - values[q * m + a]) / d;
        }
    }
    xi
}

/// `Σ_{x∈Ω} L∇u·∇u h³` with central differences.
pub fn limit_energy<T: Real>(u: &ManifoldField<T>, l: &ElasticTensor<T>) -> T {
    limit_energy_masked(u, l, &u.domain.interior_mask())
}

/// `Σ_{x∈G} L∇u·∇u h³` over the cells flagged in `mask`.
pub fn limit_energy_masked<T: Real>(u: &ManifoldField<T>, l: &ElasticTensor<T>, mask: &[bool]) -> T {
    let dom = &u.domain;
    let per: Vec<T> = (0..dom.len())
        .into_par_iter()
        .map(|x| if mask[x] { l.contract(&central_gradient(dom, &u.values, u.m, x)) } else { T::zero() })
        .collect();
    chunked(&per) * dom.cell_volume()
}

/// `|∇u|²` per cell (central differences).
pub fn gradient_density<T: Real>(u: &ManifoldField<T>) -> Vec<T> {
    let dom = &u.domain;
    (0..dom.len())
        .into_par_iter()
        .map(|x| central_gradient(dom, &u.values, u.m, x).iter().fold(T::zero(), |s, &g| s + g * g))
        .collect()
}

/// `Σ_{x∈Ω}|∇u|²h³` with central differences.
pub fn dirichlet_energy<T: Real>(u: &ManifoldField<T>) -> T {
    let mask = u.domain.interior_mask();
    let d = gradient_density(u);
    let per: Vec<T> = d.iter().zip(&mask).map(|(&v, &b)| if b { v } else { T::zero() }).collect();
    chunked(&per) * u.domain.cell_volume()
}

pub(crate) fn chunked<T: Real>(v: &[T]) -> T {
    let parts: Vec<T> = v.par_chunks(4096).map(|c| c.iter().fold(T::zero(), |s, &x| s + x)).collect();
    parts.iter().fold(T::zero(), |s, &x| s + x)
}

/// One-sided difference `D^s` for the corner `corner` (bit `i` set: forward in axis `i`).
/// `None` when a neighbour is missing.
fn corner_gradient<T: Real>(dom: &Domain<T>, v: &[T], m: usize, x: usize, corner: usize) -> Option<(Vec<T>, [usize; 3])> {
    let mut xi = vec![T::zero(); 3 * m];
    let mut nb = [0usize; 3];
    for i in 0..3 {
        let fwd = corner >> i & 1 == 1;
        let y = dom.neighbour(x, i, fwd)?;
        nb[i] = y;
        for a in 0..m {
            let d = if fwd { v[y * m + a] - v[x * m + a] } else { v[x * m + a] - v[y * m + a] };
            xi[a * 3 + i] = d / dom.h;
        }
    }
    Some((xi, nb))
}

/// Ω cells and their axis neighbours: every lattice edge touching Ω then
/// carries the same weight.
fn active<T: Real>(dom: &Domain<T>, x: usize) -> bool {
    dom.is_interior(x)
        || (0..3).any(|i| [true, false].iter().any(|&f| dom.neighbour(x, i, f).is_some_and(|y| dom.is_interior(y))))
}

/// Compact discretisation `(h³/8) Σ_x Σ_s L D^s u·D^s u` (one-sided
/// differences over the eight corners) over Ω and its lattice neighbours.
/// Free of checkerboard null modes, so it is the functional minimised by
/// [`harmonic_minimize`](super::harmonic_minimize).
pub fn compact_energy<T: Real>(u: &ManifoldField<T>, l: &ElasticTensor<T>) -> T {
    let dom = &u.domain;
    let per: Vec<T> = (0..dom.len())
        .into_par_iter()
        .map(|x| {
            if !active(dom, x) {
                return T::zero();
            }
            (0..8).fold(T::zero(), |s, c| match corner_gradient(dom, &u.values, u.m, x, c) {
                Some((xi, _)) => s + l.contract(&xi),
                None => s,
            })
        })
        .collect();
    chunked(&per) * dom.cell_volume() / T::lit(8.0)
}

/// Euclidean gradient of [`compact_energy`] divided by `h³`, on every cell
/// (zero off Ω, where values are fixed).
pub fn compact_gradient<T: Real>(u: &ManifoldField<T>, l: &ElasticTensor<T>) -> Vec<T> {
    let dom = &u.domain;
    let m = u.m;
    let n = dom.len();
    let w = 3 * m;
    // (Lξ)/4h per active cell and corner; zero where the corner is incomplete
    let mut g = vec![T::zero(); n * 8 * w];
    g.par_chunks_mut(8 * w).enumerate().for_each(|(x, gx)| {
        if !active(dom, x) {
            return;
        }
        for c in 0..8 {
            if let Some((xi, _)) = corner_gradient(dom, &u.values, m, x, c) {
                for (o, v) in gx[c * w..(c + 1) * w].iter_mut().zip(l.apply(&xi)) {
                    *o = T::lit(0.25) * v / dom.h;
                }
            }
        }
    });
    let mut grad = vec![T::zero(); n * m];
    grad.par_chunks_mut(m).enumerate().for_each(|(y, gy)| {
        if !dom.is_interior(y) {
            return;
        }
        for c in 0..8 {
            for i in 0..3 {
                let fwd = c >> i & 1 == 1;
                // own term: −sgn·w
                for a in 0..m {
                    let v = g[(y * 8 + c) * w + a * 3 + i];
                    gy[a] = if fwd { gy[a] - v } else { gy[a] + v };
                }
                // from x = y ∓ e_i whose corner c reaches y
                if let Some(x) = dom.neighbour(y, i, !fwd) {
                    for a in 0..m {
                        let v = g[(x * 8 + c) * w + a * 3 + i];
                        gy[a] = if fwd { gy[a] + v } else { gy[a] - v };
                    }
                }
            }
        }
    });
    grad
}
