use crate::error::Result;
use crate::field::OrderField;
use crate::limit::{transfer, ManifoldField};
use crate::real::Real;

/// Sup-norm distances to the limit off and on the dilated flagged set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformRow<T> {
    pub eps: T,
    pub sup_off: T,
    /// Zero when nothing is flagged.
    pub sup_on: T,
    pub cells_off: usize,
    pub cells_on: usize,
}

/// Mask on the lattice of `u0` of cells within `dilation` of a flagged cell.
fn dilate<T: Real>(u0: &ManifoldField<T>, flagged: &[usize], dilation: T) -> Vec<bool> {
    let dom = &u0.domain;
    let mut out = vec![false; dom.len()];
    for &f in flagged {
        for (x, b) in dom.ball_mask(&dom.coord(f), dilation + dom.h * T::lit(1e-9)).into_iter().enumerate() {
            out[x] |= b;
        }
        out[f] = true;
    }
    out
}

/// `sup_{Ω∖D}|u_ε − u₀|` and `sup_{Ω∩D}|u_ε − u₀|` with `D` the flagged set dilated by `dilation`.
pub fn uniform_convergence_report<T: Real>(
    seq: &[&OrderField<T>],
    u0: &ManifoldField<T>,
    flagged: &[usize],
    dilation: T,
) -> Result<Vec<UniformRow<T>>> {
    let near0 = dilate(u0, flagged, dilation);
    let mut rows = Vec::with_capacity(seq.len());
    for u in seq {
        let v0 = transfer(u0, &u.domain)?;
        let mut row = UniformRow { eps: u.eps, sup_off: T::zero(), sup_on: T::zero(), cells_off: 0, cells_on: 0 };
        for x in u.domain.interior_indices() {
            let d = u.cell(x).iter().zip(v0.cell(x)).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b)).sqrt();
            let near = u0.domain.locate(&u.domain.coord(x)).is_some_and(|y| near0[y]);
            if near {
                row.sup_on = row.sup_on.max(d);
                row.cells_on += 1;
            } else {
                row.sup_off = row.sup_off.max(d);
                row.cells_off += 1;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
