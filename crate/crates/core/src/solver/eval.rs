use rayon::prelude::*;

use crate::field::{InteractionMode, OrderField, Problem, Region};
use crate::real::{dot, Real};

/// Incremental primal energy for fields that differ only on Ω.
///
/// With `f = K_ε∗(χ_ext u_bd)` and the fixed-cell self-term `c_ext`,
/// `Σ_box u·(K_ε∗u) = Σ_Ω u·(K_ε∗u + f) + c_ext`.
#[derive(Debug, Clone)]
pub(crate) struct Evaluator<'a, T: Real> {
    pub p: &'a Problem<T>,
    pub mode: InteractionMode,
    f: Vec<T>,
    c_ext: T,
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn new(p: &'a Problem<T>, mode: InteractionMode) -> Self {
        let m = p.m();
        let dom = &p.domain;
        let mut fixed = vec![T::zero(); dom.len() * m];
        for x in 0..dom.len() {
            let keep = match mode {
                InteractionMode::Full => !dom.is_interior(x),
                InteractionMode::FiniteThickness => dom.region(x) == Region::Layer,
            };
            if keep {
                fixed[x * m..(x + 1) * m].copy_from_slice(p.boundary.cell(x));
            }
        }
        let kf = p.conv.apply(&fixed);
        let c_ext = fixed.chunks(m).zip(kf.chunks(m)).fold(T::zero(), |s, (a, b)| s + dot(a, b));
        let f = p.interior.iter().flat_map(|&x| kf[x * m..(x + 1) * m].to_vec()).collect();
        Evaluator { p, mode, f, c_ext }
    }

    /// `K_ε∗u` on interior cells.
    pub fn ku(&self, u: &OrderField<T>) -> Vec<T> {
        self.p.interaction_interior(&u.values, self.mode)
    }

    /// Primal energy (constant included) from interior data.
    pub fn energy(&self, u: &OrderField<T>, ku: &[T], psi_s: &[T]) -> T {
        let m = self.p.m();
        let parts: Vec<T> = self
            .p
            .interior
            .par_chunks(2048)
            .enumerate()
            .map(|(c, xs)| {
                let mut s = T::zero();
                for (n, &x) in xs.iter().enumerate() {
                    let i = (c * 2048 + n) * m;
                    let ux = u.cell(x);
                    for a in 0..m {
                        s = s + ux[a] * (ku[i + a] + self.f[i + a]);
                    }
                }
                s
            })
            .collect();
        let pair = parts.into_iter().fold(T::zero(), |a, b| a + b) + self.c_ext;
        let psi = psi_s.iter().fold(T::zero(), |a, &b| a + b);
        let w = self.p.domain.cell_volume() * self.p.kernel.inv_eps2();
        -T::lit(0.5) * w * pair + w * psi + self.p.c_eps()
    }

    /// `E(v) − E(u)` for fields equal off Ω.
    ///
    /// The direct form `−(w/2)Σ δ·(Ku + Kv) + wΣ[ψ_s(v) − ψ_s(u)]` loses everything to
    /// cancellation once `δ` is tiny, so below its round-off floor the trapezoid form
    /// `(w/2)Σ δ·(Λ(u) + Λ(v) − Ku − Kv)` is used instead (third-order accurate, no cancellation).
    /// Returns the estimate and its round-off bound.
    pub fn delta(&self, u: &OrderField<T>, v: &OrderField<T>, a: Side<'_, T>, b: Side<'_, T>) -> (T, T) {
        let m = self.p.m();
        let w = self.p.domain.cell_volume() * self.p.kernel.inv_eps2();
        let half = T::lit(0.5);
        let parts: Vec<[T; 5]> = self
            .p
            .interior
            .par_chunks(2048)
            .enumerate()
            .map(|(c, xs)| {
                let mut acc = [T::zero(); 5];
                for (n, &x) in xs.iter().enumerate() {
                    let cell = c * 2048 + n;
                    let (ux, vx) = (u.cell(x), v.cell(x));
                    for k in 0..m {
                        let i = cell * m + k;
                        let d = vx[k] - ux[k];
                        let kk = a.ku[i] + b.ku[i];
                        acc[0] = acc[0] + d * kk;
                        acc[1] = acc[1] + d.fabs() * (a.ku[i].fabs() + b.ku[i].fabs());
                        let g = a.b[i] + b.b[i] - kk;
                        acc[3] = acc[3] + d * g;
                        acc[4] = acc[4] + (d * g).fabs();
                        acc[2] = acc[2] + (a.b[i] * ux[k]).fabs() + (b.b[i] * vx[k]).fabs();
                    }
                    acc[0] = acc[0] - (b.psi_s[cell] - a.psi_s[cell]) * T::lit(2.0);
                    // ψ_s = b·u − lnZ(b) carries round-off of order its parts, not its value
                    acc[2] = acc[2] + b.psi_s[cell].fabs() + a.psi_s[cell].fabs() + T::lit(2.0);
                }
                acc
            })
            .collect();
        let mut s = [T::zero(); 5];
        for p in parts {
            for k in 0..5 {
                s[k] = s[k] + p[k];
            }
        }
        let unit = T::lit(16.0) * T::eps() * w;
        let direct = -half * w * s[0];
        let direct_bound = unit * (half * s[1] + s[2]);
        if direct.fabs() > T::lit(1e3) * direct_bound {
            (direct, direct_bound)
        } else {
            (half * w * s[3], unit * s[4])
        }
    }
}

/// Per-state data entering [`Evaluator::delta`].
#[derive(Clone, Copy)]
pub(crate) struct Side<'a, T> {
    pub ku: &'a [T],
    pub b: &'a [T],
    pub psi_s: &'a [T],
}
