use rayon::prelude::*;

use super::moments::{compute_moments_with, QuadratureConfig};
use super::spec::{eigen_range, evaluate_kernel, KernelSpec};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::real::Real;

/// Options for [`sample_on_lattice`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    /// Allowed fraction of the envelope mass cut off by the stencil.
    pub tail_tol: f64,
    /// Enforce the cells-per-feature rule of the kernel profiles.
    pub check_resolution: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { tail_tol: 1e-10, check_resolution: true }
    }
}

/// `K_ε(z) = ε⁻³K(z/ε)` sampled at lattice offsets `z = h·(i,j,k)`,
/// `|z| ≤ R_trunc`.
#[derive(Debug, Clone)]
pub struct SampledKernel<T> {
    pub spec: KernelSpec<T>,
    pub eps: T,
    pub h: T,
    pub m: usize,
    /// Stencil half-width in cells.
    pub radius: usize,
    /// Physical truncation radius.
    pub r_trunc: T,
    /// `K_ε` is a multiple of the identity; `values` then holds one scalar per offset.
    pub isotropic: bool,
    pub values: Vec<T>,
    /// `g_ε` per offset.
    pub g: Vec<T>,
    /// Relative envelope mass outside the stencil.
    pub tail_mass: T,
    /// Markov-type bound `m_q R^{-q} / ∫g` on the truncated `g` mass (kernel units).
    pub tail_bound: T,
    /// `Σ K_ε h³`, row-major `m×m`.
    pub int_k: Vec<T>,
    /// Smallest sampled `g_ε`.
    pub g_min: T,
    /// `max λ_max/g` over samples (`K₅` on the lattice).
    pub k5_measured: T,
}

impl<T: Real> SampledKernel<T> {
    #[inline]
    pub fn width(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn offset_index(&self, di: isize, dj: isize, dk: isize) -> usize {
        let n = self.radius as isize;
        let w = self.width() as isize;
        (((di + n) * w + (dj + n)) * w + (dk + n)) as usize
    }

    /// Entries stored per offset.
    #[inline]
    pub fn block(&self) -> usize {
        if self.isotropic {
            1
        } else {
            self.m * self.m
        }
    }

    /// Full `m×m` matrix at an offset.
    pub fn matrix_at(&self, di: isize, dj: isize, dk: isize) -> Vec<T> {
        let idx = self.offset_index(di, dj, dk);
        let m = self.m;
        if self.isotropic {
            let mut out = vec![T::zero(); m * m];
            for a in 0..m {
                out[a * m + a] = self.values[idx];
            }
            out
        } else {
            self.values[idx * m * m..(idx + 1) * m * m].to_vec()
        }
    }

    /// Nonzero offsets with their storage index.
    pub fn support(&self) -> Vec<([isize; 3], usize)> {
        let n = self.radius as isize;
        let b = self.block();
        let mut out = Vec::new();
        for di in -n..=n {
            for dj in -n..=n {
                for dk in -n..=n {
                    let idx = self.offset_index(di, dj, dk);
                    if self.values[idx * b..(idx + 1) * b].iter().any(|&x| x != T::zero()) {
                        out.push(([di, dj, dk], idx));
                    }
                }
            }
        }
        out
    }

    /// Same samples restricted to offsets with every component `≤ reach`.
    pub fn truncated(&self, reach: usize) -> SampledKernel<T> {
        if reach >= self.radius {
            return self.clone();
        }
        let b = self.block();
        let nw = 2 * reach + 1;
        let r = reach as isize;
        let mut values = vec![T::zero(); nw * nw * nw * b];
        let mut g = vec![T::zero(); nw * nw * nw];
        for di in -r..=r {
            for dj in -r..=r {
                for dk in -r..=r {
                    let src = self.offset_index(di, dj, dk);
                    let dst = (((di + r) as usize * nw + (dj + r) as usize) * nw) + (dk + r) as usize;
                    values[dst * b..(dst + 1) * b].copy_from_slice(&self.values[src * b..(src + 1) * b]);
                    g[dst] = self.g[src];
                }
            }
        }
        SampledKernel { radius: reach, values, g, ..self.clone() }
    }

    /// `ε⁻²`.
    pub fn inv_eps2(&self) -> T {
        T::one() / (self.eps * self.eps)
    }

    pub fn cell_volume(&self) -> T {
        self.h * self.h * self.h
    }
}

/// Envelope mass of the kernel outside radius `r` (kernel units), `None` if infinite.
fn tail_envelope_mass<T: Real>(spec: &KernelSpec<T>, r: T) -> Option<T> {
    let breaks = spec.breaks();
    let last = breaks.last().copied().unwrap_or(T::zero());
    let four_pi = T::lit(4.0) * T::PI();
    let mut total = T::zero();
    if r < last {
        let mut pts = vec![r];
        pts.extend(breaks.iter().copied().filter(|&b| b > r));
        let (gx, gw) = gauss_legendre(16);
        for seg in pts.windows(2) {
            let panels = 16;
            let hp = (seg[1] - seg[0]) / T::from_usize_lossy(panels);
            for p in 0..panels {
                let lo = seg[0] + hp * T::from_usize_lossy(p);
                for (x, w) in gx.iter().zip(&gw) {
                    let s = lo + hp * T::lit(0.5 * (x + 1.0));
                    total = total + hp * T::lit(0.5 * w) * spec.envelope(s) * s * s;
                }
            }
        }
    }
    if let Some(p) = spec.tail_power() {
        if p >= T::lit(-3.0) {
            return None;
        }
        let l = r.max(last);
        total = total + spec.envelope(l) * l.powi(3) / (-p - T::lit(3.0));
    }
    Some(four_pi * total)
}

/// Smallest radius whose outside envelope mass is at most `tol` of the total.
pub fn truncation_radius<T: Real>(spec: &KernelSpec<T>, tol: T) -> Result<T> {
    if spec.is_zero() {
        return Ok(T::zero());
    }
    let total = tail_envelope_mass(spec, T::zero())
        .ok_or_else(|| Error::PreconditionNotMet("kernel envelope is not integrable".into()))?;
    if let Some(r) = spec.support_radius() {
        if tol <= T::zero() {
            return Ok(r);
        }
    }
    let frac = |r: T| tail_envelope_mass(spec, r).unwrap() / total;
    let mut hi = spec.breaks().last().copied().unwrap_or(T::one());
    while frac(hi) > tol {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..100 {
        let mid = (lo + hi) * T::lit(0.5);
        if frac(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // a support edge within bisection noise is kept whole
    if let Some(r) = spec.support_radius() {
        if r - hi < T::lit(1e-6) * r {
            return Ok(r);
        }
    }
    Ok(hi)
}

/// Lattice samples of `K_ε` on spacing `h`.
pub fn sample_on_lattice<T: Real>(
    spec: &KernelSpec<T>,
    eps: T,
    h: T,
    cfg: &SampleConfig,
) -> Result<SampledKernel<T>> {
    if !(eps > T::zero()) || !(h > T::zero()) {
        return Err(Error::InvalidInput("eps and h must be positive".into()));
    }
    if cfg.check_resolution {
        if let Some((len, cells)) = spec.resolution_demand() {
            let need = h * T::from_usize_lossy(cells);
            if eps * len < need * (T::one() - T::lit(1e-9)) {
                return Err(Error::ResolutionMismatch(format!(
                    "kernel feature eps*{:.4} = {:.4} needs {} cells of h = {:.4}",
                    len.as_f64(),
                    (eps * len).as_f64(),
                    cells,
                    h.as_f64()
                )));
            }
        }
    }
    let r_kernel = truncation_radius(spec, T::lit(cfg.tail_tol))?;
    let r_trunc = eps * r_kernel;
    let radius = (r_trunc / h).floor().to_usize().unwrap_or(0);
    let m = spec.m;
    let isotropic = spec.is_isotropic();
    let block = if isotropic { 1 } else { m * m };
    let w = 2 * radius + 1;
    let n = radius as isize;
    let inv_e3 = T::one() / (eps * eps * eps);

    // one slab per first offset; mirrored entries are copied afterwards
    let slabs: Vec<(Vec<T>, Vec<T>)> = (-n..=n)
        .into_par_iter()
        .map(|di| {
            let mut vals = vec![T::zero(); w * w * block];
            let mut gs = vec![T::zero(); w * w];
            for dj in -n..=n {
                for dk in -n..=n {
                    let z = [
                        h * T::lit(di as f64),
                        h * T::lit(dj as f64),
                        h * T::lit(dk as f64),
                    ];
                    let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
                    if r2.sqrt() > r_trunc {
                        continue;
                    }
                    let zs = [z[0] / eps, z[1] / eps, z[2] / eps];
                    let loc = ((dj + n) as usize) * w + (dk + n) as usize;
                    if isotropic {
                        let v = spec.f1.value(r2.sqrt() / eps) * inv_e3;
                        vals[loc] = v;
                        gs[loc] = v;
                    } else {
                        let k = evaluate_kernel(spec, &zs);
                        for (d, s) in vals[loc * block..(loc + 1) * block].iter_mut().zip(&k) {
                            *d = *s * inv_e3;
                        }
                        gs[loc] = eigen_range(spec, &zs).0 * inv_e3;
                    }
                }
            }
            (vals, gs)
        })
        .collect();
    let mut values = Vec::with_capacity(w * w * w * block);
    let mut g = Vec::with_capacity(w * w * w);
    for (v, gs) in slabs {
        values.extend(v);
        g.extend(gs);
    }
    // exact evenness: copy each sample onto its mirror
    let total = w * w * w;
    for idx in 0..total {
        let mirror = total - 1 - idx;
        if mirror < idx {
            let (a, b) = values.split_at_mut(idx * block);
            b[..block].copy_from_slice(&a[mirror * block..(mirror + 1) * block]);
            g[idx] = g[mirror];
        }
    }

    let vol = h * h * h;
    let mut int_k = vec![T::zero(); m * m];
    let mut g_min = T::infinity();
    let mut k5 = T::one();
    for idx in 0..total {
        let s = &values[idx * block..(idx + 1) * block];
        if isotropic {
            for a in 0..m {
                int_k[a * m + a] = int_k[a * m + a] + s[0] * vol;
            }
        } else {
            for (acc, &x) in int_k.iter_mut().zip(s) {
                *acc = *acc + x * vol;
            }
        }
        g_min = g_min.min(g[idx]);
    }
    if !isotropic {
        for idx in 0..total {
            if values[idx * block..(idx + 1) * block].iter().all(|&x| x == T::zero()) {
                continue;
            }
            let w = crate::linalg::sym_eigenvalues(&values[idx * block..(idx + 1) * block], m);
            let hi = w[m - 1];
            if hi > T::zero() {
                k5 = if g[idx] > T::zero() { k5.max(hi / g[idx]) } else { T::infinity() };
            }
        }
    }

    let tail_mass = if spec.is_zero() {
        T::zero()
    } else {
        tail_envelope_mass(spec, r_kernel).unwrap_or(T::infinity())
            / tail_envelope_mass(spec, T::zero()).unwrap_or(T::one())
    };
    let qcfg = QuadratureConfig { rel_tol: 1e-6, ..Default::default() };
    let tail_bound = match compute_moments_with(spec, &qcfg) {
        Ok(mo) if mo.int_g > T::zero() && r_kernel > T::zero() => mo.mq * r_kernel.powf(-spec.q) / mo.int_g,
        _ => T::zero(),
    };

    Ok(SampledKernel {
        spec: spec.clone(),
        eps,
        h,
        m,
        radius,
        r_trunc,
        isotropic,
        values,
        g,
        tail_mass,
        tail_bound,
        int_k,
        g_min,
        k5_measured: k5,
    })
}
