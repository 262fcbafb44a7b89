use rayon::prelude::*;

use super::energy::{compact_energy, compact_gradient, limit_energy};
use super::manifold::ManifoldField;
use crate::error::{Error, Result};
use crate::field::Domain;
use crate::kernel::ElasticTensor;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicConfig {
    /// Stationarity target: largest per-cell projected gradient density.
    pub tol: f64,
    pub max_iter: usize,
    /// Random interpolant starts tried besides the given field.
    pub n_random: usize,
    pub random_amplitude: f64,
    pub seed: u64,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        HarmonicConfig { tol: 1e-7, max_iter: 50_000, n_random: 0, random_amplitude: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicResult<T> {
    pub field: ManifoldField<T>,
    /// Minimised compact energy.
    pub energy: T,
    /// Central-difference limit energy of the output.
    pub limit_energy: T,
    pub stationarity: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> HarmonicResult<T> {
    pub fn check(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterations { iterations: self.iterations, residual: self.stationarity.as_f64() })
        }
    }
}

/// Largest `|P(u − τG) − u|/τ` over Ω: the tangential part of `G` for small `τ`.
fn stationarity<T: Real>(u: &ManifoldField<T>, g: &[T], tau: T) -> T {
    let m = u.m;
    u.domain
        .interior_indices()
        .par_iter()
        .map(|&x| {
            let c = u.cell(x);
            let trial: Vec<T> = (0..m).map(|a| c[a] - tau * g[x * m + a]).collect();
            let p = u.vacuum.project(&trial);
            p.iter().zip(c).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b)).sqrt() / tau
        })
        .reduce(|| T::zero(), |a, b| a.max(b))
}

fn step<T: Real>(u: &ManifoldField<T>, g: &[T], alpha: T) -> ManifoldField<T> {
    let m = u.m;
    let mut out = u.clone();
    let dom = u.domain.clone();
    out.values.par_chunks_mut(m).enumerate().for_each(|(x, c)| {
        if dom.is_interior(x) {
            let trial: Vec<T> = (0..m).map(|a| c[a] - alpha * g[x * m + a]).collect();
            c.copy_from_slice(&u.vacuum.project(&trial));
        }
    });
    out
}

/// Projected gradient descent on the compact energy: Euclidean step, then
/// closest-point retraction per cell. Barzilai–Borwein steps with a
/// non-monotone (last ten) sufficient-decrease test.
pub fn harmonic_minimize<T: Real>(init: &ManifoldField<T>, l: &ElasticTensor<T>, cfg: &HarmonicConfig) -> Result<HarmonicResult<T>> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidInput("harmonic solver needs tol > 0 and max_iter ≥ 1".into()));
    }
    let mut u = init.clone();
    u.retract();
    let h = u.domain.h;
    let (_, lmax) = l.eigen_range();
    if lmax <= T::zero() {
        // zero tensor: every admissible field is stationary
        let e = compact_energy(&u, l);
        return Ok(HarmonicResult { limit_energy: limit_energy(&u, l), field: u, energy: e, stationarity: T::zero(), iterations: 0, converged: true });
    }
    let a0 = h * h / (T::lit(12.0) * lmax);
    let tau = T::lit(1e-3) * a0;
    let tol = T::lit(cfg.tol);
    let vol = u.domain.cell_volume();
    let mut e = compact_energy(&u, l);
    let mut g = compact_gradient(&u, l);
    let mut hist = vec![e];
    let mut alpha = a0;
    let mut it = 0;
    let mut stat = stationarity(&u, &g, tau);
    while stat > tol && it < cfg.max_iter {
        it += 1;
        let ref_e = hist.iter().rev().take(10).fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut a = alpha;
        let (v, ev) = loop {
            let v = step(&u, &g, a);
            let ev = compact_energy(&v, l);
            let moved = v.values.iter().zip(&u.values).fold(T::zero(), |s, (&p, &q)| s + (p - q) * (p - q));
            if ev <= ref_e - T::lit(1e-4) * moved * vol / a || a <= a0 * T::lit(1e-6) {
                break (v, ev);
            }
            a = a * T::lit(0.5);
        };
        let gv = compact_gradient(&v, l);
        // BB1 on the interior cells
        let (mut ss, mut sy) = (T::zero(), T::zero());
        for ((&p, &q), (&gp, &gq)) in v.values.iter().zip(&u.values).zip(gv.iter().zip(&g)) {
            let s = p - q;
            ss = ss + s * s;
            sy = sy + s * (gp - gq);
        }
        alpha = if sy > T::zero() { (ss / sy).max(a0 * T::lit(1e-3)).min(a0 * T::lit(1e4)) } else { a0 };
        u = v;
        g = gv;
        e = ev;
        hist.push(e);
        stat = stationarity(&u, &g, tau);
    }
    Ok(HarmonicResult {
        limit_energy: limit_energy(&u, l),
        energy: e,
        stationarity: stat,
        iterations: it,
        converged: stat <= tol,
        field: u,
    })
}

/// Runs [`harmonic_minimize`] from `init` and `cfg.n_random` random
/// interpolants of its boundary trace; keeps the lowest energy.
pub fn harmonic_multi_start<T: Real>(init: &ManifoldField<T>, l: &ElasticTensor<T>, cfg: &HarmonicConfig) -> Result<HarmonicResult<T>> {
    let mut best = harmonic_minimize(init, l, cfg)?;
    for s in 0..cfg.n_random {
        let start = init.random_interpolant(T::lit(cfg.random_amplitude), cfg.seed.wrapping_add(s as u64));
        let r = harmonic_minimize(&start, l, cfg)?;
        if r.converged && (!best.converged || r.energy < best.energy) {
            best = r;
        }
    }
    Ok(best)
}

/// Discrete harmonic extension (7-point Laplacian) of the values given off Ω;
/// conjugate gradients on the Ω cells.
pub fn harmonic_extension<T: Real>(domain: &Domain<T>, data: &[T], tol: T) -> Result<Vec<T>> {
    let n = domain.len();
    let inner = domain.interior_indices();
    let mut slot = vec![usize::MAX; n];
    for (k, &x) in inner.iter().enumerate() {
        slot[x] = k;
    }
    // A v = b with A = −Δ_h·h² restricted to Ω
    let apply = |v: &[T]| -> Vec<T> {
        inner
            .par_iter()
            .map(|&x| {
                let mut s = T::lit(6.0) * v[slot[x]];
                for i in 0..3 {
                    for f in [true, false] {
                        if let Some(y) = domain.neighbour(x, i, f) {
                            if slot[y] != usize::MAX {
                                s = s - v[slot[y]];
                            }
                        }
                    }
                }
                s
            })
            .collect()
    };
    let b: Vec<T> = inner
        .iter()
        .map(|&x| {
            let mut s = T::zero();
            for i in 0..3 {
                for f in [true, false] {
                    match domain.neighbour(x, i, f) {
                        Some(y) if slot[y] == usize::MAX => s = s + data[y],
                        Some(_) => {}
                        None => return Err(Error::InvalidInput("Ω touches the box face".into())),
                    }
                }
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let dot = |a: &[T], c: &[T]| a.iter().zip(c).fold(T::zero(), |s, (&p, &q)| s + p * q);
    let mut v: Vec<T> = inner.iter().map(|&x| data[x]).collect();
    let av = apply(&v);
    let mut r: Vec<T> = b.iter().zip(&av).map(|(&p, &q)| p - q).collect();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let bn = dot(&b, &b).sqrt().max(T::one());
    let mut it = 0;
    while rr.sqrt() > tol * bn {
        if it > 10 * inner.len() + 100 {
            return Err(Error::MaxIterations { iterations: it, residual: rr.sqrt().as_f64() });
        }
        it += 1;
        let ad = apply(&d);
        let a = rr / dot(&d, &ad);
        for k in 0..v.len() {
            v[k] = v[k] + a * d[k];
            r[k] = r[k] - a * ad[k];
        }
        let rn = dot(&r, &r);
        let beta = rn / rr;
        rr = rn;
        for k in 0..d.len() {
            d[k] = r[k] + beta * d[k];
        }
    }
    let mut out = data.to_vec();
    for (k, &x) in inner.iter().enumerate() {
        out[x] = v[k];
    }
    Ok(out)
}
