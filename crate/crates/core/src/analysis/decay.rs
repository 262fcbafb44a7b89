use rand::Rng;
use rayon::prelude::*;

use super::inequalities::mean_oscillation;
use crate::error::{Error, Result};
use crate::field::{Domain, LocalEnergy, OrderField};
use crate::real::Real;
use crate::rng;

/// Mean oscillation and scaled local energy on a ladder of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile<T> {
    /// Kept radii, decreasing.
    pub radii: Vec<T>,
    /// Radii below `4h` or leaving Ω.
    pub dropped: Vec<T>,
    /// `⨍_{B_ρ}|u − ū|²`.
    pub mean_osc: Vec<T>,
    /// `ρ⁻¹F_ε(u, B_ρ)`; empty when no energy was supplied.
    pub scaled_energy: Vec<T>,
    /// Campanato exponent: half the log–log slope of the oscillation.
    pub mu: Option<T>,
    /// RMS residual of the oscillation fit.
    pub mu_residual: T,
    /// Log–log slope of the scaled energy.
    pub alpha: Option<T>,
}

/// Least-squares slope and RMS residual of `log y` against `log x` over positive entries.
pub fn loglog_fit<T: Real>(x: &[T], y: &[T]) -> Option<(T, T)> {
    let pts: Vec<(T, T)> = x.iter().zip(y).filter(|(&a, &b)| a > T::zero() && b > T::zero()).map(|(&a, &b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    if sxx == T::zero() {
        return None;
    }
    let sxy = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let k = sxy / sxx;
    let res = pts.iter().fold(T::zero(), |s, p| {
        let e = p.1 - (my + k * (p.0 - mx));
        s + e * e
    });
    Some((k, (res / n).sqrt()))
}

fn usable<T: Real>(dom: &Domain<T>, x0: &[T; 3], radii: &[T]) -> (Vec<T>, Vec<T>) {
    let room = -dom.outside_distance(x0);
    let tol = T::one() + T::lit(1e-12);
    let (mut keep, mut drop) = (Vec::new(), Vec::new());
    for &r in radii {
        if r * tol >= T::lit(4.0) * dom.h && r <= room * tol {
            keep.push(r);
        } else {
            drop.push(r);
        }
    }
    keep.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (keep, drop)
}

/// Campanato profile of the oscillation alone.
pub fn campanato_profile<T: Real>(u: &OrderField<T>, x0: &[T; 3], radii: &[T]) -> DecayProfile<T> {
    let (radii, dropped) = usable(&u.domain, x0, radii);
    let mean_osc: Vec<T> = radii.iter().map(|&r| mean_oscillation(u, &u.domain.ball_mask(x0, r))).collect();
    let fit = loglog_fit(&radii, &mean_osc);
    DecayProfile {
        mu: fit.map(|f| f.0 * T::lit(0.5)),
        mu_residual: fit.map_or(T::zero(), |f| f.1),
        radii,
        dropped,
        mean_osc,
        scaled_energy: Vec::new(),
        alpha: None,
    }
}

/// Campanato profile together with `ρ⁻¹F_ε(u, B_ρ)` and its exponent.
pub fn decay_profile<T: Real>(le: &LocalEnergy<'_, T>, x0: &[T; 3], radii: &[T]) -> DecayProfile<T> {
    let mut p = campanato_profile(le.field, x0, radii);
    p.scaled_energy = p.radii.iter().map(|&r| le.ball(x0, r).total / r).collect();
    p.alpha = loglog_fit(&p.radii, &p.scaled_energy).map(|f| f.0);
    p
}

/// `sup |u(x)−u(y)|/|x−y|^μ` over Ω cells in `B_r(x₀)`: every pair when the
/// pair count fits `budget`, otherwise all nearest-neighbour pairs plus
/// `budget` seeded random pairs.
pub fn holder_seminorm<T: Real>(u: &OrderField<T>, x0: &[T; 3], r: T, mu: T, budget: usize, seed: u64) -> T {
    let dom = &u.domain;
    let mask = dom.ball_mask(x0, r);
    let cells: Vec<usize> = (0..dom.len()).filter(|&x| mask[x] && dom.is_interior(x)).collect();
    let n = cells.len();
    if n < 2 {
        return T::zero();
    }
    let q = |a: usize, b: usize| -> T {
        let (pa, pb) = (dom.coord(a), dom.coord(b));
        let d = (0..3).fold(T::zero(), |s, i| s + (pa[i] - pb[i]) * (pa[i] - pb[i])).sqrt();
        let du = u.cell(a).iter().zip(u.cell(b)).fold(T::zero(), |s, (&p, &w)| s + (p - w) * (p - w)).sqrt();
        du / d.powf(mu)
    };
    let pairs = n * (n - 1) / 2;
    if pairs <= budget {
        return (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).fold(T::zero(), |m, j| m.max(q(cells[i], cells[j]))))
            .reduce(|| T::zero(), |a, b| a.max(b));
    }
    let mut best = cells
        .par_iter()
        .map(|&x| {
            (0..3).fold(T::zero(), |m, a| match dom.neighbour(x, a, true) {
                Some(y) if mask[y] && dom.is_interior(y) => m.max(q(x, y)),
                _ => m,
            })
        })
        .reduce(|| T::zero(), |a, b| a.max(b));
    let mut g = rng::stream(seed, "analysis.holder");
    for _ in 0..budget {
        let i = g.gen_range(0..n);
        let j = g.gen_range(0..n);
        if i != j {
            best = best.max(q(cells[i], cells[j]));
        }
    }
    best
}

/// Hypotheses of the decay lemma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig<T> {
    /// Small-energy threshold on `ρ⁻¹F_ε(B_ρ)`.
    pub eta: T,
    /// Largest admissible `ε/ρ`.
    pub eps_star: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable<T> {
    /// `ρ⁻¹F_ε(u, B_ρ)`.
    pub base: T,
    /// `(θ, (θρ)⁻¹F_ε(B_{θρ}), ratio)`.
    pub rows: Vec<(T, T, T)>,
}

impl<T: Real> DecayTable<T> {
    pub fn ratio_at(&self, theta: T) -> Option<T> {
        self.rows.iter().find(|r| (r.0 - theta).fabs() <= T::lit(1e-12) * theta).map(|r| r.2)
    }
}

fn ratio<T: Real>(a: T, b: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a / b
    }
}

/// Scaled energies at `θρ` relative to `ρ`; `PreconditionNotMet` unless the
/// ball has small energy and `ε ≤ ε*ρ`.
pub fn decay_lemma_check<T: Real>(le: &LocalEnergy<'_, T>, x0: &[T; 3], rho: T, thetas: &[T], cfg: &DecayConfig<T>) -> Result<DecayTable<T>> {
    let base = le.ball(x0, rho).total / rho;
    if le.problem.eps > cfg.eps_star * rho {
        return Err(Error::PreconditionNotMet(format!(
            "ε/ρ = {:.4} above ε* = {:.4}",
            (le.problem.eps / rho).as_f64(),
            cfg.eps_star.as_f64()
        )));
    }
    if base > cfg.eta {
        return Err(Error::PreconditionNotMet(format!(
            "scaled energy {:.4e} above η = {:.4e}",
            base.as_f64(),
            cfg.eta.as_f64()
        )));
    }
    let rows = thetas
        .iter()
        .map(|&t| {
            let s = le.ball(x0, t * rho).total / (t * rho);
            (t, s, ratio(s, base))
        })
        .collect();
    Ok(DecayTable { base, rows })
}

/// Measured stand-ins for the non-constructive constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<T> {
    /// Small-energy threshold below which every sampled ball decayed.
    pub eta: T,
    /// Decay scale achieving the largest `η`.
    pub theta: T,
    /// Largest `ε/ρ` among the samples.
    pub eps_star: T,
    /// Mean fitted Campanato exponent (zero if none).
    pub mu: T,
    /// Decay ratio the calibration enforced.
    pub target: T,
}

/// One probed ball: `ε/ρ`, `ρ⁻¹F_ε(B_ρ)`, the ratio per `θ`, and the fitted `μ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySample<T> {
    pub eps_over_rho: T,
    pub base: T,
    pub ratios: Vec<(T, T)>,
    pub mu: Option<T>,
}

impl<T: Real> Calibration<T> {
    /// Picks, for each `θ`, the largest `η` such that every sample with
    /// `base ≤ η` has ratio `≤ target`, and keeps the best `θ`.
    pub fn measure(samples: &[DecaySample<T>], thetas: &[T], target: T) -> Result<Self> {
        if samples.is_empty() || thetas.is_empty() {
            return Err(Error::InvalidInput("calibration needs samples and a θ ladder".into()));
        }
        let mut order: Vec<&DecaySample<T>> = samples.iter().collect();
        order.sort_by(|a, b| a.base.partial_cmp(&b.base).unwrap());
        let mut best: Option<(T, T)> = None;
        for &t in thetas {
            let mut eta = T::zero();
            for s in &order {
                let r = s.ratios.iter().find(|r| (r.0 - t).fabs() <= T::lit(1e-12) * t).map(|r| r.1);
                match r {
                    Some(r) if r <= target => eta = s.base,
                    _ => break,
                }
            }
            if best.is_none_or(|b| eta > b.0) {
                best = Some((eta, t));
            }
        }
        let (eta, theta) = best.unwrap();
        let mus: Vec<T> = samples.iter().filter_map(|s| s.mu).collect();
        let mu = if mus.is_empty() { T::zero() } else { mus.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(mus.len()) };
        let eps_star = samples.iter().fold(T::zero(), |a, s| a.max(s.eps_over_rho));
        Ok(Calibration { eta, theta, eps_star, mu, target })
    }

    pub fn decay_config(&self) -> DecayConfig<T> {
        DecayConfig { eta: self.eta, eps_star: self.eps_star }
    }

    /// Singular-set threshold on `ρ⁻¹∫|∇u₀|²`: `η/2` converted from energy
    /// units with the largest eigenvalue of `L`.
    pub fn singular_threshold(&self, lambda_max: T) -> T {
        self.eta * T::lit(0.5) / lambda_max
    }

    /// `key = value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "eta = {:e}\ntheta = {:e}\neps_star = {:e}\nmu = {:e}\ntarget = {:e}\n",
            self.eta.as_f64(),
            self.theta.as_f64(),
            self.eps_star.as_f64(),
            self.mu.as_f64(),
            self.target.as_f64()
        )
    }

    pub fn from_kv(s: &str) -> Result<Self> {
        let mut vals = [None; 5];
        let keys = ["eta", "theta", "eps_star", "mu", "target"];
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::InvalidInput(format!("bad line `{line}`")))?;
            let i = keys.iter().position(|&q| q == k.trim()).ok_or_else(|| Error::InvalidInput(format!("unknown key `{}`", k.trim())))?;
            let x: f64 = v.trim().parse().map_err(|_| Error::InvalidInput(format!("bad number for `{}`", keys[i])))?;
            vals[i] = Some(T::lit(x));
        }
        let get = |i: usize| vals[i].ok_or_else(|| Error::InvalidInput(format!("missing `{}`", keys[i])));
        Ok(Calibration { eta: get(0)?, theta: get(1)?, eps_star: get(2)?, mu: get(3)?, target: get(4)? })
    }
}
