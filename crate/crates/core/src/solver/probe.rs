use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{InteractionMode, OrderField, Problem};
use crate::real::{dot, Real};
use crate::rng;

/// Outcome of [`omega_minimality_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport<T> {
    /// `max (E(u) − E(v))` over competitors; negative when every competitor is worse.
    pub worst_decrease: T,
    /// Competitor family of the worst trial.
    pub worst_kind: &'static str,
    pub trials: usize,
    /// Trials whose competitor left the moment set and was discarded.
    pub rejected: usize,
}

const KINDS: [&str; 5] = ["mean", "smoothed", "noise", "blend", "rotation"];

/// Tries competitors `v = u` off `B_ρ(x₀)` and reports the largest energy decrease found.
pub fn omega_minimality_probe<T: Real>(
    p: &Problem<T>,
    u: &OrderField<T>,
    x0: &[T; 3],
    rho: T,
    n_trials: usize,
    seed: u64,
    mode: InteractionMode,
) -> Result<ProbeReport<T>> {
    let dom = &p.domain;
    let m = p.m();
    let model = &p.bulk.model;
    let ball: Vec<usize> = dom
        .ball_mask(x0, rho)
        .iter()
        .enumerate()
        .filter(|(x, &b)| b && dom.is_interior(*x))
        .map(|(x, _)| x)
        .collect();
    if ball.is_empty() {
        return Err(Error::InvalidInput("probe ball contains no interior cell".into()));
    }
    let ku = p.interaction(&u.values, mode);
    let zero = vec![T::zero(); m];
    let base: Vec<T> = ball
        .iter()
        .map(|&x| p.bulk.psi_s_from(u.cell(x), &zero).map(|r| r.0))
        .collect::<Result<_>>()?;
    let w = dom.cell_volume() * p.kernel.inv_eps2();
    let mut mean = vec![T::zero(); m];
    for &x in &ball {
        for a in 0..m {
            mean[a] = mean[a] + u.cell(x)[a];
        }
    }
    mean.iter_mut().for_each(|c| *c = *c / T::from_usize_lossy(ball.len()));

    let mut r = rng::stream(seed, "solver.probe");
    let mut worst = T::neg_infinity();
    let mut worst_kind = KINDS[0];
    let mut rejected = 0;
    for t in 0..n_trials {
        let kind = t % KINDS.len();
        let mut v: Vec<Vec<T>> = ball.iter().map(|&x| u.cell(x).to_vec()).collect();
        match kind {
            0 => v.iter_mut().for_each(|c| c.copy_from_slice(&mean)),
            1 => {
                for (c, &x) in v.iter_mut().zip(&ball) {
                    let mut acc = vec![T::zero(); m];
                    let mut cnt = 0;
                    let [i, j, k] = dom.ijk(x);
                    for di in -1isize..=1 {
                        for dj in -1isize..=1 {
                            for dk in -1isize..=1 {
                                let q = [i as isize + di, j as isize + dj, k as isize + dk];
                                if q.iter().zip(&dom.dims).any(|(&a, &n)| a < 0 || a >= n as isize) {
                                    continue;
                                }
                                let y = dom.index(q[0] as usize, q[1] as usize, q[2] as usize);
                                for a in 0..m {
                                    acc[a] = acc[a] + u.cell(y)[a];
                                }
                                cnt += 1;
                            }
                        }
                    }
                    for a in 0..m {
                        c[a] = acc[a] / T::from_usize_lossy(cnt);
                    }
                }
            }
            2 => {
                let amp = T::lit([1e-3, 1e-2, 5e-2][(t / KINDS.len()) % 3]);
                for (c, &x) in v.iter_mut().zip(&ball) {
                    let b = bump(dom.coord(x), x0, rho);
                    let room = model.dist_to_boundary(c);
                    for cv in c.iter_mut() {
                        *cv = *cv + amp * room * b * T::lit(r.gen_range(-1.0..1.0));
                    }
                }
            }
            3 => {
                let s = T::lit(r.gen_range(0.05..0.95));
                for c in v.iter_mut() {
                    for a in 0..m {
                        c[a] = (T::one() - s) * c[a] + s * mean[a];
                    }
                }
            }
            _ => {
                let ang = T::lit(r.gen_range(-0.5..0.5));
                let axis = r.gen_range(0..3);
                for (c, &x) in v.iter_mut().zip(&ball) {
                    let b = bump(dom.coord(x), x0, rho);
                    let rc = model.rotate(c, ang * b, axis);
                    c.copy_from_slice(&rc);
                }
            }
        }
        // ΔE = −(w/2)[2 δ·Ku + δ·Kδ] + w Σ[ψ_s(v) − ψ_s(u)]
        let mut delta = vec![T::zero(); dom.len() * m];
        for (c, &x) in v.iter().zip(&ball) {
            for a in 0..m {
                delta[x * m + a] = c[a] - u.cell(x)[a];
            }
        }
        let kd = p.conv.apply_at(&delta, &ball);
        let mut lin = T::zero();
        let mut quad = T::zero();
        let mut dpsi = T::zero();
        let mut ok = true;
        for (n, &x) in ball.iter().enumerate() {
            let dx = &delta[x * m..(x + 1) * m];
            lin = lin + dot(dx, &ku[x * m..(x + 1) * m]);
            quad = quad + dot(dx, &kd[n * m..(n + 1) * m]);
            match p.bulk.psi_s_from(&v[n], &zero) {
                Ok((ps, _)) => dpsi = dpsi + ps - base[n],
                Err(Error::OutsideMomentDomain { .. }) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            rejected += 1;
            continue;
        }
        let de = -T::lit(0.5) * w * (lin + lin + quad) + w * dpsi;
        if -de > worst {
            worst = -de;
            worst_kind = KINDS[kind];
        }
    }
    Ok(ProbeReport { worst_decrease: worst, worst_kind, trials: n_trials, rejected })
}

fn bump<T: Real>(x: [T; 3], x0: &[T; 3], rho: T) -> T {
    let d2 = (0..3).fold(T::zero(), |s, a| s + (x[a] - x0[a]) * (x[a] - x0[a])) / (rho * rho);
    if d2 >= T::one() {
        T::zero()
    } else {
        (T::one() - d2) * (T::one() - d2)
    }
}
