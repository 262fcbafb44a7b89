use rayon::prelude::*;

use super::eval::{Evaluator, Side};
use super::{lipschitz_estimate, physicality_margin, SolveResult, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::field::{OrderField, Problem};
use crate::potential::lambda_inverse;
use crate::real::Real;

pub(crate) fn residual<T: Real>(b: &[T], ku: &[T]) -> T {
    b.iter().zip(ku).fold(T::zero(), |s, (&x, &y)| s.max((x - y).fabs()))
}

/// Damped self-consistency iteration `u ← (1−α)u + αΛ⁻¹(K_ε∗u)` on Ω.
pub fn el_fixed_point<T: Real>(p: &Problem<T>, init: &OrderField<T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    cfg.validate()?;
    if cfg.mode == crate::field::InteractionMode::FiniteThickness {
        p.check_layer()?;
    }
    init.check_admissible(&p.boundary, &p.bulk.model)?;
    let m = p.m();
    let ev = Evaluator::new(p, cfg.mode);
    let mut u = init.clone();
    let mut duals = p.dual_field(&u, None)?;
    let mut ku = ev.ku(&u);
    let mut energy = ev.energy(&u, &ku, &duals.psi_s);
    let mut res = residual(&duals.b, &ku);
    let mut residuals = vec![res];
    let mut energies = vec![energy];
    let mut alpha = cfg.alpha;
    let mut streak = 0usize;
    let mut it = 0usize;
    let termination = loop {
        if res <= cfg.tol {
            break Termination::Converged;
        }
        if it >= cfg.max_iter {
            break Termination::MaxIterations;
        }
        it += 1;
        let target: Vec<T> = ku.par_chunks(m).flat_map_iter(|k| lambda_inverse(&p.bulk.model, k)).collect();
        loop {
            let mut trial = u.clone();
            let mut warm = duals.b.clone();
            for (n, &x) in p.interior.iter().enumerate() {
                let c = trial.cell_mut(x);
                for a in 0..m {
                    c[a] = (T::one() - alpha) * c[a] + alpha * target[n * m + a];
                    warm[n * m + a] = (T::one() - alpha) * warm[n * m + a] + alpha * ku[n * m + a];
                }
            }
            let d = p.dual_field(&trial, Some(&warm));
            let accepted = match d {
                Ok(d) => {
                    let k2 = ev.ku(&trial);
                    let (de, bound) = ev.delta(
                        &u,
                        &trial,
                        Side { ku: &ku, b: &duals.b, psi_s: &duals.psi_s },
                        Side { ku: &k2, b: &d.b, psi_s: &d.psi_s },
                    );
                    if de <= bound {
                        u = trial;
                        duals = d;
                        ku = k2;
                        energy = energy + de;
                        true
                    } else {
                        false
                    }
                }
                Err(Error::OutsideMomentDomain { .. }) => false,
                Err(e) => return Err(e),
            };
            if accepted {
                streak += 1;
                if streak >= 10 && alpha < cfg.alpha {
                    alpha = (alpha + alpha).min(cfg.alpha);
                    streak = 0;
                }
                break;
            }
            streak = 0;
            alpha = alpha * T::lit(0.5);
            if alpha < cfg.alpha_min {
                let e = ev.energy(&u, &ku, &duals.psi_s);
                return Ok(finish(p, u, duals.b, e, residuals, energies, it, Termination::Stalled, alpha));
            }
        }
        res = residual(&duals.b, &ku);
        residuals.push(res);
        energies.push(energy);
    };
    let e = ev.energy(&u, &ku, &duals.psi_s);
    Ok(finish(p, u, duals.b, e, residuals, energies, it, termination, alpha))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish<T: Real>(
    p: &Problem<T>,
    u: OrderField<T>,
    b: Vec<T>,
    energy: T,
    residuals: Vec<T>,
    energies: Vec<T>,
    iterations: usize,
    termination: Termination,
    alpha: T,
) -> SolveResult<T> {
    SolveResult {
        margin: physicality_margin(&u, &p.bulk.model),
        lipschitz: lipschitz_estimate(&u),
        energy,
        residual: *residuals.last().unwrap(),
        field: u,
        duals: b,
        residual_history: residuals,
        energy_history: energies,
        iterations,
        termination,
        final_step: alpha,
    }
}
