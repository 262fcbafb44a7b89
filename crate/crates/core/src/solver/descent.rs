use super::el::{finish, residual};
use super::eval::{Evaluator, Side};
use super::{SolveResult, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::field::{OrderField, Problem};
use crate::real::Real;

/// `(Λ(u) − K_ε∗u)/ε²` on interior cells; `h³` times this is `∂E/∂u(x)`.
pub fn energy_gradient<T: Real>(p: &Problem<T>, u: &OrderField<T>, mode: crate::field::InteractionMode) -> Result<Vec<T>> {
    let d = p.dual_field(u, None)?;
    let ku = p.interaction_interior(&u.values, mode);
    let s = p.kernel.inv_eps2();
    Ok(d.b.iter().zip(&ku).map(|(&b, &k)| (b - k) * s).collect())
}

/// Barzilai–Borwein gradient descent with an Armijo safeguard.
pub fn gradient_descent<T: Real>(p: &Problem<T>, init: &OrderField<T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
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
    // work with r = Λ(u) − K∗u, proportional to the gradient
    let mut r: Vec<T> = duals.b.iter().zip(&ku).map(|(&b, &k)| b - k).collect();
    let mut res = residual(&duals.b, &ku);
    let mut residuals = vec![res];
    let mut energies = vec![energy];
    let mut step = cfg.descent_step;
    let mut it = 0;
    let slope_unit = p.domain.cell_volume() * p.kernel.inv_eps2();
    let termination = loop {
        if res <= cfg.tol {
            break Termination::Converged;
        }
        if it >= cfg.max_iter {
            break Termination::MaxIterations;
        }
        it += 1;
        let rr = r.iter().fold(T::zero(), |s, &x| s + x * x);
        let mut t = step;
        let mut tries = 0;
        loop {
            let mut trial = u.clone();
            for (n, &x) in p.interior.iter().enumerate() {
                let c = trial.cell_mut(x);
                for a in 0..m {
                    c[a] = c[a] - t * r[n * m + a];
                }
            }
            let ok = match p.dual_field(&trial, Some(&duals.b)) {
                Ok(d) => {
                    let k2 = ev.ku(&trial);
                    let (de, bound) = ev.delta(
                        &u,
                        &trial,
                        Side { ku: &ku, b: &duals.b, psi_s: &duals.psi_s },
                        Side { ku: &k2, b: &d.b, psi_s: &d.psi_s },
                    );
                    if de <= bound - T::lit(1e-4) * t * rr * slope_unit {
                        let r2: Vec<T> = d.b.iter().zip(&k2).map(|(&b, &k)| b - k).collect();
                        // BB1 step from the change in gradient
                        let mut sy = T::zero();
                        let mut ss = T::zero();
                        for (n, &x) in p.interior.iter().enumerate() {
                            for a in 0..m {
                                let sv = trial.cell(x)[a] - u.cell(x)[a];
                                let yv = r2[n * m + a] - r[n * m + a];
                                sy = sy + sv * yv;
                                ss = ss + sv * sv;
                            }
                        }
                        step = if sy > T::zero() { (ss / sy).min(T::lit(1e6)) } else { t * T::lit(2.0) };
                        u = trial;
                        duals = d;
                        ku = k2;
                        energy = energy + de;
                        r = r2;
                        true
                    } else {
                        false
                    }
                }
                Err(Error::OutsideMomentDomain { .. }) => false,
                Err(e) => return Err(e),
            };
            if ok {
                break;
            }
            t = t * T::lit(0.5);
            tries += 1;
            if tries > 60 {
                let e = ev.energy(&u, &ku, &duals.psi_s);
                return Ok(finish(p, u, duals.b, e, residuals, energies, it, Termination::Stalled, t));
            }
        }
        res = residual(&duals.b, &ku);
        residuals.push(res);
        energies.push(energy);
    };
    let e = ev.energy(&u, &ku, &duals.psi_s);
    Ok(finish(p, u, duals.b, e, residuals, energies, it, termination, step))
}
