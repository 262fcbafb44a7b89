use super::*;
use crate::error::Error;
use crate::field::{BoundaryPreset, Geometry, LocalEnergy, OrderField, Problem, ProblemConfig};
use crate::kernel::{KernelSpec, RadialProfile};
use crate::limit::ManifoldField;
use crate::rng;
use crate::potential::MicroModel;
use rand::Rng;

fn annulus() -> KernelSpec<f64> {
    KernelSpec::scalar(RadialProfile::Annulus { k: 1.0, r1: 0.5, r2: 1.5 }.with_mass(8.0).unwrap(), 2)
}

fn problem() -> Problem<f64> {
    Problem::new(&annulus(), &MicroModel::default_circle(), 0.25, Geometry::Ball, 1.0, 32, BoundaryPreset::Vacuum, &ProblemConfig::default())
        .unwrap()
}

fn field(p: &Problem<f64>, mut f: impl FnMut(&[f64; 3]) -> Vec<f64>) -> OrderField<f64> {
    let mut u = p.boundary_field();
    for x in 0..p.domain.len() {
        let v = f(&p.domain.coord(x));
        u.cell_mut(x).copy_from_slice(&v);
    }
    u
}

#[test]
fn mollifier_is_normalised_even_and_dominated() {
    let spec = annulus();
    let a = build_mollifier(&spec, 0.5, 0.05).unwrap();
    assert!((a.mass() - 1.0).abs() < 1e-12);
    for (z, w) in &a.weights {
        assert!(*w > 0.0);
        let mz = [-z[0], -z[1], -z[2]];
        let other = a.weights.iter().find(|(q, _)| *q == mz).unwrap();
        assert_eq!(other.1, *w);
    }
    let b = build_mollifier(&spec, 0.5, 0.025).unwrap();
    assert!(a.domination.is_finite() && a.domination > 0.0);
    assert!((a.domination / b.domination - 1.0).abs() < 0.1, "{} {}", a.domination, b.domination);
    assert!(matches!(build_mollifier(&spec, 0.5, 0.3), Err(Error::ResolutionMismatch(_))));
}

#[test]
fn mollifier_checks_on_simple_fields() {
    let p = problem();
    let mo = build_mollifier(&annulus(), p.eps, p.domain.h).unwrap();
    let c = field(&p, |_| vec![0.3, 0.1]);
    let le = LocalEnergy::new(&p, &c).unwrap();
    let r = mollify_h1_check(&le, &mo, &[0.0; 3], 0.9).unwrap();
    assert!(r.lhs.abs() < 1e-25 && r.rhs.abs() < 1e-12 && r.ratio == 0.0, "{r:?}");
    let inner = p.domain.ball_mask(&[0.0; 3], 0.3);
    let outer = p.domain.ball_mask(&[0.0; 3], 0.8);
    let r = mollify_l2_check(&le, &mo, &inner, &outer).unwrap();
    assert!(r.lhs < 1e-25 && r.ratio == 0.0);
    assert!(matches!(mollify_l2_check(&le, &mo, &outer, &outer), Err(Error::ResolutionMismatch(_))));
    assert!(matches!(mollify_h1_check(&le, &mo, &[0.0; 3], 0.5), Err(Error::ResolutionMismatch(_))));

    // linear fields: both sides quadratic in the slope
    let lin = |s: f64| field(&p, move |x| vec![0.1 + s * x[0], -s * x[1] * 0.5]);
    let (u1, u2) = (lin(0.1), lin(0.2));
    let (l1, l2) = (LocalEnergy::new(&p, &u1).unwrap(), LocalEnergy::new(&p, &u2).unwrap());
    let a = mollify_h1_check(&l1, &mo, &[0.0; 3], 0.9).unwrap();
    let b = mollify_h1_check(&l2, &mo, &[0.0; 3], 0.9).unwrap();
    assert!((b.lhs / a.lhs - 4.0).abs() < 1e-9 && (b.rhs / a.rhs - 4.0).abs() < 1e-9);
    assert!(a.ratio.is_finite() && a.ratio > 0.0);
}

#[test]
fn poincare_conventions() {
    let p = problem();
    let c = field(&p, |_| vec![0.3, 0.1]);
    let le = LocalEnergy::new(&p, &c).unwrap();
    let r = poincare_check(&le, &[0.0; 3], 0.8, 1.0).unwrap();
    assert_eq!(r.ratio, 0.0);
    assert!(matches!(poincare_check(&le, &[0.0; 3], 0.2, 1.0), Err(Error::ResolutionMismatch(_))));
}

#[test]
fn campanato_exponents() {
    let p = problem();
    let radii = [0.8, 0.6, 0.45, 0.3];
    let lin = field(&p, |x| vec![0.2 * x[0] + 0.1 * x[2], 0.1 * x[1]]);
    let d = campanato_profile(&lin, &[0.0; 3], &radii);
    assert!((d.mu.unwrap() - 1.0).abs() < 0.05, "{d:?}");
    let mut r = rng::stream(1, "test");
    let noise = field(&p, |_| vec![r.gen_range(-0.2..0.2), r.gen_range(-0.2..0.2)]);
    let d = campanato_profile(&noise, &[0.0; 3], &radii);
    assert!(d.mu.unwrap().abs() < 0.1, "{d:?}");
    let d = campanato_profile(&noise, &[0.0; 3], &[0.9, 0.1, 2.0]);
    assert_eq!(d.radii, vec![0.9]);
    assert_eq!(d.dropped.len(), 2);
    assert!(d.mu.is_none());
    let c = field(&p, |_| vec![0.3, 0.0]);
    assert!(campanato_profile(&c, &[0.0; 3], &radii).mu.is_none());
}

#[test]
fn holder_on_ramps() {
    let p = problem();
    let c = field(&p, |_| vec![0.3, 0.0]);
    assert_eq!(holder_seminorm(&c, &[0.0; 3], 0.3, 0.5, 1 << 20, 0), 0.0);
    let ramp = field(&p, |x| vec![0.3 * x[0], 0.4 * x[0]]);
    for budget in [1 << 22, 1000] {
        let s = holder_seminorm(&ramp, &[0.0; 3], 0.3, 1.0, budget, 0);
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }
}

#[test]
fn decay_lemma_conventions() {
    let p = problem();
    let c = field(&p, |_| p.boundary.cell(0).to_vec());
    let le = LocalEnergy::new(&p, &c).unwrap();
    let cfg = DecayConfig { eta: 1e-3, eps_star: 0.5 };
    let t = decay_lemma_check(&le, &[0.0; 3], 0.8, &[0.5, 0.25], &cfg).unwrap();
    assert!(t.rows.iter().all(|r| r.2 == 0.0));
    let wild = p.random_field(0.8, 2);
    let le = LocalEnergy::new(&p, &wild).unwrap();
    assert!(matches!(decay_lemma_check(&le, &[0.0; 3], 0.8, &[0.5], &cfg), Err(Error::PreconditionNotMet(_))));
    assert!(matches!(decay_lemma_check(&le, &[0.0; 3], 0.3, &[0.5], &cfg), Err(Error::PreconditionNotMet(_))));
}

#[test]
fn calibration_picks_the_largest_threshold() {
    let s = |base: f64, r: [f64; 2]| DecaySample { eps_over_rho: base, base, ratios: vec![(0.5, r[0]), (0.25, r[1])], mu: Some(0.5) };
    let samples = vec![s(0.1, [0.4, 0.3]), s(0.2, [0.6, 0.5]), s(0.3, [0.7, 0.9]), s(0.4, [0.9, 0.2])];
    let c = Calibration::measure(&samples, &[0.5, 0.25], 0.75).unwrap();
    assert_eq!((c.eta, c.theta), (0.3, 0.5));
    assert_eq!(c.eps_star, 0.4);
    assert_eq!(c.mu, 0.5);
    let back = Calibration::<f64>::from_kv(&c.to_kv()).unwrap();
    assert_eq!(back, c);
    assert!(Calibration::<f64>::from_kv("eta = 1\n").is_err());
    assert_eq!(c.singular_threshold(2.0), 0.075);
}

#[test]
fn uniform_report_of_identical_fields() {
    let p = problem();
    let u0 = ManifoldField::from_boundary(p.domain.clone(), p.bulk.vacuum.clone(), &p.boundary);
    let u = u0.to_order_field(p.eps);
    let rows = uniform_convergence_report(&[&u], &u0, &[p.interior[0]], 0.2).unwrap();
    assert_eq!(rows[0].sup_off, 0.0);
    assert_eq!(rows[0].sup_on, 0.0);
    assert!(rows[0].cells_on > 0 && rows[0].cells_off > 0);
    assert_eq!(rows[0].cells_on + rows[0].cells_off, p.interior.len());
}
