//! Small full-chain runs of the lattice minimisers.

use nllc::field::{energy_oscillation, BoundaryPreset, Geometry, Problem, ProblemConfig};
use nllc::kernel::{KernelSpec, RadialProfile, SampleConfig};
use nllc::potential::MicroModel;
use nllc::solver::{el_fixed_point, gradient_descent, SolverConfig};

fn problem(eps: f64) -> Problem<f64> {
    let f = RadialProfile::Gaussian { k: 1.0, a: 1.0 }.with_mass(8.0).unwrap();
    let cfg = ProblemConfig { sample: SampleConfig { tail_tol: 1e-8, ..Default::default() }, ..Default::default() };
    let preset = BoundaryPreset::SmoothAngle { slope: 0.6, curvature: 0.2, exterior_ratio: 0.6, ramp: 0.1 };
    Problem::new(&KernelSpec::scalar(f, 2), &MicroModel::default_circle(), eps, Geometry::Ball, 1.0, 8, preset, &cfg).unwrap()
}

#[test]
fn minimiser_beats_perturbations() {
    let p = problem(0.3);
    let cfg = SolverConfig { tol: 1e-9, max_iter: 20000, ..Default::default() };
    let r = el_fixed_point(&p, &p.random_field(0.5, 11), &cfg).unwrap();
    r.check().unwrap();
    r.field.check_admissible(&p.boundary, &p.bulk.model).unwrap();
    let e = energy_oscillation(&p, &r.field).unwrap().total;
    for seed in 0..4 {
        let mut v = r.field.clone();
        let noise = p.random_field(0.5, 100 + seed);
        for &i in &p.interior {
            for a in 0..v.m {
                let k = i * v.m + a;
                v.values[k] = 0.97 * v.values[k] + 0.03 * noise.values[k];
            }
        }
        let ev = energy_oscillation(&p, &v).unwrap().total;
        assert!(ev >= e - 1e-9 * (1.0 + e.abs()), "perturbation {seed}: {ev} < {e}");
    }
}

#[test]
fn solvers_reach_the_same_minimiser_from_different_starts() {
    let p = problem(0.3);
    let cfg = SolverConfig { tol: 1e-9, max_iter: 20000, ..Default::default() };
    let a = el_fixed_point(&p, &p.random_field(0.2, 1), &cfg).unwrap();
    let b = gradient_descent(&p, &p.random_field(0.8, 2), &cfg).unwrap();
    a.check().unwrap();
    b.check().unwrap();
    assert!((a.energy - b.energy).abs() <= 1e-8 * (1.0 + a.energy.abs()));
    assert!(a.field.interior_sup_distance(&b.field) < 1e-5);
}
