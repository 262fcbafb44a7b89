use super::*;
use crate::kernel::{KernelSpec, RadialProfile, SampleConfig};
use crate::potential::MicroModel;

fn gaussian_problem(eps: f64, cells: usize, preset: BoundaryPreset<f64>) -> Problem<f64> {
    let f = RadialProfile::Gaussian { k: 1.0, a: 1.0 }.with_mass(8.0).unwrap();
    let spec = KernelSpec::scalar(f, 2);
    let cfg = ProblemConfig { sample: SampleConfig { tail_tol: 1e-8, ..Default::default() }, ..Default::default() };
    Problem::new(&spec, &MicroModel::default_circle(), eps, Geometry::Ball, 1.0, cells, preset, &cfg).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn primal_matches_oscillation() {
    let p = gaussian_problem(0.3, 8, BoundaryPreset::smooth(0.4, 0.1));
    for seed in 0..3 {
        let u = p.random_field(0.8, seed);
        let a = energy_primal(&p, &u).unwrap();
        let b = energy_oscillation(&p, &u).unwrap();
        let c = energy_oscillation_pairs(&p, &u).unwrap();
        assert!(rel(a.total, b.total) < 1e-9, "{} {}", a.total, b.total);
        assert!(rel(c.total, b.total) < 1e-9);
        assert!(b.total >= 0.0 && c.interaction >= 0.0);
    }
}

#[test]
fn vacuum_constant_has_zero_energy() {
    let p = gaussian_problem(0.3, 8, BoundaryPreset::Vacuum);
    let u = p.boundary_field();
    let b = energy_oscillation(&p, &u).unwrap();
    assert!(b.total.abs() < 1e-10);
    let a = energy_primal(&p, &u).unwrap();
    assert!(a.total.abs() < 1e-8 * (1.0 + a.c_eps.abs()), "{a:?}");
}

#[test]
fn local_energy_is_monotone_and_superadditive() {
    let p = gaussian_problem(0.3, 8, BoundaryPreset::smooth(0.4, 0.1));
    let u = p.random_field(0.8, 7);
    let le = LocalEnergy::new(&p, &u).unwrap();
    let full = le.eval(&vec![true; p.domain.len()]);
    let osc = energy_oscillation(&p, &u).unwrap();
    assert!(rel(full.total, osc.total) < 1e-10);
    let small = le.ball(&[0.0; 3], 0.4);
    let big = le.ball(&[0.0; 3], 0.8);
    assert!(small.total <= big.total);
    let g1 = le.ball(&[-0.4, 0.0, 0.0], 0.35);
    let g2 = le.ball(&[0.4, 0.0, 0.0], 0.35);
    let union: Vec<bool> = p
        .domain
        .ball_mask(&[-0.4, 0.0, 0.0], 0.35)
        .iter()
        .zip(p.domain.ball_mask(&[0.4, 0.0, 0.0], 0.35))
        .map(|(&a, b)| a || b)
        .collect();
    assert!(g1.total + g2.total <= le.eval(&union).total + 1e-12);
}

#[test]
fn identity_rescaling_has_zero_gap() {
    let p = gaussian_problem(0.3, 8, BoundaryPreset::smooth(0.4, 0.1));
    let u = p.random_field(0.5, 2);
    let s = scaling_check(&p, &u, &[0.0; 3], 1.0).unwrap();
    assert!(s.gap <= 1e-12 * (1.0 + s.lhs.abs()), "{s:?}");
}

#[test]
fn eps_scaling_of_prefactors() {
    // the same field under 2ε: interaction and bulk terms transform by the prefactors only
    let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Gaussian { k: 1.0, a: 1.0 }.with_mass(8.0).unwrap(), 2);
    let model = MicroModel::default_circle();
    let cfg = ProblemConfig { sample: SampleConfig { tail_tol: 1e-8, ..Default::default() }, pad: Some(40), ..Default::default() };
    let p1 = Problem::new(&spec, &model, 0.3, Geometry::Ball, 1.0, 8, BoundaryPreset::Vacuum, &cfg).unwrap();
    let u = p1.random_field(0.5, 3);
    let e1 = energy_primal(&p1, &u).unwrap();
    // same kernel samples, prefactor only
    let mut p2 = p1.clone();
    p2.eps = 0.6;
    p2.kernel.eps = 0.6;
    let e2 = energy_primal(&p2, &u).unwrap();
    assert!((e1.bulk / e2.bulk - 4.0).abs() < 1e-12);
    assert!((e1.interaction / e2.interaction - 4.0).abs() < 1e-12);
}

#[test]
fn compact_kernel_has_no_layer_cut() {
    let spec: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Annulus { k: 1.0, r1: 0.5, r2: 1.0 }.with_mass(8.0).unwrap(), 2);
    let cfg = ProblemConfig { layer: LayerPolicy::StencilReach, ..Default::default() };
    let p = Problem::new(&spec, &MicroModel::default_circle(), 1.0, Geometry::Ball, 1.0, 16, BoundaryPreset::smooth(0.3, 0.0), &cfg).unwrap();
    let h = h_eps_profile(&p);
    assert_eq!(h.sup, 0.0);
    let u1 = p.random_field(0.7, 1);
    let u2 = p.random_field(0.7, 2);
    let d1 = finite_thickness_energy(&p, &u1).unwrap().total - energy_primal(&p, &u1).unwrap().total;
    let d2 = finite_thickness_energy(&p, &u2).unwrap().total - energy_primal(&p, &u2).unwrap().total;
    assert!((d1 - d2).abs() < 1e-9 * (1.0 + d1.abs()));
}

#[test]
fn thin_layer_is_rejected() {
    let spec = KernelSpec::scalar(RadialProfile::Gaussian { k: 1.0, a: 1.0 }, 2).with_layer(2.5, 1.0);
    let cfg = ProblemConfig { layer: LayerPolicy::Thickness(0.05), sample: SampleConfig { tail_tol: 1e-6, ..Default::default() }, ..Default::default() };
    let p = Problem::new(&spec, &MicroModel::default_circle(), 0.35, Geometry::Ball, 1.0, 6, BoundaryPreset::Vacuum, &cfg).unwrap();
    let u = p.boundary_field();
    assert!(matches!(finite_thickness_energy(&p, &u), Err(crate::Error::LayerTooThin { .. })));
}

#[test]
fn local_energy_paths_agree() {
    let f = RadialProfile::Gaussian { k: 1.0, a: 1.0 }.with_mass(8.0).unwrap();
    let spec = KernelSpec::scalar(f, 2);
    let mk = |conv| {
        let cfg = ProblemConfig { sample: SampleConfig { tail_tol: 1e-8, ..Default::default() }, conv, ..Default::default() };
        Problem::new(&spec, &MicroModel::default_circle(), 0.3, Geometry::Ball, 1.0, 8, BoundaryPreset::smooth(0.4, 0.1), &cfg)
            .unwrap()
    };
    let a = mk(ConvMethod::Direct);
    let b = mk(ConvMethod::Fft);
    let u = a.random_field(0.8, 4);
    let ua = LocalEnergy::new(&a, &u).unwrap();
    let ub = LocalEnergy::new(&b, &u).unwrap();
    for (x0, r) in [([0.0; 3], 0.5), ([0.3, -0.2, 0.1], 0.7), ([0.0; 3], 5.0)] {
        let va = ua.ball(&x0, r);
        let vb = ub.ball(&x0, r);
        assert!(rel(va.interaction, vb.interaction) < 1e-10, "{va:?} {vb:?}");
    }
}

#[test]
fn compact_layer_requirement_is_capped_at_the_reach() {
    let ann: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::Annulus { k: 1.0, r1: 0.25, r2: 1.5 }, 2);
    assert!((layer_required(&ann, 0.4) - 0.6).abs() < 1e-15);
    let heavy: KernelSpec<f64> = KernelSpec::scalar(RadialProfile::InverseSixth { c: 1.0, r_in: 0.5, r_out: 3.0 }, 2).with_layer(2.5, 0.5);
    assert!((layer_required(&heavy, 0.4) - 0.5 * 0.4f64.powf(0.2)).abs() < 1e-15);
}
