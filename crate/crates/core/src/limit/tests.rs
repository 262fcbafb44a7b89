use std::sync::Arc;

use super::*;
use crate::field::{Domain, Geometry};
use crate::kernel::ElasticTensor;
use crate::potential::Vacuum;
use crate::rng;
use rand::Rng;

const S0: f64 = 0.5;

fn ball(cells: usize) -> Arc<Domain<f64>> {
    Arc::new(Domain::new(Geometry::Ball, 1.0, cells, 2, 0.0).unwrap())
}

fn circle(cells: usize, f: impl Fn(&[f64; 3]) -> f64) -> ManifoldField<f64> {
    ManifoldField::from_fn(ball(cells), Vacuum::Circle { radius: S0 }, 2, |x| {
        let t = f(x);
        vec![(2.0 * t).cos(), (2.0 * t).sin()]
    })
}

fn smooth_angle(x: &[f64; 3]) -> f64 {
    0.4 * x[0] + 0.3 * x[1] * x[2] + 0.2 * (x[0] * x[0] - x[2] * x[2])
}

#[test]
fn constant_field_has_zero_energy() {
    let u = circle(12, |_| 0.3);
    let l = ElasticTensor::isotropic(2, 0.7);
    assert_eq!(limit_energy(&u, &l), 0.0);
    assert!(compact_energy(&u, &l).abs() < 1e-28);
    let r = harmonic_minimize(&u, &l, &HarmonicConfig::default()).unwrap().check().unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.energy.abs() < 1e-28);
}

#[test]
fn linear_angle_energy() {
    let a = 0.6;
    let lam = 0.7;
    let l = ElasticTensor::isotropic(2, lam);
    for cells in [12, 24] {
        let u = circle(cells, |x| a * x[0]);
        let h = u.domain.h;
        let vol = u.domain.interior_volume();
        let e = limit_energy(&u, &l);
        // central differences of s₀e^{2iax} have modulus s₀ sin(2ah)/h
        let discrete = lam * (S0 * (2.0 * a * h).sin() / h).powi(2) * vol;
        assert!((e - discrete).abs() < 1e-12 * e);
        let cont = lam * (S0 * 2.0 * a).powi(2) * vol;
        assert!((e - cont).abs() / cont < 0.5 * (2.0 * a * h).powi(2));
    }
}

#[test]
fn anisotropic_contraction_matches_brute_force() {
    let mut r = rng::stream(3, "test");
    let m = 2;
    let mut l = ElasticTensor::zeros(m);
    for v in l.data.iter_mut() {
        *v = r.gen_range(-1.0..1.0);
    }
    l.symmetrize();
    let u = circle(10, smooth_angle);
    let dom = &u.domain;
    let h = dom.h;
    let mut brute = 0.0;
    for x in dom.interior_indices() {
        let [i0, j0, k0] = dom.ijk(x);
        let at = |d: [isize; 3], a: usize| {
            let y = dom.index((i0 as isize + d[0]) as usize, (j0 as isize + d[1]) as usize, (k0 as isize + d[2]) as usize);
            u.values[y * m + a]
        };
        let mut du = [[0.0; 3]; 2];
        for a in 0..m {
            for i in 0..3 {
                let mut e = [0isize; 3];
                e[i] = 1;
                let mut f = [0isize; 3];
                f[i] = -1;
                du[a][i] = (at(e, a) - at(f, a)) / (2.0 * h);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..m {
                    for b in 0..m {
                        brute += l.get(i, j, a, b) * du[a][i] * du[b][j];
                    }
                }
            }
        }
    }
    brute *= h * h * h;
    let e = limit_energy(&u, &l);
    assert!((e - brute).abs() < 1e-12 * (1.0 + brute.abs()), "{e} {brute}");
}

#[test]
fn ellipticity_transfer() {
    let mut r = rng::stream(4, "test");
    let mut l = ElasticTensor::isotropic(2, 1.0);
    for v in l.data.iter_mut() {
        *v += 0.1 * r.gen_range(-1.0..1.0);
    }
    l.symmetrize();
    let (lo, hi) = l.eigen_range();
    assert!(lo > 0.0);
    let u = circle(12, smooth_angle);
    let d = dirichlet_energy(&u);
    let e = limit_energy(&u, &l);
    assert!(lo * d <= e * (1.0 + 1e-12) && e <= hi * d * (1.0 + 1e-12));
}

#[test]
fn compact_gradient_matches_finite_differences() {
    let mut r = rng::stream(8, "test");
    let mut l = ElasticTensor::isotropic(2, 0.5);
    for v in l.data.iter_mut() {
        *v += 0.05 * r.gen_range(-1.0..1.0);
    }
    l.symmetrize();
    let u = circle(8, smooth_angle);
    let g = compact_gradient(&u, &l);
    let h3 = u.domain.cell_volume();
    let inner = u.domain.interior_indices();
    for k in [0usize, 17, 60, 101] {
        let x = inner[k % inner.len()];
        for a in 0..2 {
            let d = 1e-6;
            let mut p = u.clone();
            p.cell_mut(x)[a] += d;
            let mut q = u.clone();
            q.cell_mut(x)[a] -= d;
            let fd = (compact_energy(&p, &l) - compact_energy(&q, &l)) / (2.0 * d);
            assert!((fd - g[x * 2 + a] * h3).abs() < 1e-6 * (1e-3 + fd.abs()), "{fd} {}", g[x * 2 + a] * h3);
        }
    }
    // no gradient off Ω
    for x in 0..u.domain.len() {
        if !u.domain.is_interior(x) {
            assert_eq!(&g[x * 2..x * 2 + 2], &[0.0, 0.0]);
        }
    }
}

#[test]
fn retraction_is_idempotent() {
    let u = circle(8, smooth_angle);
    let mut v = u.clone();
    v.retract();
    let d = v.values.iter().zip(&u.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(d < 1e-15);
    assert!(u.max_distance() < 1e-15);
    u.validate(1e-12).unwrap();
}

fn harmonic_error(cells: usize) -> (f64, HarmonicResult<f64>) {
    let start = circle(cells, smooth_angle);
    let l = ElasticTensor::isotropic(2, 1.0);
    let dom = start.domain.clone();
    let data: Vec<f64> = (0..dom.len()).map(|x| smooth_angle(&dom.coord(x))).collect();
    // start away from the answer: the boundary angle frozen at its mean inside
    let init = start.with_interior(|_| vec![1.0, 0.0]);
    let r = harmonic_minimize(&init, &l, &HarmonicConfig { tol: 1e-9, ..Default::default() }).unwrap().check().unwrap();
    let theta = harmonic_extension(&dom, &data, 1e-13).unwrap();
    let oracle = ManifoldField::from_fn(dom.clone(), Vacuum::Circle { radius: S0 }, 2, |x| {
        let t = theta[dom.locate(x).unwrap()];
        vec![(2.0 * t).cos(), (2.0 * t).sin()]
    });
    (r.field.interior_sup_distance(&oracle), r)
}

#[test]
fn harmonic_map_matches_harmonic_angle() {
    let (e1, _) = harmonic_error(8);
    let (e2, r2) = harmonic_error(16);
    assert!(e2 < 1e-2 * S0, "{e1} {e2}");
    assert!(e2 < e1 * 0.5, "{e1} {e2}");
    assert!(r2.energy > 0.0 && r2.limit_energy > 0.0);
}

#[test]
fn harmonic_map_beats_random_interpolants() {
    let start = circle(10, smooth_angle);
    let l = ElasticTensor::isotropic(2, 1.0);
    let r = harmonic_minimize(&start, &l, &HarmonicConfig { tol: 1e-9, ..Default::default() }).unwrap().check().unwrap();
    for s in 0..20 {
        let v = start.random_interpolant(0.8, s);
        assert!(r.energy <= compact_energy(&v, &l));
    }
    let ms = harmonic_multi_start(&start, &l, &HarmonicConfig { tol: 1e-9, n_random: 2, ..Default::default() }).unwrap();
    assert!((ms.energy - r.energy).abs() < 1e-6 * r.energy);
}

#[test]
fn frame_equivariance() {
    let l = ElasticTensor::isotropic(2, 1.0);
    let cfg = HarmonicConfig { tol: 1e-10, ..Default::default() };
    let a = harmonic_minimize(&circle(10, smooth_angle), &l, &cfg).unwrap().check().unwrap();
    let b = harmonic_minimize(&circle(10, |x| smooth_angle(x) + 0.4), &l, &cfg).unwrap().check().unwrap();
    assert!((a.energy - b.energy).abs() < 1e-7 * a.energy);
    let rot = a.field.with_interior(|_| vec![1.0, 0.0]);
    let mut rot = rot;
    let (c, s) = (0.8f64.cos(), 0.8f64.sin());
    for x in 0..rot.domain.len() {
        let v = a.field.cell(x);
        rot.cell_mut(x).copy_from_slice(&[c * v[0] - s * v[1], s * v[0] + c * v[1]]);
    }
    assert!(rot.interior_sup_distance(&b.field) < 1e-5);
}

#[test]
fn singular_set_on_smooth_and_vortex_fields() {
    let smooth = circle(32, smooth_angle);
    let radii = [0.5, 0.25, 0.1];
    let rep = singular_set(&smooth, &radii, 0.2);
    assert_eq!(rep.dropped, vec![0.1]);
    assert_eq!(rep.radii, vec![0.5, 0.25]);
    assert!(rep.flagged.is_empty(), "{}", rep.flagged.len());
    assert!(singular_set(&smooth, &radii, f64::INFINITY).flagged.is_empty());

    let mut fractions = Vec::new();
    for cells in [16, 32] {
        let h = 2.0 / cells as f64;
        let v = circle(cells, |x| 0.5 * x[1].atan2(x[0]));
        let rep = singular_set(&v, &[4.0 * h], 0.5);
        assert!(!rep.flagged.is_empty());
        for &x in &rep.flagged {
            let p = v.domain.coord(x);
            // off the line the density is about (4π/3)ρ²s₀²/d²
            assert!((p[0] * p[0] + p[1] * p[1]).sqrt() < 2.0 * 4.0 * h, "{p:?}");
        }
        // weakly monotone in the threshold
        assert!(rep.reflag(0.8).len() <= rep.flagged.len());
        fractions.push(rep.flagged_fraction());
    }
    assert!(fractions[1] < fractions[0], "{fractions:?}");
}


mod gamma {
    use super::*;
    use crate::field::{BoundaryPreset, Problem, ProblemConfig};
    use crate::kernel::{elastic_tensor, KernelSpec, RadialProfile, SampleConfig};
    use crate::potential::MicroModel;

    fn spec() -> KernelSpec<f64> {
        KernelSpec::scalar(RadialProfile::Gaussian { k: 1.0, a: 1.0 }.with_mass(8.0).unwrap(), 2)
    }

    fn cfg() -> ProblemConfig<f64> {
        ProblemConfig { sample: SampleConfig { tail_tol: 1e-8, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn constant_map_has_zero_gaps() {
        let v = |_: &[f64; 3]| vec![0.3, -0.7];
        let rows = gamma_limsup_check(&spec(), &MicroModel::default_circle(), &v, Geometry::Ball, 1.0, 8, &[0.6, 0.3], None, &cfg())
            .unwrap();
        for r in rows {
            assert!(r.e0 == 0.0 && r.interaction.abs() < 1e-12 && r.gap.abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn bad_ladder_is_rejected() {
        let v = |_: &[f64; 3]| vec![1.0, 0.0];
        let e = gamma_limsup_check(&spec(), &MicroModel::default_circle(), &v, Geometry::Ball, 1.0, 8, &[0.3, -0.1], None, &cfg());
        assert!(e.is_err());
    }

    #[test]
    fn liminf_collapses_to_limsup() {
        let v = |x: &[f64; 3]| {
            let t = 0.3 * x[0] + 0.1 * x[1] * x[1];
            vec![(2.0 * t).cos(), (2.0 * t).sin()]
        };
        let eps = [0.6, 0.3];
        let model = MicroModel::default_circle();
        let rows = gamma_limsup_check(&spec(), &model, &v, Geometry::Ball, 1.0, 8, &eps, None, &cfg()).unwrap();
        assert!(rows.iter().all(|r| r.f_eps > 0.0 && r.e0 > 0.0));
        let l = elastic_tensor(&spec()).unwrap();
        for (r, &e) in rows.iter().zip(&eps) {
            let p = Problem::new(&spec(), &model, e, Geometry::Ball, 1.0, 8, BoundaryPreset::Vacuum, &cfg()).unwrap();
            let u0 = ManifoldField::from_fn(p.domain.clone(), p.bulk.vacuum.clone(), 2, v);
            let u = u0.to_order_field(e);
            // Ω as a ball larger than the box
            let t = gamma_liminf_check(&[(&p, &u)], &u0, &l, &[([0.0; 3], 1.0)]).unwrap();
            assert_eq!(t[0].l2_half, 0.0);
            assert!((t[0].gap - r.gap).abs() < 1e-12 * (1.0 + r.gap.abs()), "{:?} {r:?}", t[0]);
        }
    }
}
