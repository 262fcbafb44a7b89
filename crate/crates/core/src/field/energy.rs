use rayon::prelude::*;

use super::convolve::ConvMethod;
use super::domain::{Domain, Geometry, Region};
use super::order::OrderField;
use super::problem::{quad_block, DualField, Problem};
use crate::error::{Error, Result};
use crate::kernel::{sample_on_lattice, SampleConfig, SampledKernel};
use crate::linalg::sym_eigenvalues;
use crate::real::{dot, Real};

/// Energy split into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<T> {
    pub interaction: T,
    pub bulk: T,
    /// Additive constant (zero for the oscillation form).
    pub c_eps: T,
    pub total: T,
    /// Interaction summed over `x` in Ω, the layer and the exterior.
    pub interaction_by_region: [T; 3],
}

impl<T: Real> EnergyBreakdown<T> {
    fn new(by_region: [T; 3], bulk: T, c_eps: T) -> Self {
        let interaction = by_region[0] + by_region[1] + by_region[2];
        EnergyBreakdown { interaction, bulk, c_eps, total: interaction + bulk + c_eps, interaction_by_region: by_region }
    }
}

fn region_sums<T: Real>(domain: &Domain<T>, per_cell: impl Fn(usize) -> T + Sync) -> [T; 3] {
    // fixed-size chunks keep the reduction order independent of the thread count
    let parts: Vec<[T; 3]> = (0..domain.len())
        .collect::<Vec<_>>()
        .par_chunks(4096)
        .map(|ch| {
            let mut s = [T::zero(); 3];
            for &x in ch {
                s[domain.region(x) as usize] = s[domain.region(x) as usize] + per_cell(x);
            }
            s
        })
        .collect();
    parts.into_iter().fold([T::zero(); 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
}

fn ordered_sum<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x)
}

/// `−(1/2ε²)ΣΣ K_ε u·u h⁶ + (1/ε²)Σ_Ω ψ_s h³ + C_ε`.
pub fn energy_primal<T: Real>(p: &Problem<T>, u: &OrderField<T>) -> Result<EnergyBreakdown<T>> {
    let d = p.dual_field(u, None)?;
    Ok(energy_primal_with(p, u, &d, &p.conv.apply(&u.values)))
}

/// Primal form with precomputed duals and `K_ε∗u`.
pub fn energy_primal_with<T: Real>(p: &Problem<T>, u: &OrderField<T>, d: &DualField<T>, ku: &[T]) -> EnergyBreakdown<T> {
    let m = p.m();
    let s = -T::lit(0.5) * p.kernel.inv_eps2() * p.domain.cell_volume();
    let by = region_sums(&p.domain, |x| s * dot(u.cell(x), &ku[x * m..(x + 1) * m]));
    let bulk = ordered_sum(&d.psi_s) * p.kernel.inv_eps2() * p.domain.cell_volume();
    EnergyBreakdown::new(by, bulk, p.c_eps())
}

/// `(1/4ε²)ΣΣ K_ε(u(x)−u(y))^{⊗2} h⁶ + (1/ε²)Σ_Ω ψ_b h³`, via `K_ε∗u` and `k_S`.
pub fn energy_oscillation<T: Real>(p: &Problem<T>, u: &OrderField<T>) -> Result<EnergyBreakdown<T>> {
    let d = p.dual_field(u, None)?;
    Ok(energy_oscillation_with(p, u, &d, &p.conv.apply(&u.values)))
}

pub fn energy_oscillation_with<T: Real>(p: &Problem<T>, u: &OrderField<T>, d: &DualField<T>, ku: &[T]) -> EnergyBreakdown<T> {
    let m = p.m();
    let blk = if p.kernel.isotropic { 1 } else { m * m };
    let s = T::lit(0.5) * p.kernel.inv_eps2() * p.domain.cell_volume();
    let by = region_sums(&p.domain, |x| {
        let ux = u.cell(x);
        // Ω cells see the full stencil, so k_S is the lattice mass there
        let ks = if p.domain.is_interior(x) {
            quad_block(&p.bulk.int_k, ux, m)
        } else {
            quad_block(&p.k_box[x * blk..(x + 1) * blk], ux, m)
        };
        s * (ks - dot(ux, &ku[x * m..(x + 1) * m]))
    });
    let bulk = ordered_sum(&d.psi_b) * p.kernel.inv_eps2() * p.domain.cell_volume();
    EnergyBreakdown::new(by, bulk, T::zero())
}

/// Oscillation form by explicit pair differences; independent of the convolution path.
pub fn energy_oscillation_pairs<T: Real>(p: &Problem<T>, u: &OrderField<T>) -> Result<EnergyBreakdown<T>> {
    let d = p.dual_field(u, None)?;
    let all = vec![true; p.domain.len()];
    let per = pair_energy_cells(p, &u.values, &all);
    let by = region_sums(&p.domain, |x| per[x]);
    let bulk = ordered_sum(&d.psi_b) * p.kernel.inv_eps2() * p.domain.cell_volume();
    Ok(EnergyBreakdown::new(by, bulk, T::zero()))
}

/// Per-cell `(1/4ε²)Σ_{y∈G} K_ε(x−y)(u(x)−u(y))^{⊗2}h⁶` for `x ∈ G`, zero elsewhere.
fn pair_energy_cells<T: Real>(p: &Problem<T>, u: &[T], mask: &[bool]) -> Vec<T> {
    let m = p.m();
    let dom = &p.domain;
    let [n0, n1, n2] = dom.dims;
    let s = T::lit(0.25) * p.kernel.inv_eps2() * dom.cell_volume();
    let st = p.conv.stencil();
    (0..dom.len())
        .into_par_iter()
        .map(|x| {
            if !mask[x] {
                return T::zero();
            }
            let [i, j, k] = dom.ijk(x);
            let ux = &u[x * m..(x + 1) * m];
            let mut acc = T::zero();
            let mut diff = vec![T::zero(); m];
            for (z, blk) in st {
                let (a, b, c) = (i as isize - z[0], j as isize - z[1], k as isize - z[2]);
                if a < 0 || b < 0 || c < 0 || a >= n0 as isize || b >= n1 as isize || c >= n2 as isize {
                    continue;
                }
                let y = ((a as usize) * n1 + b as usize) * n2 + c as usize;
                if !mask[y] {
                    continue;
                }
                for q in 0..m {
                    diff[q] = ux[q] - u[y * m + q];
                }
                acc = acc + quad_block(blk, &diff, m);
            }
            acc * s
        })
        .collect()
}

/// Same total as [`pair_energy_cells`] through `2Σ_G w·(K∗χ_G)w − 2Σ_G w·K∗(χ_G w)`
/// with `w = u − c` for a reference value `c` taken from `G` (the pair sum is
/// shift invariant, and constants then give exactly zero). Per-cell values
/// differ from the pair form, sums agree.
fn pair_energy_transform<T: Real>(p: &Problem<T>, u: &[T], mask: &[bool]) -> Vec<T> {
    let m = p.m();
    let n = p.domain.len();
    let s = T::lit(0.5) * p.kernel.inv_eps2() * p.domain.cell_volume();
    let Some(first) = mask.iter().position(|&b| b) else { return vec![T::zero(); n] };
    let c = u[first * m..(first + 1) * m].to_vec();
    let chi: Vec<T> = mask.iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
    let kg = p.conv.apply_scalar_auto(&chi);
    let blk = kg.len() / n;
    let mut w = vec![T::zero(); n * m];
    for x in 0..n {
        if mask[x] {
            for a in 0..m {
                w[x * m + a] = u[x * m + a] - c[a];
            }
        }
    }
    let kw = p.conv.apply(&w);
    (0..n)
        .into_par_iter()
        .map(|x| {
            if !mask[x] {
                return T::zero();
            }
            let wx = &w[x * m..(x + 1) * m];
            s * (quad_block(&kg[x * blk..(x + 1) * blk], wx, m) - dot(wx, &kw[x * m..(x + 1) * m]))
        })
        .collect()
}

/// `F_ε(u, G)` evaluator with `ψ_b` cached on the box.
#[derive(Debug, Clone)]
pub struct LocalEnergy<'a, T: Real> {
    pub problem: &'a Problem<T>,
    pub field: &'a OrderField<T>,
    pub psi_b: Vec<T>,
}

/// Interaction and bulk parts of `F_ε(u, G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalValue<T> {
    pub interaction: T,
    pub bulk: T,
    pub total: T,
}

impl<'a, T: Real> LocalEnergy<'a, T> {
    pub fn new(problem: &'a Problem<T>, field: &'a OrderField<T>) -> Result<Self> {
        let psi_b = problem.psi_b_cells(field)?;
        Ok(LocalEnergy { problem, field, psi_b })
    }

    pub fn eval(&self, mask: &[bool]) -> LocalValue<T> {
        let p = self.problem;
        let interaction = if p.conv.method == ConvMethod::Fft {
            chunked_sum(&pair_energy_transform(p, &self.field.values, mask))
        } else {
            chunked_sum(&pair_energy_cells(p, &self.field.values, mask))
        };
        let vol = p.domain.cell_volume() * p.kernel.inv_eps2();
        let bulk: Vec<T> = (0..p.domain.len())
            .map(|x| if mask[x] && p.domain.is_interior(x) { self.psi_b[x] } else { T::zero() })
            .collect();
        let bulk = chunked_sum(&bulk) * vol;
        LocalValue { interaction, bulk, total: interaction + bulk }
    }

    pub fn ball(&self, x0: &[T; 3], rho: T) -> LocalValue<T> {
        self.eval(&self.problem.domain.ball_mask(x0, rho))
    }
}

fn chunked_sum<T: Real>(v: &[T]) -> T {
    let parts: Vec<T> = v.par_chunks(4096).map(ordered_sum).collect();
    ordered_sum(&parts)
}

/// `F_ε(u, G)` for one region.
pub fn local_energy<T: Real>(p: &Problem<T>, u: &OrderField<T>, mask: &[bool]) -> Result<LocalValue<T>> {
    Ok(LocalEnergy::new(p, u)?.eval(mask))
}

/// `Ẽ_ε`: interaction over `Ω_ε × Ω_ε`, same bulk term and constant.
pub fn finite_thickness_energy<T: Real>(p: &Problem<T>, u: &OrderField<T>) -> Result<EnergyBreakdown<T>> {
    p.check_layer()?;
    let d = p.dual_field(u, None)?;
    let ku = p.conv.apply(&p.mask_omega_eps(&u.values));
    Ok(finite_thickness_with(p, u, &d, &ku))
}

pub fn finite_thickness_with<T: Real>(p: &Problem<T>, u: &OrderField<T>, d: &DualField<T>, ku_masked: &[T]) -> EnergyBreakdown<T> {
    let m = p.m();
    let s = -T::lit(0.5) * p.kernel.inv_eps2() * p.domain.cell_volume();
    let by = region_sums(&p.domain, |x| {
        if p.domain.in_omega_eps(x) {
            s * dot(u.cell(x), &ku_masked[x * m..(x + 1) * m])
        } else {
            T::zero()
        }
    });
    let bulk = ordered_sum(&d.psi_s) * p.kernel.inv_eps2() * p.domain.cell_volume();
    EnergyBreakdown::new(by, bulk, p.c_eps())
}

/// `‖H_ε(x)‖` on interior cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HProfile<T> {
    /// Spectral norm per interior cell, in the order of `Problem::interior`.
    pub values: Vec<T>,
    pub sup: T,
    /// Box index of the maximiser.
    pub argmax: usize,
    /// `ε⁻²` times the kernel mass beyond the stencil, not included in `values`.
    pub untruncated_tail: T,
}

/// `H_ε(x) = ε⁻² Σ_{y ∉ Ω_ε} K_ε(x−y)h³` over the lattice stencil.
pub fn h_eps_profile<T: Real>(p: &Problem<T>) -> HProfile<T> {
    let m = p.m();
    let dom = &p.domain;
    let [n0, n1, n2] = dom.dims;
    let blk = if p.kernel.isotropic { 1 } else { m * m };
    let st = p.conv.stencil();
    let values: Vec<T> = p
        .interior
        .par_iter()
        .map(|&x| {
            let [i, j, k] = dom.ijk(x);
            let mut acc = vec![T::zero(); blk];
            for (z, b) in st {
                let (a, bb, c) = (i as isize - z[0], j as isize - z[1], k as isize - z[2]);
                let inside = a >= 0 && bb >= 0 && c >= 0 && a < n0 as isize && bb < n1 as isize && c < n2 as isize
                    && dom.in_omega_eps(((a as usize) * n1 + bb as usize) * n2 + c as usize);
                if !inside {
                    for (o, &v) in acc.iter_mut().zip(b) {
                        *o = *o + v;
                    }
                }
            }
            let nrm = if blk == 1 {
                acc[0].fabs()
            } else {
                let w = sym_eigenvalues(&acc, m);
                w[0].fabs().max(w[m - 1].fabs())
            };
            nrm * p.kernel.inv_eps2()
        })
        .collect();
    let (argmax, sup) = values
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(ai, av), (i, &v)| if v > av { (i, v) } else { (ai, av) });
    let mass = p.kernel.spec.f1.mass().unwrap_or(T::zero()).fabs();
    HProfile {
        values,
        sup,
        argmax: p.interior.get(argmax).copied().unwrap_or(0),
        untruncated_tail: p.kernel.tail_mass * mass * p.kernel.inv_eps2(),
    }
}

/// Both sides of the blow-up identity `ρ⁻¹F_ε(u, B_ρ(x₀)) = F_{ε/ρ}(u_ρ, B₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
}

/// Rescales onto the unit ball on a lattice of the same spacing with trilinear resampling.
pub fn scaling_check<T: Real>(p: &Problem<T>, u: &OrderField<T>, x0: &[T; 3], rho: T) -> Result<ScalingCheck<T>> {
    let dom = &p.domain;
    let h = dom.h;
    let cells_f = T::lit(2.0) / h;
    let cells = cells_f.round().to_usize().unwrap_or(0);
    if cells < 2 || (cells_f - T::from_usize_lossy(cells)).fabs() > T::lit(1e-9) * cells_f {
        return Err(Error::ResolutionMismatch("the unit ball is not commensurate with the lattice spacing".into()));
    }
    let local = LocalEnergy::new(p, u)?;
    let lhs = local.ball(x0, rho).total / rho;

    let eps_r = p.eps / rho;
    let spec = &p.kernel.spec;
    let sample = SampleConfig { tail_tol: p.kernel.tail_mass.as_f64().max(1e-14), check_resolution: false };
    let ker: SampledKernel<T> = sample_on_lattice(spec, eps_r, h, &sample)?;
    let unit = Domain::new(Geometry::Ball, T::one(), cells, 1, T::zero())?;
    let m = p.m();
    let mut vals = vec![T::zero(); unit.len() * m];
    let mut psi = vec![T::zero(); unit.len()];
    let mask = unit.interior_mask();
    for y in 0..unit.len() {
        if !mask[y] {
            continue;
        }
        let c = unit.coord(y);
        let x = [rho * c[0] + x0[0], rho * c[1] + x0[1], rho * c[2] + x0[2]];
        let v = dom
            .interpolate(&u.values, m, &x)
            .ok_or_else(|| Error::ResolutionMismatch("rescaled ball leaves the box".into()))?;
        if dom.outside_distance(&x) < T::zero() {
            psi[y] = p.bulk.psi_b(&v)?;
        }
        vals[y * m..(y + 1) * m].copy_from_slice(&v);
    }
    let [n0, n1, n2] = unit.dims;
    let s = T::lit(0.25) / (eps_r * eps_r) * unit.cell_volume();
    let st = ker.support();
    let h3 = ker.cell_volume();
    let b = ker.block();
    let inter: Vec<T> = (0..unit.len())
        .into_par_iter()
        .map(|x| {
            if !mask[x] {
                return T::zero();
            }
            let [i, j, k] = unit.ijk(x);
            let mut acc = T::zero();
            let mut diff = vec![T::zero(); m];
            for (z, idx) in &st {
                let (a, bb, c) = (i as isize - z[0], j as isize - z[1], k as isize - z[2]);
                if a < 0 || bb < 0 || c < 0 || a >= n0 as isize || bb >= n1 as isize || c >= n2 as isize {
                    continue;
                }
                let y = ((a as usize) * n1 + bb as usize) * n2 + c as usize;
                if !mask[y] {
                    continue;
                }
                for q in 0..m {
                    diff[q] = vals[x * m + q] - vals[y * m + q];
                }
                acc = acc + quad_block(&ker.values[idx * b..(idx + 1) * b], &diff, m) * h3;
            }
            acc * s
        })
        .collect();
    let rhs = chunked_sum(&inter) + chunked_sum(&psi) * unit.cell_volume() / (eps_r * eps_r);
    Ok(ScalingCheck { lhs, rhs, gap: (lhs - rhs).fabs() })
}

/// Cells of a region tag.
pub fn region_mask<T: Real>(domain: &Domain<T>, region: Region) -> Vec<bool> {
    domain.regions.iter().map(|&r| r == region).collect()
}
