use std::sync::Arc;

use rayon::prelude::*;

use super::boundary::{BoundaryData, BoundaryPreset};
use super::convolve::{ConvMethod, Convolver};
use super::domain::{Domain, Geometry, Region};
use super::order::OrderField;
use crate::error::{Error, Result};
use crate::kernel::{sample_on_lattice, KernelSpec, SampleConfig, SampledKernel};
use crate::potential::{compute_c0_and_nn, BulkConfig, BulkPotential, DualState, MicroModel};
use crate::real::Real;

/// Thickness of `Ω_ε ∖ Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerPolicy {
    /// `τ·ε^{1−2/q}` from the kernel's layer constants.
    Required,
    /// The stencil reach `R_trunc`: no interaction pair is cut.
    StencilReach,
    /// Fixed physical thickness.
    Thickness(f64),
}

/// Which energy the solver and the Euler–Lagrange map use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionMode {
    /// Boundary datum on all of the box.
    Full,
    /// Interaction restricted to `Ω_ε × Ω_ε`.
    FiniteThickness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig<T> {
    pub sample: SampleConfig,
    pub conv: ConvMethod,
    pub bulk: BulkConfig<T>,
    pub layer: LayerPolicy,
    /// Extra cells around Ω; defaults to the stencil reach or the layer, whichever is larger.
    pub pad: Option<usize>,
}

impl<T: Real> Default for ProblemConfig<T> {
    fn default() -> Self {
        ProblemConfig {
            sample: SampleConfig::default(),
            conv: ConvMethod::Auto,
            bulk: BulkConfig::default(),
            layer: LayerPolicy::Required,
            pad: None,
        }
    }
}

/// Everything needed to evaluate `E_ε` on one lattice.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub domain: Arc<Domain<T>>,
    pub kernel: SampledKernel<T>,
    pub conv: Convolver<T>,
    /// Bulk potential built on the lattice `Σ K_ε h³`, so the two energy forms agree exactly.
    pub bulk: BulkPotential<T>,
    pub boundary: BoundaryData<T>,
    pub eps: T,
    /// Interior cell indices in increasing order.
    pub interior: Vec<usize>,
    /// `c₀|Ω|/ε²`.
    pub c_eps_bulk: T,
    /// `(1/2ε²)Σ_{x∉Ω} u_bd·k_S u_bd h³` with `k_S = Σ_{y∈box} K_ε(x−y)h³`.
    pub c_eps_exterior: T,
    /// `k_S` blocks on every cell (one scalar per cell for isotropic kernels).
    pub k_box: Vec<T>,
    /// Layer thickness `τ·ε^{1−2/q}` demanded by the kernel.
    pub layer_required: T,
}

/// Dual variables and potentials on interior cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField<T> {
    /// `Λ(u)` per interior cell, `m` entries each.
    pub b: Vec<T>,
    pub psi_s: Vec<T>,
    pub psi_b: Vec<T>,
}

impl<T: Real> Problem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: &KernelSpec<T>,
        model: &MicroModel<T>,
        eps: T,
        geometry: Geometry,
        radius: T,
        cells: usize,
        preset: BoundaryPreset<T>,
        cfg: &ProblemConfig<T>,
    ) -> Result<Self> {
        if spec.m != model.m {
            return Err(Error::InvalidInput(format!("kernel has m = {} but the model has m = {}", spec.m, model.m)));
        }
        let h = T::lit(2.0) * radius / T::from_usize_lossy(cells);
        let kernel = sample_on_lattice(spec, eps, h, &cfg.sample)?;
        let required = layer_required(spec, eps);
        let layer = match cfg.layer {
            LayerPolicy::Required => required,
            LayerPolicy::StencilReach => kernel.r_trunc,
            LayerPolicy::Thickness(t) => T::lit(t),
        };
        let domain = match cfg.pad {
            Some(p) => Domain::new(geometry, radius, cells, p, layer)?,
            None => Domain::with_reach(geometry, radius, cells, kernel.radius, layer)?,
        };
        let bulk = compute_c0_and_nn(model, &kernel.int_k, &cfg.bulk)?;
        let boundary = BoundaryData::build(preset, &domain, &bulk)?;
        Self::from_parts(Arc::new(domain), kernel, bulk, boundary, cfg.conv, required)
    }

    pub fn from_parts(
        domain: Arc<Domain<T>>,
        kernel: SampledKernel<T>,
        bulk: BulkPotential<T>,
        boundary: BoundaryData<T>,
        method: ConvMethod,
        layer_required: T,
    ) -> Result<Self> {
        let conv = Convolver::new(&kernel, domain.dims, method)?;
        let eps = kernel.eps;
        let interior = domain.interior_indices();
        let ones = vec![T::one(); domain.len()];
        let k_box = conv.apply_scalar_auto(&ones);
        let m = bulk.m();
        let inv2 = T::one() / (eps * eps);
        let vol = domain.cell_volume();
        let c_eps_bulk = bulk.c0 * domain.interior_volume() * inv2;
        let blk = if kernel.isotropic { 1 } else { m * m };
        let c_eps_exterior = (0..domain.len())
            .into_par_iter()
            .filter(|&x| !domain.is_interior(x))
            .map(|x| quad_block(&k_box[x * blk..(x + 1) * blk], boundary.cell(x), m))
            .collect::<Vec<T>>()
            .into_iter()
            .fold(T::zero(), |s, v| s + v)
            * vol
            * T::lit(0.5)
            * inv2;
        Ok(Problem { domain, kernel, conv, bulk, boundary, eps, interior, c_eps_bulk, c_eps_exterior, k_box, layer_required })
    }

    pub fn m(&self) -> usize {
        self.bulk.m()
    }

    pub fn c_eps(&self) -> T {
        self.c_eps_bulk + self.c_eps_exterior
    }

    /// A field equal to the boundary datum everywhere.
    pub fn boundary_field(&self) -> OrderField<T> {
        OrderField::from_boundary(self.domain.clone(), &self.boundary, self.eps)
    }

    pub fn random_field(&self, ratio: T, seed: u64) -> OrderField<T> {
        OrderField::random_admissible(self.domain.clone(), &self.boundary, &self.bulk.model, self.eps, ratio, seed)
    }

    /// Errors with `LayerTooThin` if `Ω_ε ∖ Ω` is thinner than [`layer_required`].
    pub fn check_layer(&self) -> Result<()> {
        let tol = T::lit(1e-12) * (T::one() + self.layer_required);
        if self.domain.layer + tol < self.layer_required {
            return Err(Error::LayerTooThin {
                required: self.layer_required.as_f64(),
                actual: self.domain.layer.as_f64(),
            });
        }
        Ok(())
    }

    /// `K_ε ∗ u` on the box; in finite-thickness mode the input is cut to `Ω_ε`.
    pub fn interaction(&self, u: &[T], mode: InteractionMode) -> Vec<T> {
        match mode {
            InteractionMode::Full => self.conv.apply(u),
            InteractionMode::FiniteThickness => self.conv.apply(&self.mask_omega_eps(u)),
        }
    }

    /// `K_ε ∗ u` on interior cells only, in the order of `self.interior`.
    pub fn interaction_interior(&self, u: &[T], mode: InteractionMode) -> Vec<T> {
        let src;
        let input = match mode {
            InteractionMode::Full => u,
            InteractionMode::FiniteThickness => {
                src = self.mask_omega_eps(u);
                &src
            }
        };
        match self.conv.method {
            ConvMethod::Fft => {
                let full = self.conv.apply(input);
                let m = self.m();
                self.interior.iter().flat_map(|&x| full[x * m..(x + 1) * m].to_vec()).collect()
            }
            _ => self.conv.apply_at(input, &self.interior),
        }
    }

    pub fn mask_omega_eps(&self, u: &[T]) -> Vec<T> {
        let m = self.m();
        let mut v = u.to_vec();
        for x in 0..self.domain.len() {
            if self.domain.region(x) == Region::Exterior {
                v[x * m..(x + 1) * m].iter_mut().for_each(|c| *c = T::zero());
            }
        }
        v
    }

    /// `Λ(u)`, `ψ_s(u)` and `ψ_b(u)` on interior cells, warm-started from `warm` if given.
    pub fn dual_field(&self, u: &OrderField<T>, warm: Option<&[T]>) -> Result<DualField<T>> {
        let m = self.m();
        let zero = vec![T::zero(); m];
        let states: Vec<Result<(DualState<T>, T, T)>> = self
            .interior
            .par_iter()
            .enumerate()
            .map(|(n, &x)| {
                let b0 = warm.map_or(&zero[..], |w| &w[n * m..(n + 1) * m]);
                let (ps, st) = self.bulk.psi_s_from(u.cell(x), b0)?;
                let quad = quad_block(&self.bulk.int_k, u.cell(x), m);
                Ok((st, ps, self.bulk.combine(ps, quad)))
            })
            .collect();
        let mut out = DualField { b: Vec::with_capacity(self.interior.len() * m), psi_s: Vec::new(), psi_b: Vec::new() };
        for s in states {
            let (st, ps, pb) = s?;
            out.b.extend_from_slice(&st.b);
            out.psi_s.push(ps);
            out.psi_b.push(pb);
        }
        Ok(out)
    }

    /// `ψ_b(u)` on every box cell, zero off Ω.
    pub fn psi_b_cells(&self, u: &OrderField<T>) -> Result<Vec<T>> {
        let d = self.dual_field(u, None)?;
        let mut out = vec![T::zero(); self.domain.len()];
        for (n, &x) in self.interior.iter().enumerate() {
            out[x] = d.psi_b[n];
        }
        Ok(out)
    }
}

/// `u·Bu` for an isotropic scalar block or a full `m×m` block.
pub(crate) fn quad_block<T: Real>(blk: &[T], u: &[T], m: usize) -> T {
    if blk.len() == 1 {
        blk[0] * u.iter().fold(T::zero(), |s, &x| s + x * x)
    } else {
        let mut s = T::zero();
        for a in 0..m {
            for b in 0..m {
                s = s + u[a] * blk[a * m + b] * u[b];
            }
        }
        s
    }
}

/// `τ·ε^{1−2/q}`.
/// `τ·ε^{1−2/q}`, capped at the rescaled support radius for compact kernels:
/// a layer that wide already holds every pair that interacts with Ω.
pub fn layer_required<T: Real>(spec: &KernelSpec<T>, eps: T) -> T {
    let t = spec.tau * eps.powf(T::one() - T::lit(2.0) / spec.q);
    match spec.support_radius() {
        Some(r) => t.min(eps * r),
        None => t,
    }
}
