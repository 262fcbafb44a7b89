//! Mapping from configuration sections to library objects.

use nllc::field::{BoundaryPreset, Geometry, InteractionMode, LayerPolicy, Problem, ProblemConfig};
use nllc::kernel::{KernelSpec, RadialProfile, SampleConfig};
use nllc::potential::MicroModel;
use nllc::solver::SolverConfig;

use crate::config::{ConfigError, ExperimentConfig, LayerSetting};

pub fn kernel(cfg: &ExperimentConfig) -> Result<KernelSpec<f64>, ConfigError> {
    let k = &cfg.kernel;
    let amp = k.k.unwrap_or(1.0);
    let profile = match k.preset.as_str() {
        "zero" => RadialProfile::Zero,
        "gaussian" => RadialProfile::Gaussian { k: amp, a: k.a.unwrap_or(1.0) },
        "annulus" => RadialProfile::Annulus { k: amp, r1: k.r1.unwrap_or(0.5), r2: k.r2.unwrap_or(1.0) },
        "inverse-sixth" => RadialProfile::InverseSixth { c: amp, r_in: k.r_in.unwrap_or(0.5), r_out: k.r_out.unwrap_or(1.0) },
        other => return Err(ConfigError::new("kernel.preset", format!("unknown preset `{other}`"))),
    };
    let profile = match k.mass {
        Some(m) if !profile.is_zero() => profile
            .with_mass(m)
            .ok_or_else(|| ConfigError::new("kernel.mass", "profile has no finite mass to normalise"))?,
        _ => profile,
    };
    let m = model(cfg).m;
    let spec = KernelSpec::scalar(profile, m);
    Ok(match (k.layer_q, k.layer_tau) {
        (Some(q), Some(t)) => spec.with_layer(q, t),
        _ => spec,
    })
}

pub fn model(cfg: &ExperimentConfig) -> MicroModel<f64> {
    match cfg.model.preset.as_str() {
        "sphere" => MicroModel::default_sphere(),
        _ => MicroModel::default_circle(),
    }
}

pub fn geometry(cfg: &ExperimentConfig) -> Geometry {
    match cfg.domain.geometry.as_str() {
        "cube" => Geometry::Cube,
        _ => Geometry::Ball,
    }
}

pub fn boundary(cfg: &ExperimentConfig) -> BoundaryPreset<f64> {
    let b = &cfg.boundary;
    match b.preset.as_str() {
        "constant" => BoundaryPreset::Constant(b.value.clone().unwrap_or_default()),
        "smooth" => BoundaryPreset::SmoothAngle { slope: b.slope, curvature: b.curvature, exterior_ratio: b.exterior_ratio, ramp: b.ramp },
        "vortex" => BoundaryPreset::Vortex { winding: b.winding, exterior_ratio: b.exterior_ratio, ramp: b.ramp },
        _ => BoundaryPreset::Vacuum,
    }
}

pub fn problem_config(cfg: &ExperimentConfig) -> ProblemConfig<f64> {
    let layer = match &cfg.domain.layer {
        LayerSetting::Named(n) if n == "stencil" => LayerPolicy::StencilReach,
        LayerSetting::Thickness(t) => LayerPolicy::Thickness(*t),
        LayerSetting::Named(_) => LayerPolicy::Required,
    };
    ProblemConfig { sample: SampleConfig { tail_tol: cfg.kernel.tail_tol, ..Default::default() }, layer, ..Default::default() }
}

pub fn solver(cfg: &ExperimentConfig) -> SolverConfig<f64> {
    let s = &cfg.solver;
    SolverConfig {
        alpha: s.alpha,
        alpha_min: (s.alpha / 1024.0).min(s.alpha),
        tol: s.tol,
        max_iter: s.max_iter,
        seed: cfg.seed,
        mode: if s.mode == "finite-thickness" { InteractionMode::FiniteThickness } else { InteractionMode::Full },
        ..Default::default()
    }
}

/// Lattice spacing: `cells` across the diameter of Ω.
pub fn spacing(cfg: &ExperimentConfig) -> f64 {
    2.0 * cfg.domain.radius / cfg.domain.cells as f64
}

/// Every `ε` in the sweep must resolve the kernel's feature length.
pub fn check_resolution(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let spec = kernel(cfg)?;
    let h = spacing(cfg);
    if let Some((len, cells)) = spec.resolution_demand() {
        for &e in &cfg.sweep.eps {
            if e * len < h * cells as f64 * (1.0 - 1e-9) {
                return Err(ConfigError::new(
                    "domain.cells",
                    format!("ε = {e} gives a kernel feature of {:.4}, below {cells} cell(s) of h = {h:.4}", e * len),
                ));
            }
        }
    }
    Ok(())
}

pub fn build_problem(cfg: &ExperimentConfig, eps: f64) -> nllc::Result<Problem<f64>> {
    let spec = kernel(cfg).map_err(|e| nllc::Error::InvalidInput(e.to_string()))?;
    Problem::new(
        &spec,
        &model(cfg),
        eps,
        geometry(cfg),
        cfg.domain.radius,
        cfg.domain.cells,
        boundary(cfg),
        &problem_config(cfg),
    )
}
