//! Experiment configuration: a TOML file of `key = value` pairs in sections.
//!
//! ```toml
//! seed = 0
//! output = "out"
//!
//! [kernel]
//! preset = "gaussian"      # zero | gaussian | annulus | inverse-sixth
//! a = 2.0
//! mass = 8.0
//!
//! [model]
//! preset = "circle"        # circle | sphere
//!
//! [domain]
//! cells = 24
//! radius = 1.0
//! geometry = "ball"        # ball | cube
//! layer = "required"       # required | stencil | <thickness>
//!
//! [boundary]
//! preset = "smooth"        # vacuum | constant | smooth | vortex
//! slope = 0.6
//!
//! [sweep]
//! eps = [0.2, 0.1, 0.05]
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

/// A configuration problem, located by its dotted field name and, for
/// syntax errors, the line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at line {l} (field `{}`): {}", self.field, self.message),
            None => write!(f, "config error in field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub domain: DomainConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub probe: ProbeSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub preset: String,
    /// Amplitude `k` (gaussian, annulus) or `c` (inverse-sixth).
    pub k: Option<f64>,
    /// Gaussian width.
    pub a: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r_in: Option<f64>,
    pub r_out: Option<f64>,
    /// Rescales the profile so that `∫g = mass`.
    pub mass: Option<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Layer constants `q` and `τ` of the finite-thickness condition.
    pub layer_q: Option<f64>,
    pub layer_tau: Option<f64>,
}

fn default_tail_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model")]
    pub preset: String,
}

fn default_model() -> String {
    "circle".into()
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { preset: default_model() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LayerSetting {
    Named(String),
    Thickness(f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Cells across Ω.
    pub cells: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_geometry")]
    pub geometry: String,
    #[serde(default = "default_layer")]
    pub layer: LayerSetting,
}

fn one() -> f64 {
    1.0
}

fn default_geometry() -> String {
    "ball".into()
}

fn default_layer() -> LayerSetting {
    LayerSetting::Named("required".into())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default = "default_boundary")]
    pub preset: String,
    pub value: Option<Vec<f64>>,
    #[serde(default = "default_slope")]
    pub slope: f64,
    #[serde(default = "default_curvature")]
    pub curvature: f64,
    #[serde(default = "one")]
    pub exterior_ratio: f64,
    #[serde(default = "default_ramp")]
    pub ramp: f64,
    #[serde(default = "default_winding")]
    pub winding: i32,
}

fn default_boundary() -> String {
    "vacuum".into()
}
fn default_slope() -> f64 {
    0.6
}
fn default_curvature() -> f64 {
    0.2
}
fn default_ramp() -> f64 {
    0.1
}
fn default_winding() -> i32 {
    1
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            preset: default_boundary(),
            value: None,
            slope: default_slope(),
            curvature: default_curvature(),
            exterior_ratio: 1.0,
            ramp: default_ramp(),
            winding: default_winding(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// `el` or `descent`.
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `full` or `finite-thickness`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Random starts tried besides the boundary datum.
    #[serde(default)]
    pub random_starts: usize,
}

fn default_method() -> String {
    "el".into()
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    20_000
}
fn default_alpha() -> f64 {
    0.5
}
fn default_mode() -> String {
    "full".into()
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            method: default_method(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            alpha: default_alpha(),
            mode: default_mode(),
            random_starts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    #[serde(default = "default_limit_tol")]
    pub tol: f64,
    #[serde(default = "default_limit_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub random_starts: usize,
    /// Singular-set radii ladder.
    #[serde(default = "default_singular_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Dilation of the flagged set, in cells.
    #[serde(default = "default_dilation")]
    pub dilation_cells: f64,
    /// Ball for the Γ-checks: centre and radius; Ω when absent.
    pub ball_center: Option<[f64; 3]>,
    pub ball_radius: Option<f64>,
}

fn default_limit_tol() -> f64 {
    1e-7
}
fn default_limit_iter() -> usize {
    50_000
}
fn default_singular_radii() -> Vec<f64> {
    vec![0.5, 0.4, 0.33]
}
fn default_threshold() -> f64 {
    0.5
}
fn default_dilation() -> f64 {
    2.0
}

impl Default for LimitSection {
    fn default() -> Self {
        LimitSection {
            tol: default_limit_tol(),
            max_iter: default_limit_iter(),
            random_starts: 0,
            radii: default_singular_radii(),
            threshold: default_threshold(),
            dilation_cells: default_dilation(),
            ball_center: None,
            ball_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default)]
    pub center: [f64; 3],
    /// Campanato ladder.
    #[serde(default = "default_probe_radii")]
    pub radii: Vec<f64>,
    /// Ball radius of the Hölder seminorm and the decay check.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Fixed Hölder exponent; the fitted exponent when absent.
    pub mu: Option<f64>,
    #[serde(default = "default_budget")]
    pub pair_budget: usize,
}

fn default_probe_radii() -> Vec<f64> {
    vec![0.6, 0.45, 0.35, 0.25]
}
fn default_rho() -> f64 {
    0.5
}
fn default_thetas() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}
fn default_budget() -> usize {
    2_000_000
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            center: [0.0; 3],
            radii: default_probe_radii(),
            rho: default_rho(),
            thetas: default_thetas(),
            mu: None,
            pair_budget: default_budget(),
        }
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] > w[1])
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite (got {x})")))
    }
}

impl ExperimentConfig {
    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let field = e
                .message()
                .split('`')
                .nth(1)
                .filter(|_| e.message().contains("field"))
                .unwrap_or("<syntax>")
                .to_string();
            ConfigError { field, line, message: e.message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = &self.kernel;
        match k.preset.as_str() {
            "zero" => {}
            "gaussian" => positive("kernel.a", k.a.ok_or_else(|| ConfigError::new("kernel.a", "required by the gaussian preset"))?)?,
            "annulus" => {
                let r1 = k.r1.ok_or_else(|| ConfigError::new("kernel.r1", "required by the annulus preset"))?;
                let r2 = k.r2.ok_or_else(|| ConfigError::new("kernel.r2", "required by the annulus preset"))?;
                if !(r1 >= 0.0 && r2 > r1) {
                    return Err(ConfigError::new("kernel.r2", format!("need 0 ≤ r1 < r2 (got r1 = {r1}, r2 = {r2})")));
                }
            }
            "inverse-sixth" => {
                let a = k.r_in.ok_or_else(|| ConfigError::new("kernel.r_in", "required by the inverse-sixth preset"))?;
                let b = k.r_out.ok_or_else(|| ConfigError::new("kernel.r_out", "required by the inverse-sixth preset"))?;
                if !(a > 0.0 && b > a) {
                    return Err(ConfigError::new("kernel.r_out", format!("need 0 < r_in < r_out (got {a}, {b})")));
                }
            }
            other => return Err(ConfigError::new("kernel.preset", format!("unknown preset `{other}`"))),
        }
        if let Some(x) = k.k {
            if !x.is_finite() || x < 0.0 {
                return Err(ConfigError::new("kernel.k", format!("must be non-negative (got {x})")));
            }
        }
        if let Some(x) = k.mass {
            positive("kernel.mass", x)?;
        }
        positive("kernel.tail_tol", k.tail_tol)?;
        match (k.layer_q, k.layer_tau) {
            (None, None) => {}
            (Some(q), Some(t)) => {
                if !(q >= 2.0) {
                    return Err(ConfigError::new("kernel.layer_q", format!("must be at least 2 (got {q})")));
                }
                positive("kernel.layer_tau", t)?;
            }
            (Some(_), None) => return Err(ConfigError::new("kernel.layer_tau", "must be given together with layer_q")),
            (None, Some(_)) => return Err(ConfigError::new("kernel.layer_q", "must be given together with layer_tau")),
        }
        if !matches!(self.model.preset.as_str(), "circle" | "sphere") {
            return Err(ConfigError::new("model.preset", format!("unknown preset `{}`", self.model.preset)));
        }
        let d = &self.domain;
        if d.cells < 2 {
            return Err(ConfigError::new("domain.cells", format!("need at least 2 cells (got {})", d.cells)));
        }
        positive("domain.radius", d.radius)?;
        if !matches!(d.geometry.as_str(), "ball" | "cube") {
            return Err(ConfigError::new("domain.geometry", format!("unknown geometry `{}`", d.geometry)));
        }
        match &d.layer {
            LayerSetting::Named(n) if n == "required" || n == "stencil" => {}
            LayerSetting::Named(n) => return Err(ConfigError::new("domain.layer", format!("expected required, stencil or a thickness (got `{n}`)"))),
            LayerSetting::Thickness(t) => positive("domain.layer", *t)?,
        }
        let b = &self.boundary;
        match b.preset.as_str() {
            "vacuum" | "smooth" | "vortex" => {}
            "constant" => {
                let m = if self.model.preset == "circle" { 2 } else { 5 };
                match &b.value {
                    Some(v) if v.len() == m => {}
                    Some(v) => return Err(ConfigError::new("boundary.value", format!("needs {m} components (got {})", v.len()))),
                    None => return Err(ConfigError::new("boundary.value", "required by the constant preset")),
                }
            }
            other => return Err(ConfigError::new("boundary.preset", format!("unknown preset `{other}`"))),
        }
        if !(b.exterior_ratio > 0.0 && b.exterior_ratio <= 1.0) {
            return Err(ConfigError::new("boundary.exterior_ratio", format!("must lie in (0, 1] (got {})", b.exterior_ratio)));
        }
        if !(b.ramp >= 0.0) {
            return Err(ConfigError::new("boundary.ramp", format!("must be non-negative (got {})", b.ramp)));
        }
        let e = &self.sweep.eps;
        if e.is_empty() {
            return Err(ConfigError::new("sweep.eps", "must list at least one ε"));
        }
        if let Some(bad) = e.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(ConfigError::new("sweep.eps", format!("entries must be positive (got {bad})")));
        }
        if !strictly_decreasing(e) {
            return Err(ConfigError::new("sweep.eps", "entries must be strictly decreasing"));
        }
        let s = &self.solver;
        if !matches!(s.method.as_str(), "el" | "descent") {
            return Err(ConfigError::new("solver.method", format!("expected el or descent (got `{}`)", s.method)));
        }
        if !matches!(s.mode.as_str(), "full" | "finite-thickness") {
            return Err(ConfigError::new("solver.mode", format!("expected full or finite-thickness (got `{}`)", s.mode)));
        }
        positive("solver.tol", s.tol)?;
        if !(s.alpha > 0.0 && s.alpha <= 1.0) {
            return Err(ConfigError::new("solver.alpha", format!("must lie in (0, 1] (got {})", s.alpha)));
        }
        if s.max_iter == 0 {
            return Err(ConfigError::new("solver.max_iter", "must be at least 1"));
        }
        let l = &self.limit;
        positive("limit.tol", l.tol)?;
        if l.radii.is_empty() || l.radii.iter().any(|&r| !(r > 0.0)) || !strictly_decreasing(&l.radii) {
            return Err(ConfigError::new("limit.radii", "must be positive and strictly decreasing"));
        }
        if !(l.threshold > 0.0) {
            return Err(ConfigError::new("limit.threshold", format!("must be positive (got {})", l.threshold)));
        }
        if !(l.dilation_cells >= 0.0) {
            return Err(ConfigError::new("limit.dilation_cells", "must be non-negative"));
        }
        if l.ball_center.is_some() != l.ball_radius.is_some() {
            return Err(ConfigError::new("limit.ball_radius", "ball_center and ball_radius go together"));
        }
        if let Some(r) = l.ball_radius {
            positive("limit.ball_radius", r)?;
        }
        let p = &self.probe;
        if p.radii.len() < 2 || p.radii.iter().any(|&r| !(r > 0.0)) || !strictly_decreasing(&p.radii) {
            return Err(ConfigError::new("probe.radii", "need at least two positive, strictly decreasing radii"));
        }
        positive("probe.rho", p.rho)?;
        if p.thetas.is_empty() || p.thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(ConfigError::new("probe.thetas", "entries must lie in (0, 1)"));
        }
        if let Some(mu) = p.mu {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(ConfigError::new("probe.mu", format!("must lie in (0, 1] (got {mu})")));
            }
        }
        Ok(())
    }
}
