use thiserror::Error;

/// Failure modes of the numerical pipelines.
///
/// Every variant carries a stable machine-readable tag (see [`Error::tag`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature under-resolved: {0}")]
    QuadratureUnderresolved(String),
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),
    #[error("value outside the moment domain (|b| = {dual_norm:.3e}, residual = {residual:.3e})")]
    OutsideMomentDomain { dual_norm: f64, residual: f64 },
    #[error("degenerate minimum: transverse curvature {curvature:.3e} below tolerance")]
    DegenerateMinimum { curvature: f64 },
    #[error("boundary layer too thin: need {required:.4} but have {actual:.4}")]
    LayerTooThin { required: f64, actual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("energy increased and damping reached its floor ({alpha:.3e})")]
    EnergyIncrease { alpha: f64 },
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub fn tag(&self) -> &'static str {
        match self {
            Error::QuadratureUnderresolved(_) => "quadrature_underresolved",
            Error::ResolutionMismatch(_) => "resolution_mismatch",
            Error::OutsideMomentDomain { .. } => "outside_moment_domain",
            Error::DegenerateMinimum { .. } => "degenerate_minimum",
            Error::LayerTooThin { .. } => "layer_too_thin",
            Error::MaxIterations { .. } => "max_iterations",
            Error::EnergyIncrease { .. } => "energy_increase",
            Error::PreconditionNotMet(_) => "precondition_not_met",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
