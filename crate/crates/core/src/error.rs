use thiserror::Error;

/// Errors raised while deriving parameters, building initial data or stepping the flow.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("ODE integration failed at x = {at}: {reason}")]
    StepFailure { at: f64, reason: String },
    #[error("outside the domain of the profile: {0}")]
    DomainError(String),
    #[error("profile inversion failed: {0}")]
    InversionError(String),
    #[error("surface is not a graph: {0}")]
    NotAGraph(String),
    #[error("non-positive radius at z = {z}")]
    NonPositiveRadius { z: f64 },
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("patch overlap lost")]
    OverlapLost,
    #[error("tip patch resolution lost")]
    TipResolutionLost,
    #[error("outer patch resolution lost")]
    OuterResolutionLost,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
