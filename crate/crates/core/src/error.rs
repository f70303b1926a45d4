use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential parameters: {0}")]
    InvalidSpec(String),

    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("integrand is singular near the origin: {0}")]
    SingularIntegrand(String),

    #[error("adaptive quadrature stalled: {0}")]
    QuadratureFailure(String),

    #[error("point outside the domain of the representation: {0}")]
    DomainError(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("tail/interior matching failed: {0}")]
    MatchFailure(String),

    #[error("improper integral truncation failed: {0}")]
    TruncationError(String),

    #[error("gap {gap:e} is below the resolvable floor {floor:e}")]
    UnresolvableGap { gap: f64, floor: f64 },
}
