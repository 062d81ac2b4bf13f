use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid category: {0}")]
    InvalidCategory(String),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("point {0} is not in the colimit apex")]
    PointNotInApex(usize),
    #[error("diagrams live over different base categories")]
    MismatchedBases,
    #[error("square does not commute: {0}")]
    NonCommutingSquare(String),
    #[error("matching system is not functorial; induced maps are not defined")]
    NonFunctorial,
    #[error("certificates have incompatible stage structure: {0}")]
    StageMismatch(String),
    #[error("no stage of the certificate admits the factorization: {0}")]
    NoFactorizationStage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),
    #[error("hom-set too large to enumerate: {0}")]
    HomNotFinite(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}
