use thiserror::Error;

/// Failures raised anywhere along the classify → stencil → assemble → solve pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid node ({i}, {j}) lies on the boundary (|phi| = {value:e})")]
    NodeOnBoundary { i: usize, j: usize, value: f64 },

    #[error("level set has no interior grid nodes")]
    EmptyInterior,

    #[error("boundary projection from ({x}, {y}) did not converge (|phi| = {residual:e})")]
    ProjectionDiverged { x: f64, y: f64, residual: f64 },

    #[error("level-set gradient vanishes near ({x}, {y})")]
    ZeroGradient { x: f64, y: f64 },

    #[error("no axis ray from ({x}, {y}) meets the boundary within 3h")]
    NoAxisIntersection { x: f64, y: f64 },

    #[error("stencil member ({i}, {j}) is not an active node")]
    InactiveMember { i: i64, j: i64 },

    #[error("cone candidates exhausted for ghost ({i}, {j})")]
    CandidatesExhausted { i: usize, j: usize },

    #[error("stencil is not admissible: {0}")]
    NotAdmissible(String),

    #[error("interior node ({i}, {j}) references an inactive neighbour")]
    MissingNeighbor { i: usize, j: usize },

    #[error("sparse factorization broke down: {0}")]
    SingularMatrix(String),

    #[error("linear solve failed: relative residual {residual:e}")]
    SolveFailed { residual: f64 },

    #[error("UnknownDomain: {0}")]
    UnknownDomain(String),

    #[error("DegenerateFit: {0}")]
    DegenerateFit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NodeOnBoundary { .. } => "NodeOnBoundary",
            Error::EmptyInterior => "EmptyInterior",
            Error::ProjectionDiverged { .. } => "ProjectionDiverged",
            Error::ZeroGradient { .. } => "ZeroGradient",
            Error::NoAxisIntersection { .. } => "NoAxisIntersection",
            Error::InactiveMember { .. } => "InactiveMember",
            Error::CandidatesExhausted { .. } => "CandidatesExhausted",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::MissingNeighbor { .. } => "MissingNeighbor",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::SolveFailed { .. } => "SolveFailed",
            Error::UnknownDomain(_) => "UnknownDomain",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }

    /// True for failures caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::UnknownDomain(_) | Error::InvalidParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
