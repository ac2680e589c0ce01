use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite integrand value at node {0}")]
    NonFinite(String),
    #[error("tensor quadrature supports at most 4 dimensions, got {0}")]
    DimensionTooLarge(usize),
    #[error("evaluation point {0} lies too close to the integration contour")]
    PoleOnContour(String),
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("negative level {0}")]
    NegativeLevel(i32),
    #[error("problem exceeds desk-scale bounds: {0}")]
    Intractable(String),
    #[error("interlacing cone is empty")]
    EmptyPolytope,
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
