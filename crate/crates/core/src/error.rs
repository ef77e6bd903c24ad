use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("unknown flow `{0}`")]
    UnknownFlow(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("grid file: {0}")]
    GridFormat(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("seed ({0}, {1}) is at or near a fixed point")]
    NearFixedPoint(f64, f64),
    #[error("orbit is not periodic: {0}")]
    NotPeriodic(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("level curve grazes a fixed point near ({0}, {1})")]
    GrazesFixedPoint(f64, f64),
    #[error("interval ({0}, {1}) is outside the family range")]
    OutsideRange(f64, f64),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("full-line spectrum has no gaps")]
    FullLine,
    #[error("field is not tangent to the boundary (residual {0:e})")]
    NotTangent(f64),
    #[error("operator dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("packet tube leaves the family: {0}")]
    TubeOutsideFamily(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
