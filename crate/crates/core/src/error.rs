use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-invertible gauge")]
    NonInvertibleGauge,

    #[error("inner product is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("bracket ({a}, {b}, {c}) is outside the slice a > 0, c > 0")]
    OutsideSlice { a: f64, b: f64, c: f64 },

    #[error("stiff segment: step size underflow at t = {t} (h = {h:e})")]
    StiffSegment { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("constraint violation at t = {t}: {what}")]
    ConstraintViolation { t: f64, what: String },

    #[error("extend base trajectory: tau = {tau} exceeds horizon {horizon}")]
    ExtendBaseTrajectory { tau: f64, horizon: f64 },

    #[error("metric degenerated at t = {t}")]
    MetricDegenerated { t: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
