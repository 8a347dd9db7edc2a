use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("degenerate frequency: omega must be nonzero")]
    DegenerateFrequency,

    #[error("interval too small: b1 - b0 = {width:e} is below {min:e}")]
    IntervalTooSmall { width: f64, min: f64 },

    #[error("state violates the zero-mean constraints (r1 = {r1:e}, r2 = {r2:e})")]
    Constraint { r1: f64, r2: f64 },

    #[error("lambda is too close to the spectrum (distance {distance:e})")]
    NearSingular { distance: f64 },

    #[error("CFL condition violated: c*dt/h = {cfl} > 1")]
    Cfl { cfl: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("overflow in scaling and squaring: {0}")]
    Scaling(String),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical algorithm, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::NoConvergence(_) | Error::Scaling(_) | Error::NearSingular { .. }
        )
    }
}
