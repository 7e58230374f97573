use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {value} outside curve domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("singular parametrization: vanishing speed at t = {0}")]
    SingularParametrization(f64),

    #[error("offset passes through a focal point (1 - k*v = {0})")]
    FocalPoint(f64),

    #[error("curvature vanishes at u = {0}: no focal point")]
    NoFocalPoint(f64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("channel validity violated at u = {u}, v = {v}: 1 - s*k = {margin}")]
    Validity { u: f64, v: f64, margin: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("degenerate circle pair: {0}")]
    DegeneratePair(String),

    #[error("evaluation at a pole {0}")]
    Pole(num_complex::Complex64),

    #[error("tangent lines are parallel and do not intersect (condition number {0:e})")]
    NoIntersection(f64),

    #[error("estimator {method} needs a straight base curve (k = {k} at u = {u})")]
    NonStraightBase { method: &'static str, k: f64, u: f64 },

    #[error("estimator degenerate: {0}")]
    EstimatorDegenerate(String),

    #[error("grid shape mismatch: {0}")]
    Shape(String),

    #[error("linear solve did not reach tolerance after {iterations} refinement steps (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("every sample is indeterminate (flat field)")]
    FlatField,

    #[error("at u = {u}: {source}")]
    AtSample { u: f64, source: Box<Error> },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at(self, u: f64) -> Error {
        match self {
            Error::AtSample { .. } => self,
            other => Error::AtSample { u, source: Box::new(other) },
        }
    }

    /// Innermost error, skipping `AtSample` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
