use thiserror::Error;

/// Named symbol-validation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SymbolViolation {
    NotEven,
    NoStrictMax,
    BadTaylorData,
    TaylorMismatch,
    DerivativeMismatch,
    CutoffViolated,
}

impl SymbolViolation {
    pub fn code(self) -> &'static str {
        match self {
            SymbolViolation::NotEven => "NOT_EVEN",
            SymbolViolation::NoStrictMax => "NO_STRICT_MAX",
            SymbolViolation::BadTaylorData => "BAD_TAYLOR_DATA",
            SymbolViolation::TaylorMismatch => "TAYLOR_MISMATCH",
            SymbolViolation::DerivativeMismatch => "DERIVATIVE_MISMATCH",
            SymbolViolation::CutoffViolated => "CUTOFF_VIOLATED",
        }
    }
}

/// How a failure should be reported by a batch front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input or configuration.
    Config,
    /// The requested parameters lie outside the small-amplitude regime.
    ModelRegime,
    /// Iteration budget or resolution exhausted.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("symbol check {} failed at k = {at}: {detail}", .violation.code())]
    SymbolViolation {
        violation: SymbolViolation,
        at: f64,
        detail: String,
    },
    #[error("exponent p = {p} outside the admissible window [2, {upper}) for j* = {j_star}")]
    ExponentWindow { p: f64, j_star: u32, upper: f64 },
    #[error("speed {nu} is not supercritical (m(0) = {m_zero})")]
    SubcriticalSpeed { nu: f64, m_zero: f64 },
    #[error("field tail {tail:e} exceeds tolerance {tol:e}")]
    TailTooLarge { tail: f64, tol: f64 },
    #[error("squared H1 norm {norm_sq} outside penalization domain [0, {limit})")]
    OutOfDomain { norm_sq: f64, limit: f64 },
    #[error("iterate left the ball ||u||_1 < {limit}")]
    BallExit { limit: f64 },
    #[error("momentum too large: {0}")]
    MuTooLarge(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIter {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("fixed-point iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("solution blew up at t = {time}")]
    Blowup { time: f64 },
    #[error("spectral tail {tail:e} at t = {time} indicates loss of resolution")]
    ResolutionLoss { time: f64, tail: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed data: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::UnknownName { .. } => "UNKNOWN_NAME",
            Error::GridMismatch => "GRID_MISMATCH",
            Error::SymbolViolation { violation, .. } => violation.code(),
            Error::ExponentWindow { .. } => "EXPONENT_WINDOW",
            Error::SubcriticalSpeed { .. } => "SUBCRITICAL_SPEED",
            Error::TailTooLarge { .. } => "TAIL_TOO_LARGE",
            Error::OutOfDomain { .. } => "OUT_OF_DOMAIN",
            Error::BallExit { .. } => "BALL_EXIT",
            Error::MuTooLarge(_) => "MU_TOO_LARGE",
            Error::MaxIter { .. } => "MAX_ITER",
            Error::NoConvergence(_) => "NO_CONVERGENCE",
            Error::Blowup { .. } => "BLOWUP",
            Error::ResolutionLoss { .. } => "RESOLUTION_LOSS",
            Error::Io(_) => "IO",
            Error::Format(_) => "FORMAT",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MuTooLarge(_) | Error::SubcriticalSpeed { .. } | Error::BallExit { .. } => ErrorClass::ModelRegime,
            Error::MaxIter { .. }
            | Error::NoConvergence(_)
            | Error::ResolutionLoss { .. }
            | Error::Blowup { .. }
            | Error::TailTooLarge { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
