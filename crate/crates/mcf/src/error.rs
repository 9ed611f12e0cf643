//! Error type shared by all modules.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A query point left the valid region of a patch.
    Domain { patch: &'static str, what: String },
    /// Sampled data violated a geometric precondition (monotonicity, bracket
    /// degeneracy, ODE step failure).
    Geometry(String),
    /// A cross-patch root could not be bracketed: the two grids no longer
    /// overlap well enough. Recoverable by regridding.
    OverlapViolation(String),
    /// A requested grid layout cannot be built or filled.
    Config(String),
    /// The flow reached numerically vanishing radius.
    SingularityReached { r_min: f64, t: f64 },
    /// A non-finite value appeared while stepping.
    NumericalBlowup {
        patch: &'static str,
        i: usize,
        k: usize,
        t: f64,
    },
    /// Configuration text failed to parse.
    Parse { line: usize, msg: String },
    /// A parameter regime outside the supported cases.
    Unsupported(String),
    /// Series data unfit for a power-law fit.
    FitRejected(String),
    /// An argument outside its documented range.
    Parameter(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { patch, what } => write!(f, "domain error on {patch} patch: {what}"),
            Error::Geometry(msg) => write!(f, "geometry error: {msg}"),
            Error::OverlapViolation(msg) => write!(f, "overlap violation: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::SingularityReached { r_min, t } => {
                write!(f, "singularity reached: r_min = {r_min:e} at t = {t:e}")
            }
            Error::NumericalBlowup { patch, i, k, t } => write!(
                f,
                "numerical blowup: non-finite value on {patch} patch at node ({i}, {k}), t = {t:e}"
            ),
            Error::Parse { line, msg } => write!(f, "config parse error at line {line}: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::FitRejected(msg) => write!(f, "fit rejected: {msg}"),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
