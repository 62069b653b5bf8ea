use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular tensor (det = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("Poisson ratio {nu} is at or beyond the incompressible limit")]
    IncompressibleLimit { nu: f64 },

    #[error("inverted element at {location} (det F = {det:e})")]
    InvertedElement { location: Location, det: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{method} broke down after {iterations} iterations; try gmres or direct")]
    Breakdown { method: &'static str, iterations: usize },

    #[error("{method} did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular pivot in direct solve at row {row}")]
    SingularPivot { row: usize },

    #[error("direct solver band storage of {entries} entries exceeds the limit")]
    BandTooLarge { entries: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

/// Where a geometric quantity became invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Cell(usize),
    Face(usize),
    Unknown,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Cell(c) => write!(f, "cell {c}"),
            Location::Face(i) => write!(f, "face {i}"),
            Location::Unknown => write!(f, "unknown location"),
        }
    }
}

impl Error {
    /// Attach a location to an inverted-element error raised without one.
    pub fn at(self, loc: Location) -> Error {
        match self {
            Error::InvertedElement { det, location: Location::Unknown } => Error::InvertedElement { location: loc, det },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
