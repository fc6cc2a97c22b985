use thiserror::Error;

/// Errors raised by the analysis library.
///
/// Absence of crystalline structure is not an error: the recovery pipeline
/// reports it as a [`crate::NoCrystalEvidence`] value.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points {first} and {second} coincide within tolerance")]
    DuplicatePoint { first: usize, second: usize },

    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },

    #[error("point {index} lies outside the declared window radius {radius}")]
    OutsideWindow { index: usize, radius: f64 },

    #[error("window contains no points")]
    EmptyWindow,

    #[error("at least {needed} points required, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("core margin {margin} leaves no points inside window of radius {radius}")]
    MarginTooLarge { margin: f64, radius: f64 },

    #[error("difference set is not resolvably discrete: gap {gap} at cutoff {cutoff}")]
    DegenerateGap { gap: f64, cutoff: f64 },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("core has {size} points; exhaustive search is limited to {limit}")]
    CoreTooLarge { size: usize, limit: usize },

    #[error("no snap target within half tolerance of the anchor image")]
    NoSnapTarget,

    #[error("two snap targets within half tolerance of the anchor image")]
    AmbiguousSnap,

    #[error("snapped translation is not an exact period of the window")]
    NotExactPeriod,

    #[error("basis is singular (|det| = {det})")]
    SingularBasis { det: f64 },

    #[error(
        "translation is not commensurate with the lattice within denominator {max_denominator}"
    )]
    NoRationalFit { max_denominator: u32 },

    #[error("residues {first} and {second} lie in the same lattice coset")]
    CosetCollision { first: usize, second: usize },

    #[error("perturbation amplitude {amplitude} must be below {limit}")]
    AmplitudeTooLarge { amplitude: f64, limit: f64 },

    #[error("acceptance window is empty")]
    EmptyAcceptanceWindow,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
