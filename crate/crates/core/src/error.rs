use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects of different dimension were combined.
    DimensionMismatch { expected: usize, found: usize },
    /// A matrix passed as symmetric was not.
    NotSymmetric { row: usize, col: usize },
    /// A measure or family failed validation.
    InvalidMeasure(String),
    /// A scalar parameter was outside its admissible range.
    InvalidParameter(String),
    /// The operation needs a different kind of control family.
    UnsupportedFamily(String),
    /// A family text block could not be parsed.
    Parse { line: usize, message: String },
    /// An atom does not lie on the lattice.
    OffLattice { measure: usize, atom: usize },
    /// The target ball contains no lattice point.
    UnreachableTarget,
    /// A grid would exceed the configured point budget.
    TooLarge { projected: usize, cap: usize },
    /// The series cannot be fitted over the requested range.
    Fit(String),
    /// Halving the ODE step moved the profile by more than the tolerance.
    StepTooCoarse { disagreement: f64 },
    /// Shooting bracket endpoints did not straddle the eigenvalue.
    Bracket { lo: f64, hi: f64 },
    /// The shooting orientation self-test failed.
    Orientation,
    /// A point left the range covered by a stored profile.
    OutOfRange { radius: f64, max: f64 },
    /// No rate in the scanned range is certified by the test function.
    NoCertificate(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotSymmetric { row, col } => {
                write!(f, "matrix is not symmetric at ({row}, {col})")
            }
            Error::InvalidMeasure(msg) => write!(f, "invalid measure: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnsupportedFamily(msg) => write!(f, "unsupported control family: {msg}"),
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::OffLattice { measure, atom } => write!(
                f,
                "atom {atom} of measure {measure} does not lie on the lattice"
            ),
            Error::UnreachableTarget => write!(f, "target ball contains no lattice point"),
            Error::TooLarge { projected, cap } => write!(
                f,
                "grid would hold {projected} points, above the cap of {cap}; \
                 reduce n_max, use a coarser spacing or raise the cap"
            ),
            Error::Fit(msg) => write!(f, "exponent fit failed: {msg}"),
            Error::StepTooCoarse { disagreement } => write!(
                f,
                "halved-step profile differs by {disagreement:e}; use a smaller ODE step"
            ),
            Error::Bracket { lo, hi } => write!(
                f,
                "shooting bracket [{lo}, {hi}] does not straddle the eigenvalue"
            ),
            Error::Orientation => write!(f, "shooting orientation self-test failed"),
            Error::OutOfRange { radius, max } => {
                write!(f, "radius {radius} outside profile range [0, {max}]")
            }
            Error::NoCertificate(msg) => write!(f, "no certificate: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
