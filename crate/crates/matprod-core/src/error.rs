use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure categories shared by every module.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A parameter constraint does not hold.
    InvalidParams(String),
    /// Input vectors have incompatible lengths.
    LengthMismatch { expected: usize, found: usize },
    /// Coincident or boundary points where the formula is singular.
    Degenerate(String),
    /// The Jack-density hypothesis fails for the given chain.
    NoAdmissiblePartition,
    /// Dimension of a nested integral beyond what is supported.
    UnsupportedDimension(usize),
    /// An iterative method failed or produced an inconsistent result.
    Numerical(String),
}

impl Error {
    /// True for errors caused by user input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(s) => write!(f, "invalid parameters: {s}"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::Degenerate(s) => write!(f, "degenerate input: {s}"),
            Error::NoAdmissiblePartition => write!(f, "no admissible partition"),
            Error::UnsupportedDimension(p) => {
                write!(f, "unsupported dimension: p = {p} (integral representation supports p <= 3)")
            }
            Error::Numerical(s) => write!(f, "numerical failure: {s}"),
        }
    }
}

impl core::error::Error for Error {}
