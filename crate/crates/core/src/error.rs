use std::fmt;

/// Errors produced by enumeration, measure, coding, and recovery operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A predicted or running enumeration size exceeded the configured cap.
    CapExceeded { required: u128, cap: u64 },
    /// A symbol fell outside the alphabet `1..=m`.
    SymbolOutOfRange { symbol: u8, alphabet: u8 },
    /// A fixed-radius table had no entry for a window and no default symbol.
    MissingTableEntry,
    /// An automorphism was rejected because it moves a forbidden coordinate.
    NotInLpa(String),
    /// A construction or check was called with incompatible arguments.
    Precondition(String),
    /// A word string could not be parsed.
    WordParse(String),
    /// A probability vector was empty, non-positive, or non-finite.
    BadProbVector(String),
    /// Power sums do not come from any positive probability vector.
    InconsistentPowerSums(String),
    /// Root iteration did not converge within the iteration budget.
    NoConvergence { iterations: u32 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CapExceeded { required, cap } => {
                write!(f, "enumeration of {required} elements exceeds cap {cap}")
            }
            Self::SymbolOutOfRange { symbol, alphabet } => {
                write!(f, "symbol {symbol} out of range for alphabet 1..={alphabet}")
            }
            Self::MissingTableEntry => write!(f, "no table entry for window and no default symbol"),
            Self::NotInLpa(what) => write!(f, "automorphism not in L_p,a: {what}"),
            Self::Precondition(what) => write!(f, "precondition violated: {what}"),
            Self::WordParse(s) => write!(f, "cannot parse word: {s}"),
            Self::BadProbVector(s) => write!(f, "bad probability vector: {s}"),
            Self::InconsistentPowerSums(s) => write!(f, "inconsistent power sums: {s}"),
            Self::NoConvergence { iterations } => {
                write!(f, "root iteration did not converge after {iterations} steps")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
