use std::fmt;

/// Library error type. `Domain` covers invalid arguments and malformed
/// inputs; the two budget variants are distinct so callers can tell "widen
/// the cap and retry" apart from "the input is wrong".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Invalid argument or malformed input: bad market shape, a preference
    /// row that is not a permutation, a matching inconsistent with the
    /// instance, a parameter outside its range.
    Domain(String),
    /// Lattice enumeration would visit more matchings than the safety cap.
    CapExceeded { cap: usize },
    /// Brute-force enumeration refused up front: the injection count
    /// exceeds the budget.
    BoundExceeded { injections: u128, bound: u128 },
    /// A lattice operation was handed a matching that is not stable.
    NotStable,
    /// The rotation is not exposed in the given matching.
    NotExposed,
    /// An internal consistency check failed; indicates a bug, not bad input.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "invalid input: {msg}"),
            Error::CapExceeded { cap } => {
                write!(f, "stable set exceeds the safety cap of {cap} matchings")
            }
            Error::BoundExceeded { injections, bound } => write!(
                f,
                "brute force refused: {injections} injections exceed the bound {bound}"
            ),
            Error::NotStable => write!(f, "matching is not stable"),
            Error::NotExposed => write!(f, "rotation is not exposed in this matching"),
            Error::Internal(msg) => write!(f, "internal invariant violated: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
