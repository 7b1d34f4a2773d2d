//! Error type shared across the crate.

use std::fmt;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A multiplier was constructed with parameters outside its admissible range.
    InvalidSpec(String),
    /// An invalid torus dimension or grid was requested.
    InvalidDomain(String),
    /// Power-law exponent estimation did not stabilize; carries the raw
    /// successive log-log slopes so the caller can inspect them.
    EstimationFailed {
        slopes: Vec<f64>,
        spread: f64,
        tol: f64,
    },
    /// The requested energy lies strictly inside the continuous spectrum,
    /// where the criterion integrals diverge and no eigenvalue can exist.
    InteriorEnergy { energy: f64, lo: f64, hi: f64 },
    /// No coupling constant corresponds to the requested energy
    /// (the resolvent integral is infinite there).
    NoCoupling { energy: f64 },
    /// A finite-grid operator would exceed the supported size.
    GridTooLarge { points: u128, limit: u128 },
    /// A root bracket could not be established; carries diagnostics.
    BracketFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid multiplier: {msg}"),
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            Error::EstimationFailed { slopes, spread, tol } => write!(
                f,
                "exponent estimate did not stabilize (spread {spread:.3e} > tol {tol:.3e}); slopes: {slopes:?}"
            ),
            Error::InteriorEnergy { energy, lo, hi } => write!(
                f,
                "energy {energy} lies inside the continuous spectrum ({lo}, {hi})"
            ),
            Error::NoCoupling { energy } => {
                write!(f, "no coupling constant corresponds to energy {energy}")
            }
            Error::GridTooLarge { points, limit } => {
                write!(f, "grid has {points} points, exceeding the limit {limit}")
            }
            Error::BracketFailure(msg) => write!(f, "root bracketing failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
