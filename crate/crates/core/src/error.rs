use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} um outside Sellmeier validity range [{min_um}, {max_um}] um")]
    OutOfRange {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },
    #[error("no dispersion data for {0}")]
    UnknownMode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("not phase matched in window [{min_nm}, {max_nm}] nm for {triplet}")]
    NotPhaseMatched {
        triplet: String,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("calibration underdetermined; unresolved parameters: {}", .unresolved.join(", "))]
    Underdetermined { unresolved: Vec<String> },
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("missing settings: {}", .missing.join(", "))]
    MissingSettings { missing: Vec<String> },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = core::result::Result<T, Error>;
