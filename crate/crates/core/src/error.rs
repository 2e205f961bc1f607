use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. Numeric payloads are widened to `f64`
/// so the error type does not depend on the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter constraint violated: {constraint} (got {value})")]
    Constraint { constraint: &'static str, value: f64 },

    #[error("empty exponent window: beta_minus = {beta_minus} >= beta_plus = {beta_plus}")]
    EmptyWindow { beta_minus: f64, beta_plus: f64 },

    #[error("density must be positive in cell {cell} (got {value})")]
    NonPositiveDensity { cell: usize, value: f64 },

    #[error("specific entropy is undefined at zero density for gamma = 1")]
    EntropyDomain,

    #[error("malformed state: {0}")]
    InvalidState(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("total mass must be positive")]
    ZeroMass,

    #[error("position {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("profile exponent {sigma} outside admissible window ({lo}, {hi})")]
    SigmaOutsideWindow { sigma: f64, lo: f64, hi: f64 },

    #[error("requested pinning but the initial data has no vacuum")]
    NoVacuumToPin,

    #[error("series does not cover [{from}, {to}]")]
    Coverage { from: f64, to: f64 },

    #[error("need at least {needed} usable samples, found {found} ({excluded} excluded)")]
    InsufficientSamples {
        needed: usize,
        found: usize,
        excluded: usize,
    },

    #[error("no cells inside the fitting window")]
    EmptyFitWindow,

    #[error("convergence levels must be non-decreasing and at least three: {0:?}")]
    Levels(Vec<usize>),
}

impl Error {
    pub(crate) fn constraint<T: crate::Scalar>(constraint: &'static str, value: T) -> Self {
        Error::Constraint {
            constraint,
            value: value.to_f64_lossy(),
        }
    }
}
