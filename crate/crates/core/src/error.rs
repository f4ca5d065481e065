use thiserror::Error;

use crate::simulator::BirthSchedule;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive geometry parameter: {0}")]
    NonPositive(String),

    #[error("offset {name} = {value} lies outside the fundamental domain [0, {period})")]
    OffsetOutOfDomain {
        name: &'static str,
        value: f64,
        period: f64,
    },

    #[error("invalid manifold: {0}")]
    InvalidSpec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient spectrum: requested {requested} but spectrum only covers lengths <= {cutoff}")]
    InsufficientSpectrum { requested: f64, cutoff: f64 },

    #[error("geodesic class count exceeds cap {cap}")]
    ClassCap { cap: usize },

    #[error("frontier size exceeds cap {cap}; partial schedule up to {reached} is flagged invalid")]
    FrontierOverflow {
        cap: usize,
        reached: f64,
        partial: Box<BirthSchedule>,
    },

    #[error("distinct-time count exceeds cap {cap}")]
    DistinctCap { cap: usize },

    #[error("estimated solution count {estimate:.3e} exceeds cap {cap}; use grid bounds instead")]
    CountCap { estimate: f64, cap: u64 },

    #[error("part {part} is smaller than the grid step {delta}; choose a smaller delta")]
    PartBelowDelta { part: f64, delta: f64 },

    #[error("grid of {cells} cells exceeds cap {cap}")]
    GridCap { cells: f64, cap: usize },

    #[error("exact time key overflowed 128-bit arithmetic")]
    KeyOverflow,

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("bounds did not converge: achieved gap {achieved:.4} > target {target:.4}")]
    Unconverged { achieved: f64, target: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ClassCap { .. }
            | Error::FrontierOverflow { .. }
            | Error::DistinctCap { .. }
            | Error::CountCap { .. }
            | Error::GridCap { .. }
            | Error::KeyOverflow => 3,
            Error::Unconverged { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositive(_) => "non_positive_parameter",
            Error::OffsetOutOfDomain { .. } => "offset_out_of_domain",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Unsupported(_) => "unsupported",
            Error::InsufficientSpectrum { .. } => "insufficient_spectrum",
            Error::ClassCap { .. } => "class_cap",
            Error::FrontierOverflow { .. } => "frontier_overflow",
            Error::DistinctCap { .. } => "distinct_cap",
            Error::CountCap { .. } => "count_cap",
            Error::PartBelowDelta { .. } => "part_below_delta",
            Error::GridCap { .. } => "grid_cap",
            Error::KeyOverflow => "key_overflow",
            Error::FitFailure(_) => "fit_failure",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
            Error::Unconverged { .. } => "unconverged",
            Error::Io(_) => "io",
        }
    }
}
