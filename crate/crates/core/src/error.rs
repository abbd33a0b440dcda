use std::fmt;

/// Constraint families of the per-slot precoding problem, in diagnosis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    PerUavPower,
    SpectralCap,
    Snr,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintFamily::PerUavPower => "per-UAV power",
            ConstraintFamily::SpectralCap => "spectral cap",
            ConstraintFamily::Snr => "SNR",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("Vandermonde columns are rank deficient ({distinct} distinct nodes for {k} columns); use formula mode")]
    RankDeficient { distinct: usize, k: usize },

    #[error("linearization point coincides with the no-fly zone center; perturb initialization")]
    DegenerateLinearization,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("infeasible: {family} constraints cannot be met ({detail})")]
    Infeasible {
        family: ConstraintFamily,
        detail: String,
    },

    #[error("slot {slot}: destination {distance:.3} m away cannot be reached in the remaining slots")]
    Unreachable { slot: usize, distance: f64 },

    #[error("slot {slot} infeasible: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no convergence: {0}")]
    NonConvergence(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Stable machine-readable kind, used by the CLI error record and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Config { .. } => "config",
            Error::UnknownKey(_) => "unknown_key",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::DegenerateLinearization => "degenerate_linearization",
            Error::Singular(_) => "singular",
            Error::Infeasible { .. } => "infeasible",
            Error::Unreachable { .. } => "unreachable",
            Error::Slot { .. } => "slot_infeasible",
            Error::NonConvergence(_) => "non_convergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
