use thiserror::Error;

/// Errors produced by the solvers, the numerical kernels and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("capacity is undefined for 1 + x <= 0 (x = {0})")]
    CapacityDomain(f64),

    #[error("objective is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("no interior maximum bracketed after {iterations} expansion steps")]
    BracketFailure { iterations: usize },

    #[error("root is not bracketed: f({lo}) = {f_lo} and f({hi}) = {f_hi} share a sign")]
    RootNotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(&'static str),

    #[error("{0} is zero; the energy-efficiency supremum sits at P -> 0+ and has no interior argmax")]
    ZeroCircuitPower(&'static str),

    #[error("relay mode inadmissible: h_sr = {h_sr} < 2 h_sd = {}", 2.0 * .h_sd)]
    RelayInadmissible { h_sr: f64, h_sd: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical inconsistency: {0}")]
    Inconsistency(String),

    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Config { .. }
            | Error::RelayInadmissible { .. }
            | Error::DegenerateChannel(_)
            | Error::ZeroCircuitPower(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
