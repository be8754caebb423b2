use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, mapped onto distinct process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Infeasible,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported pilot reuse factor {0}; allowed values are 1, 3 and 4")]
    UnsupportedReuse(u32),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("UE placement error: {0}")]
    Placement(String),

    #[error("pilot overhead B = {pilot_len} leaves no data symbols in a frame of T = {frame_len}")]
    PilotOverhead { pilot_len: u32, frame_len: u32 },

    #[error("zero forcing needs M > NK, got M = {m} and NK = {streams}")]
    RankDeficient { m: u32, streams: u32 },

    #[error(
        "transmit correlation is numerically singular at spacing {spacing_mm} mm \
         (smallest eigenvalue {min_eigenvalue:e})"
    )]
    DegenerateCorrelation { spacing_mm: f64, min_eigenvalue: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("numerical failure at draw {draw}: {reason}")]
    Numerical { draw: u64, reason: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::PilotOverhead { .. } | Error::RankDeficient { .. } => ErrorKind::Infeasible,
            Error::DegenerateCorrelation { .. } | Error::Numerical { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
