use thiserror::Error;

/// Errors produced by the channel model, solver, sweeps and fitter.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be finite and positive, got {value}")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "capacity {target} kbit/s unreachable: at most {achieved} kbit/s below the K cap ({k_cap_db:.1} dB)"
    )]
    CapacityUnreachable {
        target: f64,
        achieved: f64,
        k_cap_db: f64,
    },

    #[error("sweep cell (l = {l_km} km, C = {c_kbps} kbit/s) failed: {source}")]
    SweepCell {
        l_km: f64,
        c_kbps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate regression for {what}: {reason}")]
    Degenerate { what: String, reason: String },

    #[error("rank-deficient design matrix for basis `{basis}`")]
    RankDeficient { basis: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
