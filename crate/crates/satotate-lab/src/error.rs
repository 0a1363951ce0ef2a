use std::path::PathBuf;

/// Crate-wide error type.
///
/// Every variant maps onto one of the CLI exit codes: 1 for configuration
/// and domain-guard failures, 2 for violated mathematical contracts, 3 for I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("localization scale L must be >= 1, got {0}")]
    ScaleTooSmall(f64),

    #[error("threshold x must be > 6, got {0}")]
    ThresholdTooSmall(f64),

    #[error("prime window upper bound {0} exceeds the supported cap 2^26")]
    WindowTooLarge(u64),

    #[error("square table for p = {0} exceeds the 2^26 memory cap")]
    TableTooLarge(u64),

    #[error("Jacobi symbol modulus must be odd and positive, got {0}")]
    BadJacobiModulus(i64),

    #[error("curve (a={a}, b={b}) is not admissible: {reason}")]
    InadmissibleCurve { a: i64, b: i64, reason: &'static str },

    #[error("family bounds A={0}, B={1} admit no curves")]
    EmptyFamily(u32, u32),

    #[error("cache does not cover curve (a={0}, b={1})")]
    MissingCacheRow(i64, i64),

    #[error("weight has zero variance (U(m) = 0 for all m >= 1); normalized moments are undefined")]
    DegenerateVariance,

    #[error("d_table guard: need r <= {max_r} arguments with sum <= {max_sum}, got r = {r}, sum = {sum}")]
    DTableTooLarge { r: usize, sum: u64, max_r: usize, max_sum: u64 },

    #[error("s_average guard: need p <= 500 and alpha <= 12, got p = {0}, alpha = {1}")]
    SAverageTooLarge(u64, u32),

    #[error("theta is unavailable for p = {0} (prime divides the discriminant)")]
    ThetaUnavailable(u64),

    #[error("unsupported weight k = {0}: the level-1 cusp space has dimension != 1")]
    UnsupportedWeight(u32),

    #[error("q-expansion length cap is 10^5, got {0}")]
    ExpansionTooLong(usize),

    #[error("series division by 1728 left a remainder at q^{0}; series arithmetic is broken")]
    InexactDivision(usize),

    #[error("prime {p} exceeds the computed expansion length {nmax}")]
    PrimeOutOfRange { p: u64, nmax: usize },

    #[error("partition and prime list lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("malformed cache file {path}: {reason}")]
    CacheFormat { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// CLI exit code for this error: 1 config/usage, 2 broken math contract, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateVariance | Error::InexactDivision(_) => 2,
            Error::Io { .. } | Error::CacheFormat { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
