use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point (t={t}, r={r}) is not strictly inside the light cone")]
    OutsideCone { t: f64, r: f64 },
    #[error("hyperboloidal time must be positive, got {0}")]
    NonPositiveS(f64),
    #[error("point lies on the center axis r=0, radial members undefined")]
    CenterAxis,
    #[error("point (t={t}, r={r}) is outside the domain r < t-1")]
    OutsideDomain { t: f64, r: f64 },
    #[error("exponent a={a} out of range for multiplier {kind}")]
    ExponentOutOfRange { kind: &'static str, a: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("CFL factor {cfl} exceeds limit {limit}")]
    Cfl { cfl: f64, limit: f64 },
    #[error("solution support reached the grid edge at t={t}")]
    SupportEscape { t: f64 },
    #[error("non-finite value detected at t={t}, cell {cell}")]
    NotFinite { t: f64, cell: usize },
    #[error("requested time {t} not covered by the band [{t_lo}, {t_hi}]")]
    BandCoverage { t: f64, t_lo: f64, t_hi: f64 },
    #[error("stencil leaves the band")]
    StencilOutOfBand,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("unsupported snapshot version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated input")]
    Truncated,
    #[error("config error: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
