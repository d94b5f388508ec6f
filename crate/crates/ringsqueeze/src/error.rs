use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid coupling in {field}: self^2 + cross^2 = {value}")]
    InvalidCoupling { field: String, value: f64 },
    #[error("bins {a} and {b} overlap")]
    BinOverlap { a: String, b: String },
    #[error("phantom points of {field} miss the real coupler at {position} m")]
    MisalignedPhantom { field: String, position: f64 },
    #[error("invalid configuration field {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("wavenumber offset {dk} 1/m lies outside the monotonic dispersion branch")]
    BranchOverflow { dk: f64 },
    #[error("singular ring network at omega = {omega} rad/s")]
    SingularNetwork { omega: f64 },
    #[error("ill-conditioned basis map (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("no resonance feature in [{lo}, {hi}] rad/s")]
    NoFeature { lo: f64, hi: f64 },
    #[error("nonlinear table is missing quadruple {0}")]
    MissingQuad(String),
    #[error("pump pulse {0} is not contained in the input waveguide at t0")]
    PulseNotContained(String),
    #[error("pump integration unstable at t = {t} s")]
    StepUnstable { t: f64 },
    #[error("nonlinear step series did not converge in {terms} terms")]
    SeriesDiverged { terms: usize },
    #[error("Schur decomposition did not converge")]
    SchurNotConverged,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symplectic (residual {residual:e})")]
    NotSymplectic { residual: f64 },
    #[error("empty mode subset")]
    EmptySubset,
    #[error("{failed} of {total} grid points failed")]
    PartialFailure { failed: usize, total: usize },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
