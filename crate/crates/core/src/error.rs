use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian: max |H - H^dagger| = {0:e}")]
    NonHermitianInput(f64),
    #[error("band index {index} out of range for {bands} bands")]
    BandIndexOutOfRange { index: usize, bands: usize },
    #[error("Chern numbers require odd q, got q = {0}")]
    EvenDenominator(u32),
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("fiducial energy {energy} for gap {gap} touches a bulk level at ky = {ky}")]
    FiducialInGapViolation { gap: usize, energy: f64, ky: f64 },
    #[error("no bound mode: lowest eigenvalue {lowest:e} is not below the asymptotic level {asymptote:e}")]
    NoBoundMode { lowest: f64, asymptote: f64 },
    #[error("three-point cosine fit is degenerate")]
    FitDegenerate,
    #[error("grid under-resolved: {0}")]
    GridUnderresolved(String),
    #[error("boundary leakage {leakage:e} exceeds {limit:e} at z = {z} um")]
    BoundaryLeakage { leakage: f64, limit: f64, z: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::CheckFailed(_) => 4,
            _ => 3,
        }
    }
}
