use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("basis columns are not orthonormal: defect {defect:.3e}")]
    NotOrthonormal { defect: f64 },

    #[error("matrix is not unitary: defect {defect:.3e} at t = {t}")]
    NotUnitary { defect: f64, t: f64 },

    #[error("eigendecomposition did not converge (matrix hash {hash:016x})")]
    EigenFailure { hash: u64 },

    #[error(
        "ambiguous spectral cut: eigenvalue {eigenvalue:.3e} lies within {gap:.1e} of interval \
         endpoint {endpoint}; apply endpoint regularization or move the cut"
    )]
    AmbiguousCut {
        eigenvalue: f64,
        endpoint: f64,
        gap: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("derivative check failed at t = {t}: finite-difference mismatch {mismatch:.3e} > {tolerance:.3e}")]
    DerivativeMismatch {
        t: f64,
        mismatch: f64,
        tolerance: f64,
    },

    #[error("no admissible level on [{start}, {end}]: an eigenvalue stays pinned near every candidate level")]
    NoAdmissibleLevel { start: f64, end: f64 },

    #[error(
        "time {t} is not a grid point of the propagator; refine the grid instead of interpolating"
    )]
    OffGrid { t: f64 },

    #[error("time {t} lies outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("stiffness bound exceeded: max |A(t)| * T = {value:.3} > {limit}; shorten the horizon or shrink the spectrum")]
    Stiffness { value: f64, limit: f64 },

    #[error("consistency check `{check}` failed: {detail}")]
    Inconsistent { check: String, detail: String },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
