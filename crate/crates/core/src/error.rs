use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("eigenvalue {0:.3e} below -tolerance; matrix is not PSD")]
    NegativeEigenvalue(f64),
    #[error("linear algebra backend failure: {0}")]
    Lapack(#[from] ndarray_linalg::error::LinalgError),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("variable index {idx} exceeds alphabet size {d}")]
    VarOutOfRange { idx: usize, d: usize },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("ideal generators must be nonzero homogeneous of degree >= 1")]
    BadGenerator,
    #[error("prescribed fibers inconsistent at split ({i},{j}): residual {residual:.3e}")]
    InconsistentFibers { i: usize, j: usize, residual: f64 },
    #[error("matrix q is not admissible (need q_ii = 0 and q_ij = 1/q_ji != 0)")]
    InadmissibleQ,
    #[error("classification criterion requires q_ij != 1 and r_ij != 1 for i != j")]
    QHypothesis,
    #[error("subshift language is empty at degree {0}")]
    EmptyLanguage(usize),
    #[error("forbidden words must be nonempty with length >= 2")]
    BadForbiddenWord,
    #[error("degree {0} out of range for truncation level {1}")]
    DegreeOutOfRange(usize, usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
