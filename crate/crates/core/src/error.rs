use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("density of range {found} where range {expected} is required")]
    WrongRange { expected: usize, found: usize },
    #[error("site {site} with range {range} does not fit an open chain of length {length}")]
    SiteOutOfRange { site: usize, range: usize, length: usize },
    #[error("chain length {length} is outside the supported interval [{min}, {max}]")]
    ChainLength { length: usize, min: usize, max: usize },
    #[error("telescoping left a non-zero site-linear remainder (norm {residual:.3e}); the charges do not commute")]
    Telescoping { residual: f64 },
    #[error("r_max = {0} is outside 2..=6")]
    TowerRange(usize),
    #[error("pair ({r}, {s}) needs a chain of length at least {needed}, got {length}")]
    ChainTooShort { r: usize, s: usize, needed: usize, length: usize },
    #[error("unknown model family '{0}'")]
    UnknownFamily(String),
    #[error("parameter error: {0}")]
    Params(String),
    #[error("constraint violated: {constraint} (residual {residual:.3e})")]
    Constraint { constraint: String, residual: f64 },
    #[error("family {0} has no closed-form R-matrix")]
    NoClosedForm(String),
    #[error("R-matrix evaluator is singular at u = {re}{im:+}i")]
    Singular { re: f64, im: f64 },
    #[error("R-matrix is not regular: |R(0) - P| = {0:.3e}")]
    NotRegular(f64),
    #[error("basis transformation is singular")]
    SingularTransform,
    #[error("scale factor must be non-zero")]
    ZeroScale,
    #[error("R-matrix does not have the eight-vertex sparsity pattern")]
    NotEightVertex,
    #[error("R-matrix is not even (parity-violating entry at ({row}, {col}))")]
    OddOperator { row: usize, col: usize },
    #[error("series order {0} is outside 1..=8")]
    SeriesOrder(usize),
    #[error("unsupported pairing: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn singular_at(u: crate::C64) -> Self {
        Error::Singular { re: u.re, im: u.im }
    }
}
