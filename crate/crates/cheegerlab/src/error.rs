use thiserror::Error;

/// Crate-wide error type. The CLI maps [`Error::exit_code`] onto process
/// exit status: configuration problems exit 2, solver failures exit 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("anisotropic grid unsupported: cell width {hx} != cell height {hy}")]
    AnisotropicGrid { hx: f64, hy: f64 },

    #[error("shape escapes the domain extent")]
    ShapeEscapesDomain,

    #[error("empty mask")]
    EmptyMask,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("null Rayleigh candidate: field vanishes on the mask")]
    NullField,

    #[error("p = {0} is outside (1, inf); use cheeger / lambda_root for the endpoints")]
    EigenExponent(f64),

    #[error("regime q <= p only (got p = {p}, q = {q})")]
    Regime { p: f64, q: f64 },

    #[error("oracle bound exceeded: {cells} cells > {limit} enumerable cells")]
    OracleBound { cells: usize, limit: usize },

    #[error("rescaled domain escapes D (t = {0} > 1 under strict containment)")]
    RescaleEscapes(f64),

    #[error("nothing to verify")]
    NothingToVerify,

    #[error("solver did not converge: {context} (best so far: {best})")]
    NonConvergence { context: String, best: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NullField | Error::NonConvergence { .. } | Error::Io(_) => 1,
            _ => 2,
        }
    }
}
