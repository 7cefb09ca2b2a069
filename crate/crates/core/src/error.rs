use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("eigenfunction order {n} unsupported (max {max})")]
    UnsupportedOrder { n: usize, max: usize },

    #[error("derivative order {0} unsupported (max 2)")]
    UnsupportedDerivative(usize),

    #[error("no bound state n={n}: potential supports {count}")]
    NoSuchBoundState { n: usize, count: usize },

    #[error(
        "quadrature window too small: |Psi(x+Y) Psi(x-Y)| = {tail:e} at x={x} exceeds 1e-10 of peak (Y={half_width})"
    )]
    InsufficientQuadratureWindow { x: f64, half_width: f64, tail: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("hbar series not converged after l={max_order}: last term norm {last_term_norm:e}")]
    TruncationNotConverged {
        max_order: usize,
        last_term_norm: f64,
    },

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("loop passes through a stagnation point near ({x}, {p})")]
    LoopThroughStagnation { x: f64, p: f64 },

    #[error("winding number refinement exceeded {max_samples} samples")]
    WindingNotConverged { max_samples: usize },

    #[error("flow sample at ({x}, {p}) lies outside the field")]
    OutOfDomain { x: f64, p: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
