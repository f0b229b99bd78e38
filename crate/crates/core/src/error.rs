use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate box: lower[{axis}] = {lower} > upper[{axis}] = {upper}")]
    DegenerateBox { axis: usize, lower: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular matrix")]
    Singular,

    #[error("missing Lipschitz constant for nonlinear system")]
    MissingLipschitz,

    #[error("vector field evaluation failed: {0}")]
    Evaluator(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parameter condition violated: {0}")]
    ConditionViolated(String),

    #[error("covering radius {radius} is below half the lattice spacing {spacing}")]
    CoveringImpossible { radius: f64, spacing: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("refinement infeasible: residual {residual:e} exceeds tolerance {tolerance:e}")]
    RefinementInfeasible { residual: f64, tolerance: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
