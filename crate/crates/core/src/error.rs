use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("biorthogonality residual {residual:.3e} exceeds tolerance")]
    BiorthogonalityFailure { residual: f64 },
    #[error("ratio |psi|/phi = {ratio:.3e} at x = {x:.3} exceeds 1e8")]
    RatioOverflow { ratio: f64, x: f64 },
    #[error("cubic roots have equal real parts at lambda = {lambda}")]
    BranchAmbiguity { lambda: Complex64 },
    #[error("degenerate cubic roots at lambda = {lambda}")]
    DegenerateRoots { lambda: Complex64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("contraction norm {norm:.3} too large")]
    ContractionFailure { norm: f64 },
    #[error("limit not settled: trailing variation {variation:.3e}")]
    LimitNotSettled { variation: f64 },
    #[error("matching matrix condition number {cond:.3e}")]
    IllConditionedMatch { cond: f64 },
    #[error("|W(lambda)| = {w_abs:.3e} too small at lambda = {lambda}")]
    NearSingular { lambda: Complex64, w_abs: f64 },
    #[error("input not in ker P: |Pg|/|g| = {ratio:.3e}")]
    NotProjected { ratio: f64 },
    #[error("blow-up at t = {t}: sup|u| = {sup:.3e}")]
    BlowupDetected { t: f64, sup: f64 },
    #[error("resolution loss at t = {t}: spectral tail {tail:.3e}")]
    ResolutionLoss { t: f64, tail: f64 },
    #[error("Newton diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("tube distance {distance:.3e} exceeds 0.2")]
    TubeExit { distance: f64 },
}

impl Error {
    /// Configuration-type errors, as opposed to failures of a numerical procedure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::GridTooSmall(_))
    }
}
