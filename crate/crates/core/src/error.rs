use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("radial Hessian eigenvalues requested at r = {0}; the origin needs the symmetric limit")]
    OriginRadius(f64),

    #[error("grid has {cells} cells, at least {required} required")]
    GridTooCoarse { cells: usize, required: usize },

    #[error("the stationary problem requires k >= 2 (got k = {0})")]
    StationaryRequiresK2(usize),

    #[error("shooting found no zero crossing of theta before r = {r_max}")]
    NoZeroCrossing { r_max: f64 },

    #[error("fractional power of a negative quantity {value:e} at r = {r}")]
    NegativeRoot { value: f64, r: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("explicit step became unstable at t = {t}, dt = {dt:e}, step {step}: {detail}")]
    Unstable {
        t: f64,
        dt: f64,
        step: u64,
        detail: String,
    },

    #[error("profile left the admissible cone at t = {t}: node {node}, sigma_{j} = {value:e}")]
    AdmissibilityLost {
        t: f64,
        node: usize,
        j: usize,
        value: f64,
    },

    #[error("support reached the truncated domain edge at t = {t} (r_max = {r_max})")]
    DomainTooSmall { t: f64, r_max: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
