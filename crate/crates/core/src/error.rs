use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length {length} is not an integer multiple of the grid step {step}")]
    NonCommensurate { length: f64, step: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported boundary condition (beta1={beta1}, beta2={beta2})")]
    UnsupportedBc { beta1: f64, beta2: f64 },

    #[error("boundary condition requires beta2 != 0")]
    BadBc,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("evaluation at t={t} exceeds the available horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("singular diagonal in Volterra solve at node {node} (pivot {pivot:e})")]
    SingularDiagonal { node: usize, pivot: f64 },

    #[error("CFL number {0} outside (0, 1]")]
    CflViolation(f64),

    #[error("target is not continuous at the vertices (mismatch {mismatch:e})")]
    TargetNotH10 { mismatch: f64 },

    #[error("bump amplitude {0:e} is degenerate")]
    DegenerateAmplitude(f64),

    #[error("scan step too coarse near omega={0}")]
    ScanTooCoarse(f64),

    #[error("no root cluster found near {center} (found {found} roots within radius {radius})")]
    ClusterNotFound {
        center: f64,
        radius: f64,
        found: usize,
    },

    #[error("synthesis stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
