use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate pencil: the two hyperspheres are proportional")]
    DegeneratePencil,

    #[error("chart is not an immersion at u = {u:?}")]
    ImmersionFailure { u: Vec<f64> },

    #[error("frame residual {residual:.3e} exceeds {limit:.1e}: {what}")]
    InternalConsistency {
        what: String,
        residual: f64,
        limit: f64,
    },

    #[error("parameter {t:?} outside the family domain")]
    OutOfDomain { t: Vec<f64> },

    #[error("imaginary characteristic at t = {t:?} (radius^2 = {radius_sq:.3e})")]
    ImaginaryCharacteristic { t: Vec<f64>, radius_sq: f64 },

    #[error("degenerate adapted frame at t = {t}: {reason}")]
    DegenerateFrame { t: f64, reason: String },

    #[error("a_ij is degenerate, so a_ijk is unavailable")]
    DegenerateTensor,

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
