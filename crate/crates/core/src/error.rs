use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generators {0} and {1} coincide")]
    CoincidentGenerators(usize, usize),

    #[error("region has zero mass (measure {0:e})")]
    ZeroMassRegion(f64),

    #[error("cell {0} is empty or has vanishing measure")]
    EmptyCell(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("density is not supported here: {0}")]
    UnsupportedDensity(String),

    #[error("integration step failed after {halvings} halvings (last dt {dt:e})")]
    StepFailed { halvings: u32, dt: f64 },

    #[error("could not place {0} distinct generators after {1} draws")]
    InitFailed(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
