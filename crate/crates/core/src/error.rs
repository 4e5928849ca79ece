use thiserror::Error;

use crate::params::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(#[from] Violation),

    #[error("scale factor must be non-zero")]
    ZeroScale,

    #[error("theta1 = 0 leaves {0} undefined")]
    Theta1Zero(&'static str),

    #[error("cumulant order must be >= 1, got {0}")]
    CumulantOrder(i64),

    #[error("grid too small: clipped mass {clipped:.3e} exceeds 1e-8; try half_width >= {suggested_half_width}")]
    GridTooSmall { clipped: f64, suggested_half_width: f64 },

    #[error("grid would need {needed} points, above the cap of {cap}")]
    GridTooLarge { needed: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("distributions are tabulated on different grids")]
    IncompatibleGrids,

    #[error("test has no power: mean under H1 ({mean1}) does not exceed mean under H0 ({mean0})")]
    NoPower { mean0: f64, mean1: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::ZeroScale => "zero_scale",
            Error::Theta1Zero(_) => "theta1_zero",
            Error::CumulantOrder(_) => "cumulant_order",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::GridTooLarge { .. } => "grid_too_large",
            Error::NonFinite(_) => "non_finite",
            Error::IncompatibleGrids => "incompatible_grids",
            Error::NoPower { .. } => "no_power",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
