use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain is empty at this resolution")]
    EmptyDomain,

    #[error("domain is not connected ({components} components); enable pruning to keep the largest")]
    Disconnected { components: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({x}, {y}, {z}) lies outside the domain")]
    PointOutside { x: f64, y: f64, z: f64 },

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("m too small: {0}")]
    MTooSmall(String),

    #[error("defective layer decomposition: {0}")]
    DefectiveLayer(String),

    #[error("point lies in the removable set")]
    PointInRemovableSet,

    #[error("function is not defined on this domain: {0}")]
    UndefinedOnDomain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDomain => "empty-domain",
            Error::Disconnected { .. } => "disconnected",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::PointOutside { .. } => "point-outside",
            Error::ResolutionTooCoarse(_) => "resolution-too-coarse",
            Error::MTooSmall(_) => "m-too-small",
            Error::DefectiveLayer(_) => "defective-layer",
            Error::PointInRemovableSet => "point-in-removable-set",
            Error::UndefinedOnDomain(_) => "undefined-on-domain",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
