use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid event specification: {0}")]
    InvalidSpec(String),

    #[error("unknown lateral category `{0}`")]
    UnknownCategory(String),

    #[error("timeline anchors leave no room for the braking phase: {0}")]
    NoRoomForBraking(String),

    #[error("neighbour index {index} missing (frame has {available} neighbours)")]
    MissingNeighbour { index: usize, available: usize },

    #[error("vehicle centres coincide; uncertain-velocity direction is undefined")]
    CoincidentCentres,

    #[error("feature `{feature}` is not available for scenario {scenario}")]
    FeatureUnavailable { feature: String, scenario: String },

    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),

    #[error("manifest scenario {manifest} does not match trajectory scenario {trajectory}")]
    ManifestMismatch { manifest: String, trajectory: String },

    #[error("column `{0}` has zero variance and cannot be normalized")]
    ZeroVariance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("event {0} is not present in the alignment table")]
    UnknownEvent(u32),

    #[error("clip count {got} does not match the {expected} rating slots of event {event}")]
    ClipCountMismatch { event: u32, expected: usize, got: usize },

    #[error("interpolation anchors invalid: {0}")]
    BadAnchors(String),

    #[error("curve grids differ")]
    GridMismatch,

    #[error("degenerate model output: max equals min ({0})")]
    DegenerateRange(f64),

    #[error("calibration requires at least one draw")]
    NoDraws,

    #[error("non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exact Shapley enumeration supports at most {max} features, got {got}")]
    TooManyFeatures { max: usize, got: usize },

    #[error("invalid rating data: {0}")]
    InvalidRatings(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
