use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("origin already present in configuration")]
    DuplicateOrigin,

    #[error("configuration has no point at the origin")]
    MissingOrigin,

    #[error("empty window: no configuration points inside the top-level box")]
    EmptyWindow,

    #[error("point {index} at {point:?} lies outside the window {window}")]
    PointOutsideWindow {
        index: usize,
        point: Vec<f64>,
        window: String,
    },

    #[error(
        "refinement depth exceeds k_max = {k_max}: points {first} {a:?} and {second} {b:?} are closer than 2^-{k_max}"
    )]
    RefinementTooDeep {
        k_max: u32,
        first: usize,
        second: usize,
        a: Vec<f64>,
        b: Vec<f64>,
    },

    #[error("grid point {index:?} is not covered by the configuration domain for shift {shift:?}")]
    GridNotCovered { index: Vec<usize>, shift: Vec<f64> },

    #[error("grid mismatch between fractional fields")]
    GridMismatch,

    #[error("grid cell {0:?} has no supporting center")]
    UnsupportedCell(Vec<usize>),

    #[error("region {region}: {detail}")]
    Unreachable { region: usize, detail: String },

    #[error("insufficient bins for decay fit: {usable} usable, need at least 3")]
    InsufficientBins { usable: usize },

    #[error("all {trials} trials were discarded at the window boundary; increase the window level")]
    AllTrialsDiscarded { trials: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
