use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("STL parse error at byte {offset}: {reason}")]
    StlParse { offset: usize, reason: String },

    #[error("empty input")]
    EmptyInput,

    #[error("empty mesh")]
    EmptyMesh,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("mesh extends outside the voxel bounds")]
    MeshOutOfBounds,

    #[error("voxel grids differ in origin, resolution or dimensions")]
    GridMismatch,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("pose refinement diverged (last residual {residual:.6e} px)")]
    Diverged { residual: f64 },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("marker id {0} is not in the layout")]
    UnknownMarker(u32),

    #[error("no results to summarize")]
    EmptyResults,

    #[error("trial totals differ: report has {report}, reference has {reference}")]
    CountMismatch { report: usize, reference: usize },

    #[error("grid cell (k={k}, iterations={iterations}, alpha={alpha}): {source}")]
    GridCell {
        k: usize,
        iterations: usize,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
