use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate histogram: all mass in a single intensity level")]
    DegenerateHistogram,

    #[error("invalid slide: {0}")]
    InvalidSlide(String),

    #[error("slide file missing: {}", .0.display())]
    MissingSlide(PathBuf),

    #[error("duplicate patient id `{0}` in cohort manifest")]
    DuplicatePatient(String),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("invalid synth config: {0}")]
    InvalidSynthConfig(String),

    #[error("stain matrix is singular or ill-conditioned (condition number {0:.3e})")]
    SingularStainMatrix(f64),

    #[error("patch must be {expected}x{expected} pixels, got {width}x{height}")]
    WrongPatchSize { expected: usize, width: usize, height: usize },

    #[error("feature file: bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("feature file: unsupported version {0}")]
    VersionMismatch(u32),

    #[error("feature file truncated: expected {expected} bytes of payload, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(&'static str),

    #[error("training set contains a single class")]
    SingleClassTraining,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cohort contains a single response class")]
    SingleClassCohort,

    #[error("patient `{0}` has no tiles")]
    EmptyPatient(String),

    #[error("tile {slide}/{x}/{y} has no tumor label")]
    UnlabeledTile { slide: String, x: u32, y: u32 },

    #[error("patient `{0}` has no tumor tiles")]
    NoTumorTiles(String),

    #[error("labels contain a single class")]
    SingleClassLabels,

    #[error("no positive labels")]
    NoPositives,

    #[error("too few patients: {have} for {folds} folds")]
    TooFewPatients { have: usize, folds: usize },

    #[error("tumor mask is empty")]
    NoTumorRegion,

    #[error("no cells found inside the tumor region")]
    NoCellsFound,

    #[error("enrichment rule selects no patients")]
    EmptySelection,

    #[error("attention grid mismatch: {0}")]
    MismatchedGrid(String),

    #[error("unknown tile {slide}/{x}/{y}")]
    UnknownTile { slide: String, x: u32, y: u32 },

    #[error("malformed label log: {0}")]
    MalformedLog(String),

    #[error("nothing to undo for annotator `{0}`")]
    NothingToUndo(String),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
