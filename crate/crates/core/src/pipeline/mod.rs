//! The two-step procedure: tumor recognition on labelled tiles, then
//! responder identification on the tiles the tumor model keeps.
//!
//! A bag is one macro-tile whose instances are its sub-patches; a patient
//! is scored by aggregating its tile-bag probabilities.

mod augment;
mod bags;
mod config;
mod features;
mod model;
mod predict;
mod run;
mod split;

pub use augment::{augment_tiles, tile_pixels, transform_of, AUG_CYCLE};
pub use bags::{make_responder_bags, make_tumor_bags, PatientTiles};
pub use config::{Aggregation, Hidden, Mode, PipelineConfig, TumorStepWeights};
pub use features::{FeatureCache, PixelFeaturizer, PrecomputedFeaturizer, TileFeaturizer};
pub use model::Model;
pub use predict::{
    filter_tumor_tiles, predict_patient, read_predictions, single_step_predict, two_step_predict, write_predictions,
    FittedPipeline, PatientPrediction, TilePrediction, PREDICTIONS_FILE,
};
pub use run::{
    apply_labels, fit_pipeline, fit_responder_model, fit_tumor_model, load_slides, predict_all, run_ablation, run_cv,
    tile_cohort, AblationReport, AblationRow, TumorModelMemo, ABLATION_SINGLE_STEP, ABLATION_TPS, ABLATION_TWO_STEP,
    ABLATION_TWO_STEP_AUGMENTED,
};
pub use split::{stratified_split, CohortSplit};
