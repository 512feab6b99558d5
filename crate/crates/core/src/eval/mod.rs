//! Metrics and clinical benchmarks: ROC and PR areas, pooled repeated
//! cross-validation, TPS estimation, threshold enrichment and attention
//! heat-maps.

mod cv;
mod enrich;
mod heatmap;
mod metrics;
mod tps;

pub use cv::{
    fold_averaged_auc, modified_repeated_cv, stratified_folds, summarize, CvReport, FoldTask, PatientScore,
    RepeatResult, Summary,
};
pub use enrich::{
    enrich, f1_at, select_threshold, wilson_interval, EnrichmentReport, Proportion, ScoredPatient, ThresholdPolicy,
};
pub use heatmap::{render_attention_heatmap, write_attention_heatmap};
pub use metrics::{pr_auc, pr_curve, roc_auc, roc_curve, PrCurve, RocCurve};
pub use tps::{tps_estimate, TpsConfig, TpsEstimate};
