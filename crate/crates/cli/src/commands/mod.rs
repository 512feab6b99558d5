pub mod annotate;
pub mod cv;
pub mod eval;
pub mod features;
pub mod heatmap;
pub mod predict;
pub mod synth;
pub mod tile;
pub mod train;

use std::path::PathBuf;

use tilemil::eval::{tps_estimate, TpsConfig};
use tilemil::synth::tumor_mask_path;
use tilemil::Mask;

use crate::config::RunConfig;
use crate::context::{resolve_paths, Cohort};
use crate::error::CliResult;

pub const TUMOR_MODEL: &str = "tumor_model.json";
pub const RESPONDER_MODEL: &str = "responder_model.json";
pub const REPORT_FILE: &str = "report.json";
pub const ABLATION_FILE: &str = "ablation.json";
pub const TPS_FILE: &str = "tps.jsonl";
pub const ENRICHMENT_FILE: &str = "enrichment.json";
pub const FEATURES_FILE: &str = "features.milf";

/// Records the command, resolves paths and returns the output directory.
fn prepare(cfg: &mut RunConfig, command: &str, want_labels: bool) -> CliResult<PathBuf> {
    cfg.command = command.into();
    resolve_paths(cfg, want_labels)?;
    Ok(cfg.out()?.to_path_buf())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TpsRow {
    pub patient_id: String,
    pub label: u8,
    /// Positive over all nuclei pooled across the patient's slides.
    pub score: f64,
    pub n_cells: usize,
    pub n_positive: usize,
}

/// TPS of every patient from the tumor masks stored beside the slides.
pub fn patient_tps(cohort: &Cohort, cfg: &TpsConfig) -> CliResult<Vec<TpsRow>> {
    let mut rows = Vec::new();
    for p in &cohort.manifest.patients {
        let (mut cells, mut positive) = (0, 0);
        for s in &p.slides {
            let id = tilemil::slide::slide_id_of(s);
            let slide = cohort.slide(&id).expect("cohort slides follow the manifest");
            let dir = cohort.slide_dir(&id).expect("slide listed in manifest");
            let mask = Mask::load_png(&tumor_mask_path(&dir, &id))?;
            let e = tps_estimate(&slide.raster, &mask, cfg)?;
            cells += e.n_cells;
            positive += e.n_positive;
        }
        rows.push(TpsRow {
            patient_id: p.id.clone(),
            label: p.response.as_label(),
            score: positive as f64 / cells as f64,
            n_cells: cells,
            n_positive: positive,
        });
    }
    Ok(rows)
}

/// Whether every slide has a tumor mask beside it.
pub fn has_tumor_masks(cohort: &Cohort) -> bool {
    cohort.slides.iter().all(|s| {
        cohort.slide_dir(&s.slide_id).is_some_and(|d| tumor_mask_path(&d, &s.slide_id).exists())
    })
}
