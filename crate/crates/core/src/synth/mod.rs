//! Synthetic IHC cohorts with planted staining patterns and known ground
//! truth.
//!
//! Each slide is near-white glass with a few elliptical tissue regions.
//! Tumor nests are sub-ellipses of those regions, filled with tumor nuclei;
//! the surrounding stroma carries sparser, smaller nuclei that are never
//! DAB-positive. Responders and non-responders differ in where the positive
//! tumor cells sit, not in how many there are.

mod geometry;
mod poisson;
mod render;
mod truth;

use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use crate::raster::Mask;
pub use geometry::Ellipse;
pub use render::{assign_positive, generate_slide, GeneratedSlide, STROMAL_CELL_RADIUS, TUMOR_CELL_RADIUS};
pub use truth::{
    read_truth, tile_truth, tissue_mask_path, truth_path, tumor_mask_path, write_sidecars, Cell, GroundTruth, Pattern,
    TileTruth,
};

use crate::annotation::{write_labels, TileLabel};
use crate::error::{Error, Result};
use crate::rng;
use crate::slide::{grid_dims, write_cohort, CohortManifest, PatientEntry, Response, Split, TumorLabel};

pub const SLIDE_DIR: &str = "slides";
pub const TRUTH_LABELS_FILE: &str = "truth_labels.jsonl";
pub const TPS_MIN: f64 = 0.05;
pub const TPS_MAX: f64 = 0.99;
/// TPS shift given to responders when TPS is the planted signal.
pub const TPS_ONLY_SHIFT: f64 = 0.2;

/// Stream index for cohort-level draws; patient `i` uses stream `i`.
const COHORT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternLink {
    /// Responders reactive, non-responders constitutive, TPS identically
    /// distributed.
    ReactiveVsConstitutive,
    /// Responders get higher TPS; pattern is random.
    TpsOnly,
    /// No planted signal.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub responder_fraction: f64,
    pub slide_size: usize,
    pub tile_size: usize,
    pub tps_mean: f64,
    pub tps_sd: f64,
    pub pattern_link: PatternLink,
    /// Inclusive range of tissue area per patient, in tiles.
    pub tiles_per_patient_range: [usize; 2],
    /// Minimum tumor share of a tile's tissue for a tumor label.
    pub tumor_tile_threshold: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 46,
            responder_fraction: 0.217,
            slide_size: 1024,
            tile_size: 128,
            tps_mean: 0.4,
            tps_sd: 0.2,
            pattern_link: PatternLink::ReactiveVsConstitutive,
            tiles_per_patient_range: [16, 36],
            tumor_tile_threshold: 0.3,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn n_responders(&self) -> usize {
        (self.n_patients as f64 * self.responder_fraction + 0.5).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthConfig(m));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.responder_fraction) {
            return bad(format!("responder_fraction {} outside [0, 1]", self.responder_fraction));
        }
        if self.n_responders() == 0 {
            return bad(format!(
                "{} patients at responder_fraction {} yields no responders",
                self.n_patients, self.responder_fraction
            ));
        }
        if self.tile_size == 0 || self.slide_size < 4 * self.tile_size {
            return bad(format!("slide_size {} must be at least 4 x tile_size {}", self.slide_size, self.tile_size));
        }
        if !(0.0..=1.0).contains(&self.tps_mean) || !(self.tps_sd >= 0.0) || !self.tps_sd.is_finite() {
            return bad(format!("tps_mean {} / tps_sd {} invalid", self.tps_mean, self.tps_sd));
        }
        let [lo, hi] = self.tiles_per_patient_range;
        let (cols, rows) = grid_dims(self.slide_size, self.slide_size, self.tile_size);
        if lo == 0 || lo > hi || hi > cols * rows {
            return bad(format!("tiles_per_patient_range [{lo}, {hi}] invalid for a {cols}x{rows} grid"));
        }
        if !(0.0..=1.0).contains(&self.tumor_tile_threshold) {
            return bad(format!("tumor_tile_threshold {} outside [0, 1]", self.tumor_tile_threshold));
        }
        Ok(())
    }
}

/// Everything needed to render one patient's slide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSpec {
    pub patient_id: String,
    pub slide_id: String,
    pub response: Response,
    pub pattern: Pattern,
    /// Target TPS; the realised value is rounded to whole cells.
    pub tps: f64,
    pub target_tiles: usize,
    pub seed: u64,
}

/// Stratified draws from N(mean, sd) clipped to the TPS range: one draw per
/// equal-probability stratum, shuffled. Both classes sample the same
/// distribution with less chance imbalance than independent draws.
fn stratified_tps(rng: &mut impl Rng, m: usize, mean: f64, sd: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out: Vec<f64> = (0..m)
        .map(|j| {
            let u = (j as f64 + rng.random::<f64>()) / m as f64;
            (mean + sd * normal.inverse_cdf(u)).clamp(TPS_MIN, TPS_MAX)
        })
        .collect();
    out.shuffle(rng);
    out
}

/// Assigns responder status, pattern, TPS and tissue size to every patient.
pub fn plan_cohort(cfg: &SynthConfig) -> Result<Vec<PatientSpec>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, COHORT_STREAM);
    let n = cfg.n_patients;
    let mut is_resp = vec![false; n];
    for i in index::sample(&mut rng, n, cfg.n_responders()) {
        is_resp[i] = true;
    }
    let resp: Vec<usize> = (0..n).filter(|&i| is_resp[i]).collect();
    let non: Vec<usize> = (0..n).filter(|&i| !is_resp[i]).collect();

    let shift = if cfg.pattern_link == PatternLink::TpsOnly { TPS_ONLY_SHIFT } else { 0.0 };
    let mut tps = vec![0.0; n];
    for (&i, t) in resp.iter().zip(stratified_tps(&mut rng, resp.len(), cfg.tps_mean + shift, cfg.tps_sd)) {
        tps[i] = t;
    }
    for (&i, t) in non.iter().zip(stratified_tps(&mut rng, non.len(), cfg.tps_mean, cfg.tps_sd)) {
        tps[i] = t;
    }

    let width = n.saturating_sub(1).to_string().len().max(3);
    let [lo, hi] = cfg.tiles_per_patient_range;
    Ok((0..n)
        .map(|i| {
            let pattern = match cfg.pattern_link {
                PatternLink::ReactiveVsConstitutive if is_resp[i] => Pattern::Reactive,
                PatternLink::ReactiveVsConstitutive => Pattern::Constitutive,
                _ if rng.random_bool(0.5) => Pattern::Reactive,
                _ => Pattern::Constitutive,
            };
            let id = format!("P{i:0width$}");
            PatientSpec {
                slide_id: id.clone(),
                patient_id: id,
                response: if is_resp[i] { Response::Responder } else { Response::NonResponder },
                pattern,
                tps: tps[i],
                target_tiles: rng.random_range(lo..=hi),
                seed: rng::derive(cfg.seed, i as u64),
            }
        })
        .collect())
}

/// Renders the cohort into `dir`: `cohort.json`, one PNG per patient under
/// `slides/` with its ground-truth sidecars, and `truth_labels.jsonl` holding
/// the generator's tumor label for every grid tile.
pub fn generate_cohort(cfg: &SynthConfig, dir: &Path) -> Result<(CohortManifest, Vec<GroundTruth>)> {
    let specs = plan_cohort(cfg)?;
    let slide_dir = dir.join(SLIDE_DIR);
    fs::create_dir_all(&slide_dir)?;
    let mut patients = Vec::with_capacity(specs.len());
    let mut truths = Vec::with_capacity(specs.len());
    let mut labels = Vec::new();
    for spec in &specs {
        let g = generate_slide(spec, cfg);
        g.slide.raster.save_png(&slide_dir.join(format!("{}.png", spec.slide_id)))?;
        write_sidecars(&slide_dir, &g.truth, &g.tissue, &g.tumor)?;
        labels.extend(g.truth.tiles.iter().map(|t| TileLabel {
            slide_id: spec.slide_id.clone(),
            grid_x: t.grid_x,
            grid_y: t.grid_y,
            label: if t.is_tumor_tile { TumorLabel::Tumor } else { TumorLabel::NonTumor },
        }));
        patients.push(PatientEntry {
            id: spec.patient_id.clone(),
            response: spec.response,
            slides: vec![format!("{SLIDE_DIR}/{}.png", spec.slide_id)],
            split: Split::Train,
        });
        truths.push(g.truth);
    }
    let manifest = CohortManifest::new(patients);
    write_cohort(&manifest, dir)?;
    write_labels(&dir.join(TRUTH_LABELS_FILE), &labels)?;
    Ok((manifest, truths))
}
