use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bags::{make_responder_bags, make_tumor_bags, PatientTiles};
use super::config::{Mode, PipelineConfig};
use super::features::FeatureCache;
use super::model::Model;
use super::predict::{predict_patient, FittedPipeline, PatientPrediction};
use super::split::stratified_split;
use crate::annotation::{TileKey, TileLabel};
use crate::error::Result;
use crate::eval::{modified_repeated_cv, pr_auc, roc_auc, CvReport, Summary};
use crate::mil::{Bag, TrainConfig, TrainLog};
use crate::rng;
use crate::slide::{segment_tissue, slide_id_of, tile_slide, CohortManifest, SlideImage, TumorLabel};

pub fn load_slides(dir: &Path, manifest: &CohortManifest) -> Result<Vec<SlideImage>> {
    let mut out = Vec::new();
    for p in &manifest.patients {
        for s in &p.slides {
            out.push(SlideImage::load(slide_id_of(s), &dir.join(s))?);
        }
    }
    Ok(out)
}

/// Otsu segmentation and grid tiling of every slide, grouped by patient in
/// manifest order.
pub fn tile_cohort(manifest: &CohortManifest, slides: &[SlideImage], cfg: &PipelineConfig) -> Result<Vec<PatientTiles>> {
    let by_id: HashMap<&str, &SlideImage> = slides.iter().map(|s| (s.slide_id.as_str(), s)).collect();
    let mut out = Vec::with_capacity(manifest.patients.len());
    for p in &manifest.patients {
        let mut tiles = Vec::new();
        for path in &p.slides {
            let id = slide_id_of(path);
            let slide = by_id.get(id.as_str()).ok_or_else(|| crate::Error::MissingSlide(path.into()))?;
            tiles.extend(tile_slide(slide, &segment_tissue(slide)?, cfg.tile_size, cfg.min_tissue_frac)?);
        }
        out.push(PatientTiles { patient_id: p.id.clone(), response: p.response, tiles });
    }
    Ok(out)
}

/// Sets each tile's tumor label from the snapshot; tiles absent from it
/// become unlabelled.
pub fn apply_labels(patients: &mut [PatientTiles], labels: &[TileLabel]) {
    let map: BTreeMap<TileKey, TumorLabel> = labels.iter().map(|l| (l.key(), l.label)).collect();
    for p in patients {
        for t in &mut p.tiles {
            t.tumor_label = map.get(&(t.slide_id.clone(), t.grid_x, t.grid_y)).copied();
        }
    }
}

fn labelled_tumor_tiles(p: &PatientTiles) -> PatientTiles {
    let tiles = p.tiles.iter().filter(|t| t.tumor_label == Some(TumorLabel::Tumor)).cloned().collect();
    PatientTiles { tiles, ..p.clone() }
}

/// Train and validation patients, split by response with the pipeline seed.
fn split_patients<'a>(patients: &'a [PatientTiles], cfg: &PipelineConfig) -> Result<(Vec<&'a PatientTiles>, Vec<&'a PatientTiles>)> {
    let ids: Vec<(String, u8)> = patients.iter().map(|p| (p.patient_id.clone(), p.response.as_label())).collect();
    let split = stratified_split(&ids, cfg.validation_fraction, rng::derive(cfg.seed, 0))?;
    let pick = |ids: &[String]| patients.iter().filter(|p| ids.contains(&p.patient_id)).collect::<Vec<_>>();
    Ok((pick(&split.train), pick(&split.validation)))
}

fn owned(ps: &[&PatientTiles]) -> Vec<PatientTiles> {
    ps.iter().map(|p| (*p).clone()).collect()
}

fn fit(train: &[Bag], validation: &[Bag], d: usize, cfg: &PipelineConfig, base: TrainConfig, stream: u64) -> Result<(Model, TrainLog, TrainConfig)> {
    let tc = TrainConfig { seed: rng::derive(cfg.seed, stream), ..base };
    let (model, log) = Model::fit(train, validation, cfg.hidden.dims(d), &tc)?;
    Ok((model, log, tc))
}

/// Step one: tumor vs non-tumor on every labelled tile of the given
/// patients. Returns the model, its log and the resolved training config.
pub fn fit_tumor_model(patients: &[PatientTiles], cfg: &PipelineConfig, cache: &mut FeatureCache) -> Result<(Model, TrainLog, TrainConfig)> {
    cfg.validate()?;
    let (train, val) = split_patients(patients, cfg)?;
    let train_bags = make_tumor_bags(&owned(&train), cfg.tumor_step_weights, cache)?;
    let val_bags = make_tumor_bags(&owned(&val), cfg.tumor_step_weights, cache)?;
    fit(&train_bags, &val_bags, cache.dim(), cfg, cfg.tumor_training, 1)
}

/// Step two: responder vs non-responder on ground-truth tumor tiles in
/// two-step mode, on every tile in single-step mode. Only the training part
/// is augmented.
pub fn fit_responder_model(patients: &[PatientTiles], cfg: &PipelineConfig, cache: &mut FeatureCache) -> Result<(Model, TrainLog, TrainConfig)> {
    cfg.validate()?;
    let select = |ps: Vec<&PatientTiles>| -> Vec<PatientTiles> {
        match cfg.mode {
            Mode::TwoStep => ps.into_iter().map(labelled_tumor_tiles).collect(),
            Mode::SingleStep => owned(&ps),
        }
    };
    let (train, val) = split_patients(patients, cfg)?;
    let train_bags = make_responder_bags(&select(train), cfg.augment, cfg.responder_weight, cache)?;
    let val_bags = make_responder_bags(&select(val), false, cfg.responder_weight, cache)?;
    fit(&train_bags, &val_bags, cache.dim(), cfg, cfg.responder_training, 2)
}

/// Tumor models keyed by fold seed, shared between CV runs over the same
/// folds.
pub type TumorModelMemo = HashMap<u64, Model>;

pub fn fit_pipeline(
    patients: &[PatientTiles],
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
    memo: Option<&mut TumorModelMemo>,
) -> Result<FittedPipeline> {
    let tumor = match cfg.mode {
        Mode::SingleStep => None,
        Mode::TwoStep => match memo {
            Some(m) => match m.get(&cfg.seed) {
                Some(model) => Some(model.clone()),
                None => {
                    let model = fit_tumor_model(patients, cfg, cache)?.0;
                    m.insert(cfg.seed, model.clone());
                    Some(model)
                }
            },
            None => Some(fit_tumor_model(patients, cfg, cache)?.0),
        },
    };
    let responder = fit_responder_model(patients, cfg, cache)?.0;
    Ok(FittedPipeline { tumor, responder })
}

pub fn predict_all(
    fitted: &FittedPipeline,
    patients: &[PatientTiles],
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
) -> Result<Vec<PatientPrediction>> {
    patients.iter().map(|p| predict_patient(fitted, p, cfg, cache)).collect()
}

/// Modified repeated k-fold: the pipeline is refitted on each training
/// fold with the fold's seed and scores the held-out patients.
pub fn run_cv(
    patients: &[PatientTiles],
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
    n_folds: usize,
    n_repeats: usize,
    seed: u64,
    mut memo: Option<&mut TumorModelMemo>,
) -> Result<CvReport> {
    cfg.validate()?;
    let ids: Vec<String> = patients.iter().map(|p| p.patient_id.clone()).collect();
    let labels: Vec<u8> = patients.iter().map(|p| p.response.as_label()).collect();
    modified_repeated_cv(&ids, &labels, n_folds, n_repeats, seed, |task| {
        let fold_cfg = PipelineConfig { seed: task.seed, ..cfg.clone() };
        let train: Vec<PatientTiles> = task.train.iter().map(|&i| patients[i].clone()).collect();
        let fitted = fit_pipeline(&train, &fold_cfg, cache, memo.as_deref_mut())?;
        task.test.iter().map(|&i| Ok(predict_patient(&fitted, &patients[i], &fold_cfg, cache)?.score)).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub roc_auc: Summary,
    pub pr_auc: Summary,
}

/// On-disk `ablation.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub version: u32,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub rows: Vec<AblationRow>,
    pub reports: Vec<CvReport>,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Plain-text table, one line per row.
    pub fn table(&self) -> String {
        let mut s = format!("{:<28} {:>9} {:>9}\n", "method", "ROC AUC", "PR AUC");
        for r in &self.rows {
            s += &format!("{:<28} {:>9.3} {:>9.3}\n", r.name, r.roc_auc.mean, r.pr_auc.mean);
        }
        s
    }
}

pub const ABLATION_SINGLE_STEP: &str = "single_step";
pub const ABLATION_TWO_STEP: &str = "two_step";
pub const ABLATION_TWO_STEP_AUGMENTED: &str = "two_step_augmented";
pub const ABLATION_TPS: &str = "tps_baseline";

/// Single step, two step without and with augmentation over identical
/// folds, plus the TPS baseline scored on the whole cohort when given.
pub fn run_ablation(
    patients: &[PatientTiles],
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
    n_folds: usize,
    n_repeats: usize,
    seed: u64,
    tps: Option<&[f64]>,
) -> Result<AblationReport> {
    let variants = [
        (ABLATION_SINGLE_STEP, Mode::SingleStep, true),
        (ABLATION_TWO_STEP, Mode::TwoStep, false),
        (ABLATION_TWO_STEP_AUGMENTED, Mode::TwoStep, true),
    ];
    let mut memo = TumorModelMemo::new();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (name, mode, augment) in variants {
        let c = PipelineConfig { mode, augment, ..cfg.clone() };
        let report = run_cv(patients, &c, cache, n_folds, n_repeats, seed, Some(&mut memo))?;
        rows.push(AblationRow { name: name.into(), roc_auc: report.roc_auc, pr_auc: report.pr_auc });
        reports.push(report);
    }
    if let Some(tps) = tps {
        let labels: Vec<u8> = patients.iter().map(|p| p.response.as_label()).collect();
        let point = |v: f64| Summary { mean: v, sd: 0.0, ci_low: v, ci_high: v };
        rows.push(AblationRow {
            name: ABLATION_TPS.into(),
            roc_auc: point(roc_auc(tps, &labels)?),
            pr_auc: point(pr_auc(tps, &labels)?),
        });
    }
    Ok(AblationReport { version: 1, n_folds, n_repeats, seed, rows, reports })
}
