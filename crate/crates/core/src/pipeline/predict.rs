use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bags::PatientTiles;
use super::config::{Mode, PipelineConfig};
use super::features::FeatureCache;
use super::model::Model;
use crate::error::{Error, Result};
use crate::slide::TileRecord;

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePrediction {
    pub slide_id: String,
    pub grid_x: u32,
    pub grid_y: u32,
    /// Absent in single-step mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tumor_prob: Option<f64>,
    pub responder_prob: f64,
    pub attention_max: f64,
    /// Shannon entropy of the attention weights, in nats.
    pub attention_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientPrediction {
    pub patient_id: String,
    pub label: u8,
    pub score: f64,
    pub n_tiles_total: usize,
    pub n_tumor_tiles_predicted: usize,
    /// No tile passed the tumor filter, so every tile was scored.
    pub fallback: bool,
    /// Tiles that entered the score.
    pub tiles: Vec<TilePrediction>,
}

/// Tiles whose tumor probability reaches `threshold`, with that probability.
pub fn filter_tumor_tiles(
    tiles: &[TileRecord],
    tumor_model: &Model,
    threshold: f64,
    cache: &mut FeatureCache,
) -> Result<Vec<(TileRecord, f64)>> {
    let mut kept = Vec::new();
    for t in tiles {
        let p = tumor_model.probability(&cache.get(t)?)?;
        if p >= threshold {
            kept.push((t.clone(), p));
        }
    }
    Ok(kept)
}

fn score_tiles(
    scored: &[(TileRecord, Option<f64>)],
    responder: &Model,
    cache: &mut FeatureCache,
) -> Result<Vec<TilePrediction>> {
    scored
        .iter()
        .map(|(t, tumor_prob)| {
            let fwd = responder.forward(&cache.get(t)?)?;
            let a = fwd.attention();
            Ok(TilePrediction {
                slide_id: t.slide_id.clone(),
                grid_x: t.grid_x,
                grid_y: t.grid_y,
                tumor_prob: *tumor_prob,
                responder_prob: fwd.probability(),
                attention_max: a.iter().copied().fold(0.0, f64::max),
                attention_entropy: -a.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>(),
            })
        })
        .collect()
}

fn finish(patient: &PatientTiles, n_tumor: usize, fallback: bool, tiles: Vec<TilePrediction>, cfg: &PipelineConfig) -> PatientPrediction {
    let probs: Vec<f64> = tiles.iter().map(|t| t.responder_prob).collect();
    PatientPrediction {
        patient_id: patient.patient_id.clone(),
        label: patient.response.as_label(),
        score: cfg.patient_aggregation.apply(&probs),
        n_tiles_total: patient.tiles.len(),
        n_tumor_tiles_predicted: n_tumor,
        fallback,
        tiles,
    }
}

/// Tumor filter, then the responder model on each surviving tile; the
/// patient score aggregates their probabilities. With no survivors every
/// tile is scored and `fallback` is set.
pub fn two_step_predict(
    patient: &PatientTiles,
    tumor_model: &Model,
    responder_model: &Model,
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
) -> Result<PatientPrediction> {
    if patient.tiles.is_empty() {
        return Err(Error::EmptyPatient(patient.patient_id.clone()));
    }
    let mut all = Vec::with_capacity(patient.tiles.len());
    for t in &patient.tiles {
        all.push((t.clone(), Some(tumor_model.probability(&cache.get(t)?)?)));
    }
    let kept: Vec<(TileRecord, Option<f64>)> =
        all.iter().filter(|(_, p)| p.unwrap_or(0.0) >= cfg.tumor_decision_threshold).cloned().collect();
    let n_tumor = kept.len();
    let fallback = kept.is_empty();
    let tiles = score_tiles(if fallback { &all } else { &kept }, responder_model, cache)?;
    Ok(finish(patient, n_tumor, fallback, tiles, cfg))
}

/// Responder model on every tile, no tumor filter.
pub fn single_step_predict(
    patient: &PatientTiles,
    responder_model: &Model,
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
) -> Result<PatientPrediction> {
    if patient.tiles.is_empty() {
        return Err(Error::EmptyPatient(patient.patient_id.clone()));
    }
    let all: Vec<(TileRecord, Option<f64>)> = patient.tiles.iter().map(|t| (t.clone(), None)).collect();
    let tiles = score_tiles(&all, responder_model, cache)?;
    Ok(finish(patient, 0, false, tiles, cfg))
}

/// Models of one fitted pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub tumor: Option<Model>,
    pub responder: Model,
}

pub fn predict_patient(
    fitted: &FittedPipeline,
    patient: &PatientTiles,
    cfg: &PipelineConfig,
    cache: &mut FeatureCache,
) -> Result<PatientPrediction> {
    match (cfg.mode, &fitted.tumor) {
        (Mode::TwoStep, Some(tumor)) => two_step_predict(patient, tumor, &fitted.responder, cfg, cache),
        (Mode::TwoStep, None) => Err(Error::InvalidConfig("two-step prediction needs a tumor model".into())),
        (Mode::SingleStep, _) => single_step_predict(patient, &fitted.responder, cfg, cache),
    }
}

pub fn write_predictions(path: &Path, predictions: &[PatientPrediction]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in predictions {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PatientPrediction>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
