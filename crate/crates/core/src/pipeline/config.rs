use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mil::{MilDims, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tumor filter, then responder model on predicted tumor tiles.
    TwoStep,
    /// Responder model on every tile.
    SingleStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Max,
}

impl Aggregation {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TumorStepWeights {
    pub tumor: f64,
    pub non_tumor: f64,
}

impl Default for TumorStepWeights {
    fn default() -> Self {
        Self { tumor: 1.0, non_tumor: 1.0 }
    }
}

/// Hidden widths of both networks; the input width comes from the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hidden {
    pub h1: usize,
    pub h2: usize,
    #[serde(rename = "L")]
    pub attn: usize,
    #[serde(default)]
    pub gated: bool,
}

impl Default for Hidden {
    fn default() -> Self {
        Self { h1: 64, h2: 32, attn: 16, gated: false }
    }
}

impl Hidden {
    pub fn dims(&self, d: usize) -> MilDims {
        MilDims { d, h1: self.h1, h2: self.h2, attn: self.attn, gated: self.gated }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tile_size: usize,
    pub patch_size: usize,
    pub min_tissue_frac: f64,
    pub augment: bool,
    pub mode: Mode,
    pub responder_weight: f64,
    pub tumor_step_weights: TumorStepWeights,
    pub tumor_decision_threshold: f64,
    pub patient_aggregation: Aggregation,
    /// Share of training patients held out for best-epoch selection.
    pub validation_fraction: f64,
    pub hidden: Hidden,
    pub tumor_training: TrainConfig,
    pub responder_training: TrainConfig,
    /// Root of every split and initialization seed.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tile_size: 128,
            patch_size: 32,
            min_tissue_frac: 0.25,
            augment: true,
            mode: Mode::TwoStep,
            responder_weight: 4.0,
            tumor_step_weights: TumorStepWeights::default(),
            tumor_decision_threshold: 0.5,
            patient_aggregation: Aggregation::Mean,
            validation_fraction: 0.2,
            hidden: Hidden::default(),
            tumor_training: TrainConfig { epochs: 15, ..TrainConfig::default() },
            responder_training: TrainConfig { epochs: 30, ..TrainConfig::default() },
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.patch_size == 0 || self.tile_size == 0 || self.tile_size % self.patch_size != 0 {
            return bad(format!("patch_size {} must divide tile_size {}", self.patch_size, self.tile_size));
        }
        if !(self.responder_weight > 0.0 && self.responder_weight.is_finite()) {
            return bad(format!("responder_weight {} must be positive", self.responder_weight));
        }
        let w = self.tumor_step_weights;
        if !(w.tumor > 0.0 && w.non_tumor > 0.0) {
            return bad("tumor step weights must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.tumor_decision_threshold) {
            return bad(format!("tumor_decision_threshold {} outside [0, 1]", self.tumor_decision_threshold));
        }
        if !(0.0..=1.0).contains(&self.min_tissue_frac) {
            return bad(format!("min_tissue_frac {} outside [0, 1]", self.min_tissue_frac));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!("validation_fraction {} outside [0, 1)", self.validation_fraction));
        }
        self.hidden.dims(1).validate()?;
        self.tumor_training.validate()?;
        self.responder_training.validate()
    }

    /// Instances per bag.
    pub fn patches_per_tile(&self) -> usize {
        (self.tile_size / self.patch_size).pow(2)
    }
}
