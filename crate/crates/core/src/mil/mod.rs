//! Attention-based multiple-instance learning.

mod checkpoint;
mod model;
mod optim;
mod params;
mod standardize;
mod train;

pub use checkpoint::{params_from_json, params_to_json, Checkpoint};
pub use model::{backward, forward, loss_and_grad, loss_wbce, sigmoid, ForwardCache, PROB_CLAMP};
pub use optim::{adam_step, cyclic_lr, AdamConfig, AdamState, CyclicLr};
pub use params::{MilDims, MilGradients, MilParams};
pub use standardize::Standardizer;
pub use train::{mean_loss, train, ClassWeights, EpochRecord, TrainConfig, TrainLog, TrainOutcome};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Dihedral;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BagOrigin {
    Tile { patient_id: String, slide_id: String, grid_x: u32, grid_y: u32, transform: Dihedral },
    Patient { patient_id: String },
}

impl BagOrigin {
    pub fn patient_id(&self) -> &str {
        match self {
            BagOrigin::Tile { patient_id, .. } | BagOrigin::Patient { patient_id } => patient_id,
        }
    }
}

/// A labelled, weighted set of instance feature vectors (one per row).
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    pub bag_id: String,
    pub instances: Array2<f64>,
    pub label: u8,
    pub weight: f64,
    pub origin: BagOrigin,
}

impl Bag {
    pub fn len(&self) -> usize {
        self.instances.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.instances.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::DimensionMismatch(format!("bag `{}` has no instances", self.bag_id)));
        }
        if self.label > 1 {
            return Err(Error::InvalidConfig(format!("bag `{}` label {} not in {{0,1}}", self.bag_id, self.label)));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidConfig(format!("bag `{}` weight {} must be positive", self.bag_id, self.weight)));
        }
        if self.instances.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("bag `{}` has non-finite features", self.bag_id)));
        }
        Ok(())
    }
}
