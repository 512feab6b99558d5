use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{backward, forward, loss_wbce};
use super::optim::{adam_step, AdamConfig, AdamState, CyclicLr};
use super::params::{MilDims, MilParams};
use super::Bag;
use crate::error::{Error, Result};

/// Multipliers applied on top of each bag's own weight, by label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassWeights {
    #[serde(rename = "0")]
    pub negative: f64,
    #[serde(rename = "1")]
    pub positive: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        Self { negative: 1.0, positive: 1.0 }
    }
}

impl ClassWeights {
    pub fn of(&self, label: u8) -> f64 {
        if label == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_min: f64,
    pub lr_max: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// Defaults to twice the number of training bags.
    #[serde(default)]
    pub cycle_steps: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub class_weights: ClassWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_min: 1e-5,
            lr_max: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 100,
            cycle_steps: None,
            seed: 0,
            class_weights: ClassWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if matches!(self.cycle_steps, Some(c) if c < 2) {
            return Err(Error::InvalidConfig("cycle_steps must be at least 2".into()));
        }
        if !(self.class_weights.negative >= 0.0 && self.class_weights.positive >= 0.0) {
            return Err(Error::InvalidConfig("class weights must be non-negative".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon }
    }

    pub fn schedule(&self, n_train_bags: usize) -> CyclicLr {
        let cycle_steps = self.cycle_steps.unwrap_or((2 * n_train_bags).max(2));
        CyclicLr { lr_min: self.lr_min, lr_max: self.lr_max, cycle_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(default)]
    pub validation_loss: Option<f64>,
    /// Learning rate of the last step of the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MilParams,
    pub log: TrainLog,
}

/// Weighted mean loss over bags.
pub fn mean_loss(bags: &[Bag], params: &MilParams, weights: &ClassWeights) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for bag in bags {
        let w = bag.weight * weights.of(bag.label);
        let p = forward(bag.instances.view(), params)?.probability();
        num += loss_wbce(p, bag.label, w);
        den += w;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Adam on one bag per step, epochs in seeded shuffled order. Returns the
/// parameters of the epoch with the lowest validation loss (training loss
/// when `validation` is empty).
pub fn train(train: &[Bag], validation: &[Bag], dims: MilDims, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let has = |label| train.iter().any(|b| b.label == label);
    if !has(0) || !has(1) {
        return Err(Error::SingleClassTraining);
    }
    for bag in train.iter().chain(validation) {
        bag.validate()?;
        if bag.dim() != dims.d {
            return Err(Error::DimensionMismatch(format!(
                "bag `{}` has d = {}, model d = {}",
                bag.bag_id,
                bag.dim(),
                dims.d
            )));
        }
    }

    let mut params = MilParams::init(&dims, cfg.seed)?;
    let mut state = AdamState::new(&params);
    let adam = cfg.adam();
    let schedule = cfg.schedule(train.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5851_f42d_4c95_7f2d);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, MilParams)> = None;
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut num, mut den) = (0.0, 0.0);
        let mut lr = schedule.at(step);
        for &i in &order {
            let bag = &train[i];
            let w = bag.weight * cfg.class_weights.of(bag.label);
            let cache = forward(bag.instances.view(), &params)?;
            num += loss_wbce(cache.probability(), bag.label, w);
            den += w;
            let grads = backward(&cache, &params, bag.label, w);
            lr = schedule.at(step);
            adam_step(&mut params, &grads, &mut state, lr, &adam)?;
            step += 1;
        }
        let train_loss = if den > 0.0 { num / den } else { 0.0 };
        let validation_loss =
            if validation.is_empty() { None } else { Some(mean_loss(validation, &params, &cfg.class_weights)?) };
        let criterion = validation_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|(b, _, _)| criterion < *b) {
            best = Some((criterion, epoch, params.clone()));
        }
        records.push(EpochRecord { epoch, train_loss, validation_loss, lr });
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome { params, log: TrainLog { epochs: records, best_epoch } })
}
