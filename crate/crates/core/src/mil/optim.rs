use serde::{Deserialize, Serialize};

use super::params::{MilGradients, MilParams};
use crate::error::{Error, Result};

/// Triangular cyclic learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicLr {
    pub lr_min: f64,
    pub lr_max: f64,
    pub cycle_steps: usize,
}

impl CyclicLr {
    /// Starts at `lr_min`, peaks at `lr_max` half-way through each cycle.
    pub fn at(&self, step: usize) -> f64 {
        cyclic_lr(step, self.lr_min, self.lr_max, self.cycle_steps)
    }
}

pub fn cyclic_lr(step: usize, lr_min: f64, lr_max: f64, cycle_steps: usize) -> f64 {
    assert!(cycle_steps >= 2, "cycle_steps must be at least 2");
    let frac = (step % cycle_steps) as f64 / cycle_steps as f64;
    lr_min + (lr_max - lr_min) * (1.0 - (2.0 * frac - 1.0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moments mirroring the parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: MilParams,
    pub second: MilParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &MilParams) -> Self {
        let dims = params.dims();
        Self { first: MilParams::zeros(&dims), second: MilParams::zeros(&dims), step: 0 }
    }
}

/// One bias-corrected Adam update. Gradients are checked before anything is
/// modified, so a rejected step leaves `params` and `state` untouched.
pub fn adam_step(
    params: &mut MilParams,
    grads: &MilGradients,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if let Some((name, _)) = grads.blocks().into_iter().find(|(_, b)| b.iter().any(|g| !g.is_finite())) {
        return Err(Error::NonFiniteGradient(name));
    }
    if params.dims() != grads.dims() || params.dims() != state.first.dims() {
        return Err(Error::DimensionMismatch("adam: parameter, gradient and state shapes differ".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);

    let blocks = params
        .blocks_mut()
        .into_iter()
        .zip(grads.blocks())
        .zip(state.first.blocks_mut())
        .zip(state.second.blocks_mut());
    for ((((_, p), (_, g)), (_, m)), (_, v)) in blocks {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
