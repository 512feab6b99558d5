//! Attention-pooled bag classifier with hand-derived gradients.
//!
//! For instances `x_k`:
//!
//! ```text
//! h_k = relu(W2 relu(W1 x_k + b1) + b2)
//! e_k = w . tanh(V h_k)                 (gated: w . (tanh(V h_k) * sigmoid(U h_k)))
//! a   = softmax(e)
//! z   = sum_k a_k h_k
//! p   = sigmoid(u . z + c)
//! ```

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::params::{MilGradients, MilParams};
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Array2<f64>,
    h1: Array2<f64>,
    h2: Array2<f64>,
    tanh: Array2<f64>,
    gate: Option<Array2<f64>>,
    attention: Array1<f64>,
    pooled: Array1<f64>,
    logit: f64,
    probability: f64,
    relu_margin: f64,
}

impl ForwardCache {
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn logit(&self) -> f64 {
        self.logit
    }

    pub fn attention(&self) -> &Array1<f64> {
        &self.attention
    }

    /// Smallest |pre-activation| over both ReLU layers; finite differences
    /// with a step above this may straddle a kink.
    pub fn relu_margin(&self) -> f64 {
        self.relu_margin
    }

    /// Per-instance classifier logits `u . h_k + c`.
    pub fn instance_logits(&self, params: &MilParams) -> Array1<f64> {
        self.h2.dot(&params.cls_w) + params.cls_b
    }
}

/// Applies ReLU in place and returns the smallest |pre-activation|.
fn relu_inplace(a: &mut Array2<f64>) -> f64 {
    let mut margin = f64::INFINITY;
    a.mapv_inplace(|v| {
        margin = margin.min(v.abs());
        v.max(0.0)
    });
    margin
}

pub fn forward(instances: ArrayView2<'_, f64>, params: &MilParams) -> Result<ForwardCache> {
    let (k, d) = instances.dim();
    if k == 0 {
        return Err(Error::DimensionMismatch("bag has no instances".into()));
    }
    if d != params.embed1_w.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "bag feature dimension {d}, model expects {}",
            params.embed1_w.ncols()
        )));
    }
    let mut h1 = instances.dot(&params.embed1_w.t()) + &params.embed1_b;
    let m1 = relu_inplace(&mut h1);
    let mut h2 = h1.dot(&params.embed2_w.t()) + &params.embed2_b;
    let m2 = relu_inplace(&mut h2);

    let tanh = h2.dot(&params.attn_v.t()).mapv(f64::tanh);
    let gate = params.attn_gate.as_ref().map(|u| h2.dot(&u.t()).mapv(sigmoid));
    let scores = match &gate {
        Some(g) => (&tanh * g).dot(&params.attn_w),
        None => tanh.dot(&params.attn_w),
    };
    let max = scores.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut attention = scores.mapv(|e| (e - max).exp());
    let total = attention.sum();
    attention /= total;

    let pooled = attention.dot(&h2);
    let logit = pooled.dot(&params.cls_w) + params.cls_b;
    Ok(ForwardCache {
        x: instances.to_owned(),
        h1,
        h2,
        tanh,
        gate,
        attention,
        pooled,
        logit,
        probability: sigmoid(logit),
        relu_margin: m1.min(m2),
    })
}

/// Weighted binary cross-entropy on a clamped probability.
pub fn loss_wbce(p: f64, y: u8, weight: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        -weight * p.ln()
    } else {
        -weight * (1.0 - p).ln()
    }
}

/// Exact gradient of `loss_wbce(forward(..), y, weight)` for every block.
pub fn backward(cache: &ForwardCache, params: &MilParams, y: u8, weight: f64) -> MilGradients {
    let p = cache.probability;
    // the clamp is flat outside (eps, 1 - eps)
    let d_logit = if p > PROB_CLAMP && p < 1.0 - PROB_CLAMP { weight * (p - y as f64) } else { 0.0 };

    let d_pooled = &params.cls_w * d_logit;
    let cls_w = &cache.pooled * d_logit;

    // softmax backward
    let d_att = cache.h2.dot(&d_pooled);
    let inner = cache.attention.dot(&d_att);
    let d_scores = &cache.attention * &(d_att - inner);

    let k = cache.x.nrows();
    let d_scores_col = d_scores.view().insert_axis(Axis(1));
    let w_row = params.attn_w.view().insert_axis(Axis(0));
    let d_mixed = d_scores_col.dot(&w_row); // K x L

    let (attn_w, d_tanh_pre, gate_grads) = match (&cache.gate, &params.attn_gate) {
        (Some(g), Some(u)) => {
            let attn_w = (&cache.tanh * g).t().dot(&d_scores);
            let mut d_tanh = &d_mixed * g;
            Zip::from(&mut d_tanh).and(&cache.tanh).for_each(|d, &t| *d *= 1.0 - t * t);
            let mut d_gate = &d_mixed * &cache.tanh;
            Zip::from(&mut d_gate).and(g).for_each(|d, &s| *d *= s * (1.0 - s));
            let d_u = d_gate.t().dot(&cache.h2);
            let d_h2_gate = d_gate.dot(u);
            (attn_w, d_tanh, Some((d_u, d_h2_gate)))
        }
        _ => {
            let attn_w = cache.tanh.t().dot(&d_scores);
            let mut d_tanh = d_mixed;
            Zip::from(&mut d_tanh).and(&cache.tanh).for_each(|d, &t| *d *= 1.0 - t * t);
            (attn_w, d_tanh, None)
        }
    };
    let attn_v = d_tanh_pre.t().dot(&cache.h2);

    // d h2 from pooling and from the attention branch(es)
    let a_col = cache.attention.view().insert_axis(Axis(1));
    let mut d_h2 = a_col.dot(&d_pooled.view().insert_axis(Axis(0))) + d_tanh_pre.dot(&params.attn_v);
    let attn_gate = gate_grads.map(|(d_u, d_h2_gate)| {
        d_h2 += &d_h2_gate;
        d_u
    });
    Zip::from(&mut d_h2).and(&cache.h2).for_each(|d, &h| {
        if h <= 0.0 {
            *d = 0.0;
        }
    });
    let embed2_w = d_h2.t().dot(&cache.h1);
    let embed2_b = d_h2.sum_axis(Axis(0));

    let mut d_h1 = d_h2.dot(&params.embed2_w);
    Zip::from(&mut d_h1).and(&cache.h1).for_each(|d, &h| {
        if h <= 0.0 {
            *d = 0.0;
        }
    });
    let embed1_w = d_h1.t().dot(&cache.x);
    let embed1_b = d_h1.sum_axis(Axis(0));
    debug_assert_eq!(d_h1.nrows(), k);

    MilGradients { embed1_w, embed1_b, embed2_w, embed2_b, attn_v, attn_gate, attn_w, cls_w, cls_b: d_logit }
}

/// Loss and gradients of one weighted bag.
pub fn loss_and_grad(
    instances: ArrayView2<'_, f64>,
    params: &MilParams,
    y: u8,
    weight: f64,
) -> Result<(f64, MilGradients, ForwardCache)> {
    let cache = forward(instances, params)?;
    let loss = loss_wbce(cache.probability, y, weight);
    let grads = backward(&cache, params, y, weight);
    Ok((loss, grads, cache))
}
