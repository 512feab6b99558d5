use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MilDims {
    /// Instance feature dimension.
    pub d: usize,
    pub h1: usize,
    pub h2: usize,
    /// Attention hidden width.
    #[serde(rename = "L")]
    pub attn: usize,
    /// Gated attention (tanh branch multiplied by a sigmoid branch).
    #[serde(default)]
    pub gated: bool,
}

impl MilDims {
    /// Two 512-wide ReLU layers and a 128-wide attention layer.
    pub fn with_input(d: usize) -> Self {
        Self { d, h1: 512, h2: 512, attn: 128, gated: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.h1 == 0 || self.h2 == 0 || self.attn == 0 {
            return Err(Error::InvalidConfig(format!("all layer widths must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let gate = if self.gated { self.attn * self.h2 } else { 0 };
        self.h1 * self.d + self.h1 + self.h2 * self.h1 + self.h2 + self.attn * self.h2 + gate + self.attn + self.h2 + 1
    }
}

/// Trainable arrays, also used as the container for their gradients and
/// Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MilParams {
    /// h1 x d
    pub embed1_w: Array2<f64>,
    pub embed1_b: Array1<f64>,
    /// h2 x h1
    pub embed2_w: Array2<f64>,
    pub embed2_b: Array1<f64>,
    /// L x h2
    pub attn_v: Array2<f64>,
    /// L x h2, present only for gated attention
    pub attn_gate: Option<Array2<f64>>,
    /// L
    pub attn_w: Array1<f64>,
    /// h2
    pub cls_w: Array1<f64>,
    pub cls_b: f64,
}

pub type MilGradients = MilParams;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, bound: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || rng.random_range(-bound..bound))
}

impl MilParams {
    pub fn zeros(dims: &MilDims) -> Self {
        Self {
            embed1_w: Array2::zeros((dims.h1, dims.d)),
            embed1_b: Array1::zeros(dims.h1),
            embed2_w: Array2::zeros((dims.h2, dims.h1)),
            embed2_b: Array1::zeros(dims.h2),
            attn_v: Array2::zeros((dims.attn, dims.h2)),
            attn_gate: dims.gated.then(|| Array2::zeros((dims.attn, dims.h2))),
            attn_w: Array1::zeros(dims.attn),
            cls_w: Array1::zeros(dims.h2),
            cls_b: 0.0,
        }
    }

    /// He-uniform for the ReLU layers, Xavier-uniform for the attention and
    /// classifier weights, zero biases.
    ///
    /// Draws come from ChaCha8 seeded with `seed`, filling blocks in the
    /// order embed1_w, embed2_w, attn_v, attn_gate, attn_w, cls_w, each in
    /// row-major order.
    pub fn init(dims: &MilDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let he = |fan_in: usize| (6.0 / fan_in as f64).sqrt();
        let xavier = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let embed1_w = uniform(&mut rng, dims.h1, dims.d, he(dims.d));
        let embed2_w = uniform(&mut rng, dims.h2, dims.h1, he(dims.h1));
        let attn_v = uniform(&mut rng, dims.attn, dims.h2, xavier(dims.h2, dims.attn));
        let attn_gate = dims.gated.then(|| uniform(&mut rng, dims.attn, dims.h2, xavier(dims.h2, dims.attn)));
        let attn_w = uniform_vec(&mut rng, dims.attn, xavier(dims.attn, 1));
        let cls_w = uniform_vec(&mut rng, dims.h2, xavier(dims.h2, 1));
        Ok(Self {
            embed1_w,
            embed1_b: Array1::zeros(dims.h1),
            embed2_w,
            embed2_b: Array1::zeros(dims.h2),
            attn_v,
            attn_gate,
            attn_w,
            cls_w,
            cls_b: 0.0,
        })
    }

    pub fn dims(&self) -> MilDims {
        MilDims {
            d: self.embed1_w.ncols(),
            h1: self.embed1_w.nrows(),
            h2: self.embed2_w.nrows(),
            attn: self.attn_v.nrows(),
            gated: self.attn_gate.is_some(),
        }
    }

    /// Checks that every block is consistent with `dims()`.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let expect = MilParams::zeros(&dims);
        for ((name, a), (_, b)) in self.blocks().into_iter().zip(expect.blocks()) {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch(format!("block {name} has {} values, expected {}", a.len(), b.len())));
            }
        }
        if self.embed2_w.ncols() != dims.h1 || self.attn_v.ncols() != dims.h2 || self.cls_w.len() != dims.h2 {
            return Err(Error::DimensionMismatch("inconsistent layer widths".into()));
        }
        if let Some((name, _)) = self.blocks().into_iter().find(|(_, v)| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidConfig(format!("non-finite value in {name}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    /// Named flat views of every block, in a fixed order.
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = vec![
            ("embed1_w", self.embed1_w.as_slice().unwrap()),
            ("embed1_b", self.embed1_b.as_slice().unwrap()),
            ("embed2_w", self.embed2_w.as_slice().unwrap()),
            ("embed2_b", self.embed2_b.as_slice().unwrap()),
            ("attn_v", self.attn_v.as_slice().unwrap()),
        ];
        if let Some(g) = &self.attn_gate {
            out.push(("attn_gate", g.as_slice().unwrap()));
        }
        out.push(("attn_w", self.attn_w.as_slice().unwrap()));
        out.push(("cls_w", self.cls_w.as_slice().unwrap()));
        out.push(("cls_b", std::slice::from_ref(&self.cls_b)));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = vec![
            ("embed1_w", self.embed1_w.as_slice_mut().unwrap()),
            ("embed1_b", self.embed1_b.as_slice_mut().unwrap()),
            ("embed2_w", self.embed2_w.as_slice_mut().unwrap()),
            ("embed2_b", self.embed2_b.as_slice_mut().unwrap()),
            ("attn_v", self.attn_v.as_slice_mut().unwrap()),
        ];
        if let Some(g) = &mut self.attn_gate {
            out.push(("attn_gate", g.as_slice_mut().unwrap()));
        }
        out.push(("attn_w", self.attn_w.as_slice_mut().unwrap()));
        out.push(("cls_w", self.cls_w.as_slice_mut().unwrap()));
        out.push(("cls_b", std::slice::from_mut(&mut self.cls_b)));
        out
    }

    /// `self += alpha * other`, block by block.
    pub fn add_scaled(&mut self, other: &MilParams, alpha: f64) {
        for ((_, dst), (_, src)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += alpha * s);
        }
    }
}
