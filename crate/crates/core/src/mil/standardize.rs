use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Bag;
use crate::error::{Error, Result};

/// Per-feature z-scoring fitted on training instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

const MIN_SCALE: f64 = 1e-6;

impl Standardizer {
    pub fn identity(d: usize) -> Self {
        Self { mean: vec![0.0; d], scale: vec![1.0; d] }
    }

    pub fn fit(bags: &[Bag]) -> Result<Self> {
        let d = bags.first().map(Bag::dim).ok_or_else(|| Error::InvalidConfig("no bags to fit".into()))?;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let mut n = 0usize;
        for bag in bags {
            if bag.dim() != d {
                return Err(Error::DimensionMismatch(format!("bag `{}` has d = {}", bag.bag_id, bag.dim())));
            }
            for row in bag.instances.rows() {
                for (j, &v) in row.iter().enumerate() {
                    sum[j] += v;
                    sq[j] += v * v;
                }
                n += 1;
            }
        }
        let n = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scale = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| (s / n - m * m).max(0.0).sqrt().max(MIN_SCALE))
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, bag: &mut Bag) {
        self.apply_matrix(&mut bag.instances);
    }

    /// Standardizes instances stored one per row.
    pub fn apply_matrix(&self, instances: &mut Array2<f64>) {
        for mut row in instances.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
    }

    pub fn apply_all(&self, bags: &mut [Bag]) {
        bags.iter_mut().for_each(|b| self.apply(b));
    }
}
