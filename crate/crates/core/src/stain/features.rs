//! Fixed 27-value descriptor of an RGB patch.
//!
//! Layout:
//!
//! | index  | content                                              |
//! |--------|------------------------------------------------------|
//! | 0..6   | mean, std of H, DAB and residual optical density      |
//! | 6      | fraction of pixels with DAB OD at or above threshold |
//! | 7..15  | 8-bin histogram of DAB OD clipped to [0, 2]          |
//! | 15..23 | 8-bin histogram of H OD clipped to [0, 2]            |
//! | 23..25 | mean, std of luminance gradient magnitude            |
//! | 25..27 | tissue pixel fraction, mean HSV saturation           |

use serde::{Deserialize, Serialize};

use super::od::{rgb_to_od, StainVectors, Unmixer};
use crate::error::{Error, Result};
use crate::raster::Raster;

pub const FEATURE_DIM: usize = 27;
pub const HIST_BINS: usize = 8;
pub const HIST_MAX_OD: f64 = 2.0;
pub const DEFAULT_DAB_THRESHOLD: f64 = 0.15;
/// Summed three-channel OD above which a pixel counts as tissue.
pub const TISSUE_OD_SUM: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub patch_size: usize,
    pub dab_threshold: f64,
    pub stains: StainVectors,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { patch_size: 32, dab_threshold: DEFAULT_DAB_THRESHOLD, stains: StainVectors::default() }
    }
}

/// Reusable extractor holding the inverted stain matrix.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    unmixer: Unmixer,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

fn histogram_into(values: &[f64], out: &mut [f64]) {
    let width = HIST_MAX_OD / HIST_BINS as f64;
    for &v in values {
        let bin = ((v.clamp(0.0, HIST_MAX_OD) / width) as usize).min(HIST_BINS - 1);
        out[bin] += 1.0;
    }
    let n = values.len() as f64;
    out.iter_mut().for_each(|b| *b /= n);
}

impl FeatureExtractor {
    pub fn new(cfg: FeatureConfig) -> Result<Self> {
        if cfg.patch_size == 0 {
            return Err(Error::InvalidConfig("patch_size must be positive".into()));
        }
        Ok(Self { unmixer: cfg.stains.unmixer()?, cfg })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn extract(&self, patch: &Raster) -> Result<[f64; FEATURE_DIM]> {
        let ps = self.cfg.patch_size;
        if patch.width() != ps || patch.height() != ps {
            return Err(Error::WrongPatchSize { expected: ps, width: patch.width(), height: patch.height() });
        }
        let n = ps * ps;
        let mut h = Vec::with_capacity(n);
        let mut dab = Vec::with_capacity(n);
        let mut res = Vec::with_capacity(n);
        let mut lum = Vec::with_capacity(n);
        let mut tissue = 0usize;
        let mut saturation = 0.0;
        for px in patch.pixels() {
            let od = rgb_to_od(px);
            let c = self.unmixer.unmix(od);
            h.push(c[0]);
            dab.push(c[1]);
            res.push(c[2]);
            if od[0] + od[1] + od[2] >= TISSUE_OD_SUM {
                tissue += 1;
            }
            let (mx, mn) = (*px.iter().max().unwrap(), *px.iter().min().unwrap());
            if mx > 0 {
                saturation += (mx - mn) as f64 / mx as f64;
            }
            lum.push((0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64) / 255.0);
        }

        let mut f = [0.0; FEATURE_DIM];
        (f[0], f[1]) = mean_std(&h);
        (f[2], f[3]) = mean_std(&dab);
        (f[4], f[5]) = mean_std(&res);
        f[6] = dab.iter().filter(|&&v| v >= self.cfg.dab_threshold).count() as f64 / n as f64;
        histogram_into(&dab, &mut f[7..15]);
        histogram_into(&h, &mut f[15..23]);
        let grad = gradient_magnitude(&lum, ps, ps);
        (f[23], f[24]) = mean_std(&grad);
        f[25] = tissue as f64 / n as f64;
        f[26] = saturation / n as f64;
        Ok(f)
    }

    /// Features of every patch of a square tile, patches in row-major order.
    pub fn extract_tile(&self, tile: &Raster) -> Result<Vec<[f64; FEATURE_DIM]>> {
        let ps = self.cfg.patch_size;
        if tile.width() % ps != 0 || tile.height() % ps != 0 {
            return Err(Error::InvalidConfig(format!(
                "patch size {ps} does not divide tile {}x{}",
                tile.width(),
                tile.height()
            )));
        }
        let mut out = Vec::with_capacity((tile.width() / ps) * (tile.height() / ps));
        for py in 0..tile.height() / ps {
            for px in 0..tile.width() / ps {
                let patch = tile.crop_padded(px * ps, py * ps, ps, ps, crate::raster::WHITE);
                out.push(self.extract(&patch)?);
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper building a one-shot extractor.
pub fn extract_handcrafted(patch: &Raster, cfg: &FeatureConfig) -> Result<[f64; FEATURE_DIM]> {
    FeatureExtractor::new(*cfg)?.extract(patch)
}

/// Central-difference gradient magnitude with edge replication, which keeps
/// it invariant under the dihedral group.
fn gradient_magnitude(lum: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: usize, y: usize| lum[y * w + x];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}
