use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Raster;

const ALPHA: f64 = 0.5;
const RED: [f64; 3] = [255.0, 0.0, 0.0];
const BLUE: [f64; 3] = [0.0, 0.0, 255.0];

/// Overlays one colour per sub-patch on the tile: red where the instance
/// logit is positive, blue otherwise, scaled by `a_k / max(a)` and blended
/// at 50% over the source pixels. Patches are in row-major order.
pub fn render_attention_heatmap(tile: &Raster, patch_size: usize, attention: &[f64], logits: &[f64]) -> Result<Raster> {
    if patch_size == 0 || tile.width() % patch_size != 0 || tile.height() % patch_size != 0 {
        return Err(Error::MismatchedGrid(format!(
            "patch size {patch_size} does not divide tile {}x{}",
            tile.width(),
            tile.height()
        )));
    }
    let cols = tile.width() / patch_size;
    let k = cols * (tile.height() / patch_size);
    if attention.len() != k || logits.len() != k {
        return Err(Error::MismatchedGrid(format!(
            "{k} patches but {} weights and {} logits",
            attention.len(),
            logits.len()
        )));
    }
    let sum: f64 = attention.iter().sum();
    if attention.iter().any(|a| !(*a >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::MismatchedGrid(format!("attention weights must be a distribution, sum {sum}")));
    }
    let max = attention.iter().copied().fold(0.0, f64::max);

    let mut out = tile.clone();
    for y in 0..tile.height() {
        for x in 0..tile.width() {
            let i = (y / patch_size) * cols + x / patch_size;
            let hue = if logits[i] > 0.0 { RED } else { BLUE };
            let b = if max > 0.0 { attention[i] / max } else { 0.0 };
            let src = tile.get(x, y);
            let px = [0, 1, 2].map(|c| ((1.0 - ALPHA) * src[c] as f64 + ALPHA * b * hue[c]).round() as u8);
            out.set(x, y, px);
        }
    }
    Ok(out)
}

pub fn write_attention_heatmap(
    tile: &Raster,
    patch_size: usize,
    attention: &[f64],
    logits: &[f64],
    path: &Path,
) -> Result<()> {
    render_attention_heatmap(tile, patch_size, attention, logits)?.save_png(path)
}
