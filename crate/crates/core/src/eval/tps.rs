use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Raster};
use crate::stain::{rgb_to_od, StainVectors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TpsConfig {
    pub stains: StainVectors,
    /// A pixel belongs to a nucleus when its H OD or its DAB OD reaches
    /// these levels.
    pub nucleus_h_threshold: f64,
    pub nucleus_dab_threshold: f64,
    /// Smaller components are discarded as debris.
    pub min_area: usize,
    /// Mean DAB OD at or above which a nucleus is positive.
    pub positive_dab: f64,
}

impl Default for TpsConfig {
    fn default() -> Self {
        Self {
            stains: StainVectors::default(),
            nucleus_h_threshold: 0.7,
            nucleus_dab_threshold: 0.3,
            min_area: 20,
            positive_dab: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpsEstimate {
    pub tps: f64,
    pub n_cells: usize,
    pub n_positive: usize,
}

/// Tumor proportion score: DAB-positive nuclei over all nuclei found inside
/// the tumor mask. Nuclei are 4-connected components of thresholded pixels.
pub fn tps_estimate(slide: &Raster, tumor: &Mask, cfg: &TpsConfig) -> Result<TpsEstimate> {
    let (w, h) = (slide.width(), slide.height());
    if tumor.width != w || tumor.height != h {
        return Err(Error::DimensionMismatch(format!(
            "tumor mask {}x{} for slide {w}x{h}",
            tumor.width, tumor.height
        )));
    }
    if tumor.count() == 0 {
        return Err(Error::NoTumorRegion);
    }
    let unmixer = cfg.stains.unmixer()?;
    let mut dab = vec![0.0; w * h];
    let mut candidate = vec![false; w * h];
    for (i, px) in slide.pixels().enumerate() {
        if tumor.bits[i] {
            let c = unmixer.unmix(rgb_to_od(px));
            dab[i] = c[1];
            candidate[i] = c[0] >= cfg.nucleus_h_threshold || c[1] >= cfg.nucleus_dab_threshold;
        }
    }

    let (mut n_cells, mut n_positive) = (0, 0);
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !candidate[start] {
            continue;
        }
        candidate[start] = false;
        stack.push(start);
        let (mut area, mut dab_sum) = (0usize, 0.0);
        while let Some(i) = stack.pop() {
            area += 1;
            dab_sum += dab[i];
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if candidate[j] {
                    candidate[j] = false;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if area >= cfg.min_area {
            n_cells += 1;
            if dab_sum / area as f64 >= cfg.positive_dab {
                n_positive += 1;
            }
        }
    }
    if n_cells == 0 {
        return Err(Error::NoCellsFound);
    }
    Ok(TpsEstimate { tps: n_positive as f64 / n_cells as f64, n_cells, n_positive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stain::od_to_rgb;

    fn disk(r: &mut Raster, cx: usize, cy: usize, rad: i64, rgb: [u8; 3]) {
        for dy in -rad..=rad {
            for dx in -rad..=rad {
                if dx * dx + dy * dy <= rad * rad {
                    r.set((cx as i64 + dx) as usize, (cy as i64 + dy) as usize, rgb);
                }
            }
        }
    }

    #[test]
    fn counts_painted_nuclei() {
        let s = StainVectors::default();
        let mut r = Raster::filled(60, 30, od_to_rgb(s.mix([0.5, 0.0, 0.0])));
        disk(&mut r, 10, 10, 3, od_to_rgb(s.mix([1.0, 0.0, 0.0])));
        disk(&mut r, 25, 10, 3, od_to_rgb(s.mix([0.1, 0.8, 0.0])));
        disk(&mut r, 40, 10, 3, od_to_rgb(s.mix([0.1, 0.8, 0.0])));
        // too small to count
        disk(&mut r, 40, 22, 1, od_to_rgb(s.mix([1.0, 0.0, 0.0])));
        let mut mask = Mask::new(60, 30);
        mask.bits.iter_mut().for_each(|b| *b = true);
        let est = tps_estimate(&r, &mask, &TpsConfig::default()).unwrap();
        assert_eq!((est.n_cells, est.n_positive), (3, 2));
    }

    #[test]
    fn empty_regions() {
        let r = Raster::filled(8, 8, [240; 3]);
        assert!(matches!(tps_estimate(&r, &Mask::new(8, 8), &TpsConfig::default()), Err(Error::NoTumorRegion)));
        let mut m = Mask::new(8, 8);
        m.set(1, 1, true);
        assert!(matches!(tps_estimate(&r, &m, &TpsConfig::default()), Err(Error::NoCellsFound)));
    }
}
