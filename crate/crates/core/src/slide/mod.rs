//! Slide loading, Otsu tissue segmentation and grid tiling.

mod cohort;
mod otsu;
mod tiling;

use std::path::Path;

pub use cohort::{read_cohort, slide_id_of, write_cohort, CohortManifest, PatientEntry, Response, Split, MANIFEST_FILE};
pub use otsu::{histogram, otsu_threshold, Histogram};
pub use tiling::{extract_tile, grid_dims, tile_slide, TileRecord, TileSource, TumorLabel};

use crate::error::Result;
use crate::raster::{luminance, Raster};

/// A baseline IHC slide held fully in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlideImage {
    pub slide_id: String,
    pub raster: Raster,
}

impl SlideImage {
    pub fn new(slide_id: impl Into<String>, raster: Raster) -> Self {
        Self { slide_id: slide_id.into(), raster }
    }

    pub fn load(slide_id: impl Into<String>, path: &Path) -> Result<Self> {
        Ok(Self::new(slide_id, Raster::load_png(path)?))
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    pub fn luminance_histogram(&self) -> Histogram {
        histogram(self.raster.pixels().map(luminance))
    }
}

/// Per-pixel tissue flags, `true` on tissue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TissueMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub threshold_used: u8,
}

impl TissueMask {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Tissue is everything at or below the Otsu threshold of the luminance
/// histogram; the glass background is near white.
pub fn segment_tissue(slide: &SlideImage) -> Result<TissueMask> {
    let t = otsu_threshold(&slide.luminance_histogram())?;
    Ok(segment_tissue_with_threshold(slide, t))
}

/// Same as [`segment_tissue`] with a caller-chosen luminance cut.
pub fn segment_tissue_with_threshold(slide: &SlideImage, threshold: u8) -> TissueMask {
    let bits = slide.raster.pixels().map(|p| luminance(p) <= threshold).collect();
    TissueMask { width: slide.width(), height: slide.height(), bits, threshold_used: threshold }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn black_square_on_white() {
        let mut r = Raster::filled(64, 48, [255, 255, 255]);
        for y in 10..20 {
            for x in 30..45 {
                r.set(x, y, [0, 0, 0]);
            }
        }
        let slide = SlideImage::new("s", r);
        let mask = segment_tissue(&slide).unwrap();
        for y in 0..48 {
            for x in 0..64 {
                let inside = (30..45).contains(&x) && (10..20).contains(&y);
                assert_eq!(mask.get(x, y), inside, "({x},{y})");
            }
        }
        assert_eq!(mask, segment_tissue(&slide).unwrap());
    }

    #[test]
    fn blank_slide_is_degenerate() {
        let slide = SlideImage::new("blank", Raster::filled(16, 16, [255, 255, 255]));
        assert!(matches!(segment_tissue(&slide), Err(Error::DegenerateHistogram)));
    }
}
