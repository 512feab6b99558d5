use serde::{Deserialize, Serialize};

use super::{SlideImage, TissueMask};
use crate::error::{Error, Result};
use crate::raster::{Dihedral, Raster, WHITE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TumorLabel {
    Tumor,
    NonTumor,
}

impl TumorLabel {
    pub fn is_tumor(self) -> bool {
        self == TumorLabel::Tumor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileSource {
    Original,
    Augmented { aug_id: u32, transform: Dihedral },
}

/// One cell of the slide grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    pub slide_id: String,
    pub grid_x: u32,
    pub grid_y: u32,
    pub origin_x: u32,
    pub origin_y: u32,
    pub tile_size: u32,
    pub tissue_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tumor_label: Option<TumorLabel>,
    pub source: TileSource,
}

impl TileRecord {
    pub fn address(&self) -> (&str, u32, u32) {
        (&self.slide_id, self.grid_x, self.grid_y)
    }
}

/// Grid columns and rows covering a `width`x`height` slide.
pub fn grid_dims(width: usize, height: usize, tile_size: usize) -> (usize, usize) {
    (width.div_ceil(tile_size), height.div_ceil(tile_size))
}

/// Partitions the slide into a non-overlapping grid anchored at the origin
/// and keeps the cells whose tissue fraction reaches `min_tissue_frac`.
///
/// The fraction is measured over the part of the cell that lies inside the
/// slide; edge cells are padded only when their pixels are extracted.
/// Output is row-major.
pub fn tile_slide(
    slide: &SlideImage,
    mask: &TissueMask,
    tile_size: usize,
    min_tissue_frac: f64,
) -> Result<Vec<TileRecord>> {
    if tile_size == 0 {
        return Err(Error::InvalidConfig("tile_size must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&min_tissue_frac) {
        return Err(Error::InvalidConfig(format!("min_tissue_frac {min_tissue_frac} outside [0,1]")));
    }
    let (w, h) = (slide.width(), slide.height());
    if mask.width != w || mask.height != h {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs slide {w}x{h}",
            mask.width, mask.height
        )));
    }
    let (cols, rows) = grid_dims(w, h, tile_size);
    let mut tissue = vec![0usize; cols * rows];
    for y in 0..h {
        let row = y / tile_size;
        let bits = &mask.bits[y * w..(y + 1) * w];
        for (x, &b) in bits.iter().enumerate() {
            if b {
                tissue[row * cols + x / tile_size] += 1;
            }
        }
    }

    let mut out = Vec::new();
    for gy in 0..rows {
        for gx in 0..cols {
            let (ox, oy) = (gx * tile_size, gy * tile_size);
            let area = (tile_size.min(w - ox)) * (tile_size.min(h - oy));
            let frac = tissue[gy * cols + gx] as f64 / area as f64;
            if frac >= min_tissue_frac {
                out.push(TileRecord {
                    slide_id: slide.slide_id.clone(),
                    grid_x: gx as u32,
                    grid_y: gy as u32,
                    origin_x: ox as u32,
                    origin_y: oy as u32,
                    tile_size: tile_size as u32,
                    tissue_fraction: frac,
                    tumor_label: None,
                    source: TileSource::Original,
                });
            }
        }
    }
    Ok(out)
}

/// Pixels of a grid cell, padded with white past the slide edge.
pub fn extract_tile(slide: &SlideImage, tile: &TileRecord) -> Raster {
    let ts = tile.tile_size as usize;
    slide.raster.crop_padded(tile.origin_x as usize, tile.origin_y as usize, ts, ts, WHITE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slide::segment_tissue_with_threshold;

    fn full_tissue(w: usize, h: usize) -> (SlideImage, TissueMask) {
        let slide = SlideImage::new("s", Raster::filled(w, h, [100, 80, 90]));
        let mask = segment_tissue_with_threshold(&slide, 200);
        (slide, mask)
    }

    #[test]
    fn full_tissue_square_grid() {
        let (slide, mask) = full_tissue(1024, 1024);
        let tiles = tile_slide(&slide, &mask, 256, 0.05).unwrap();
        assert_eq!(tiles.len(), 16);
        assert!(tiles.iter().all(|t| t.tissue_fraction == 1.0));
        assert_eq!((tiles[5].grid_x, tiles[5].grid_y), (1, 1));
        assert_eq!((tiles[5].origin_x, tiles[5].origin_y), (256, 256));
    }

    #[test]
    fn ragged_edges_are_padded() {
        let (slide, mask) = full_tissue(1000, 1000);
        let tiles = tile_slide(&slide, &mask, 256, 0.0).unwrap();
        assert_eq!(tiles.len(), 16);
        let edge = tiles.iter().find(|t| t.grid_x == 3 && t.grid_y == 3).unwrap();
        // unpadded region only
        assert_eq!(edge.tissue_fraction, 1.0);
        let px = extract_tile(&slide, edge);
        assert_eq!(px.width(), 256);
        assert_eq!(px.get(231, 231), [100, 80, 90]);
        assert_eq!(px.get(232, 0), WHITE);
        assert_eq!(px.get(0, 232), WHITE);
    }

    #[test]
    fn fraction_filter() {
        let mut r = Raster::filled(64, 64, [250, 250, 250]);
        for y in 0..32 {
            for x in 0..8 {
                r.set(x, y, [0, 0, 0]);
            }
        }
        let slide = SlideImage::new("s", r);
        let mask = segment_tissue_with_threshold(&slide, 100);
        let tiles = tile_slide(&slide, &mask, 32, 0.25).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].tissue_fraction, 0.25);
        assert!(tile_slide(&slide, &mask, 32, 0.26).unwrap().is_empty());
        assert!(tile_slide(&slide, &mask, 0, 0.1).is_err());
    }
}
