use std::collections::HashMap;

use ndarray::Array2;

use super::augment::{tile_pixels, transform_of};
use crate::error::{Error, Result};
use crate::raster::Dihedral;
use crate::slide::{SlideImage, TileRecord};
use crate::stain::{FeatureExtractor, FeatureMatrix, FEATURE_DIM};

/// Source of instance features for a tile, one row per sub-patch in
/// row-major order, after the tile's augmentation transform.
pub trait TileFeaturizer {
    fn dim(&self) -> usize;
    fn features(&self, tile: &TileRecord) -> Result<Array2<f64>>;
}

/// Handcrafted stain features computed from slide pixels.
pub struct PixelFeaturizer {
    slides: HashMap<String, SlideImage>,
    extractor: FeatureExtractor,
}

impl PixelFeaturizer {
    pub fn new(slides: impl IntoIterator<Item = SlideImage>, extractor: FeatureExtractor) -> Self {
        Self { slides: slides.into_iter().map(|s| (s.slide_id.clone(), s)).collect(), extractor }
    }

    pub fn slide(&self, id: &str) -> Option<&SlideImage> {
        self.slides.get(id)
    }
}

impl TileFeaturizer for PixelFeaturizer {
    fn dim(&self) -> usize {
        FEATURE_DIM
    }

    fn features(&self, tile: &TileRecord) -> Result<Array2<f64>> {
        let slide = self
            .slides
            .get(&tile.slide_id)
            .ok_or_else(|| Error::UnknownTile { slide: tile.slide_id.clone(), x: tile.grid_x, y: tile.grid_y })?;
        let rows = self.extractor.extract_tile(&tile_pixels(slide, tile))?;
        Ok(Array2::from_shape_vec((rows.len(), FEATURE_DIM), rows.concat()).expect("row length is FEATURE_DIM"))
    }
}

/// Externally computed per-patch embeddings. Augmented tiles reorder the
/// patch rows by the transform; the embeddings themselves are unchanged.
pub struct PrecomputedFeaturizer {
    matrix: FeatureMatrix,
    rows: HashMap<(String, u32, u32), Vec<usize>>,
    side: usize,
}

impl PrecomputedFeaturizer {
    /// `side` is the number of patches along a tile edge.
    pub fn new(matrix: FeatureMatrix, side: usize) -> Result<Self> {
        let mut rows: HashMap<(String, u32, u32), Vec<Option<usize>>> = HashMap::new();
        for (i, r) in matrix.index.iter().enumerate() {
            let (px, py) = (r.patch_x as usize, r.patch_y as usize);
            if px >= side || py >= side {
                return Err(Error::MismatchedGrid(format!(
                    "patch ({px}, {py}) of tile {}/{}/{} outside a {side}x{side} grid",
                    r.slide_id, r.grid_x, r.grid_y
                )));
            }
            let slots = rows.entry((r.slide_id.clone(), r.grid_x, r.grid_y)).or_insert_with(|| vec![None; side * side]);
            slots[py * side + px] = Some(i);
        }
        let rows = rows
            .into_iter()
            .map(|(k, slots)| {
                let full: Option<Vec<usize>> = slots.into_iter().collect();
                full.map(|v| (k.clone(), v))
                    .ok_or_else(|| Error::MismatchedGrid(format!("tile {}/{}/{} lacks patches", k.0, k.1, k.2)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { matrix, rows, side })
    }
}

impl TileFeaturizer for PrecomputedFeaturizer {
    fn dim(&self) -> usize {
        self.matrix.d
    }

    fn features(&self, tile: &TileRecord) -> Result<Array2<f64>> {
        let key = (tile.slide_id.clone(), tile.grid_x, tile.grid_y);
        let rows = self
            .rows
            .get(&key)
            .ok_or_else(|| Error::UnknownTile { slide: tile.slide_id.clone(), x: tile.grid_x, y: tile.grid_y })?;
        let (g, t) = (self.side, transform_of(tile));
        let mut out = Array2::zeros((g * g, self.matrix.d));
        for y in 0..g {
            for x in 0..g {
                let (sx, sy) = t.source_of(x, y, g, g);
                let src = self.matrix.row(rows[sy * g + sx]);
                out.row_mut(y * g + x).iter_mut().zip(src).for_each(|(o, &v)| *o = v as f64);
            }
        }
        Ok(out)
    }
}

/// Memoizes features per tile address and transform.
pub struct FeatureCache {
    featurizer: Box<dyn TileFeaturizer>,
    cache: HashMap<(String, u32, u32, Dihedral), Array2<f64>>,
}

impl FeatureCache {
    pub fn new(featurizer: Box<dyn TileFeaturizer>) -> Self {
        Self { featurizer, cache: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.featurizer.dim()
    }

    pub fn get(&mut self, tile: &TileRecord) -> Result<Array2<f64>> {
        let key = (tile.slide_id.clone(), tile.grid_x, tile.grid_y, transform_of(tile));
        if let Some(f) = self.cache.get(&key) {
            return Ok(f.clone());
        }
        let f = self.featurizer.features(tile)?;
        self.cache.insert(key, f.clone());
        Ok(f)
    }
}
