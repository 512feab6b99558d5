use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::geometry::Ellipse;
use crate::error::{Error, Result};
use crate::raster::Mask;
use crate::slide::grid_dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Positive tumor cells concentrated at the nest periphery.
    Reactive,
    /// Positive tumor cells scattered uniformly.
    Constitutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
    pub radius: u32,
    pub is_tumor: bool,
    pub is_positive: bool,
    /// Index into [`GroundTruth::nests`] for tumor cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nest: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileTruth {
    pub grid_x: u32,
    pub grid_y: u32,
    pub tissue_pixels: u64,
    pub tumor_pixels: u64,
    pub is_tumor_tile: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub version: u32,
    pub slide_id: String,
    pub pattern: Pattern,
    pub true_tps: f64,
    pub tile_size: u32,
    pub tumor_tile_threshold: f64,
    pub tissue_regions: Vec<Ellipse>,
    pub nests: Vec<Ellipse>,
    pub cells: Vec<Cell>,
    pub tiles: Vec<TileTruth>,
}

impl GroundTruth {
    /// Positive tumor cells over tumor cells, recomputed from the cell list.
    pub fn tps_from_cells(cells: &[Cell]) -> Option<f64> {
        let tumor = cells.iter().filter(|c| c.is_tumor).count();
        let positive = cells.iter().filter(|c| c.is_tumor && c.is_positive).count();
        (tumor > 0).then(|| positive as f64 / tumor as f64)
    }

    pub fn tile(&self, grid_x: u32, grid_y: u32) -> Option<&TileTruth> {
        self.tiles.iter().find(|t| t.grid_x == grid_x && t.grid_y == grid_y)
    }
}

/// Tumor-tile flags for the whole grid: a tile is tumor when at least
/// `threshold` of its tissue pixels are tumor pixels.
pub fn tile_truth(tissue: &Mask, tumor: &Mask, tile_size: usize, threshold: f64) -> Vec<TileTruth> {
    let (cols, rows) = grid_dims(tissue.width, tissue.height, tile_size);
    let mut out = Vec::with_capacity(cols * rows);
    for gy in 0..rows {
        for gx in 0..cols {
            let (x0, y0) = (gx * tile_size, gy * tile_size);
            let tissue_pixels = tissue.count_in(x0, y0, tile_size, tile_size) as u64;
            let tumor_pixels = tumor.count_in(x0, y0, tile_size, tile_size) as u64;
            let is_tumor_tile = tissue_pixels > 0 && tumor_pixels as f64 >= threshold * tissue_pixels as f64;
            out.push(TileTruth { grid_x: gx as u32, grid_y: gy as u32, tissue_pixels, tumor_pixels, is_tumor_tile });
        }
    }
    out
}

pub fn truth_path(dir: &Path, slide_id: &str) -> PathBuf {
    dir.join(format!("{slide_id}.truth.json"))
}

pub fn tumor_mask_path(dir: &Path, slide_id: &str) -> PathBuf {
    dir.join(format!("{slide_id}.tumor.png"))
}

pub fn tissue_mask_path(dir: &Path, slide_id: &str) -> PathBuf {
    dir.join(format!("{slide_id}.tissue.png"))
}

/// Writes `<id>.truth.json`, `<id>.tumor.png` and `<id>.tissue.png` into `dir`.
pub fn write_sidecars(dir: &Path, truth: &GroundTruth, tissue: &Mask, tumor: &Mask) -> Result<()> {
    std::fs::write(truth_path(dir, &truth.slide_id), serde_json::to_vec(truth)?)?;
    tumor.save_png(&tumor_mask_path(dir, &truth.slide_id))?;
    tissue.save_png(&tissue_mask_path(dir, &truth.slide_id))?;
    Ok(())
}

pub fn read_truth(dir: &Path, slide_id: &str) -> Result<GroundTruth> {
    let path = truth_path(dir, slide_id);
    let bytes = std::fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingSlide(path.clone()),
        _ => Error::Io(e),
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}
