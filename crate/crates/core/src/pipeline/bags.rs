use serde::{Deserialize, Serialize};

use super::augment::{augment_tiles, transform_of};
use super::config::TumorStepWeights;
use super::features::FeatureCache;
use crate::error::{Error, Result};
use crate::mil::{Bag, BagOrigin};
use crate::slide::{Response, TileRecord, TileSource};

/// A patient with the tiles considered for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTiles {
    pub patient_id: String,
    pub response: Response,
    pub tiles: Vec<TileRecord>,
}

fn tile_bag(
    cache: &mut FeatureCache,
    patient_id: &str,
    tile: &TileRecord,
    label: u8,
    weight: f64,
) -> Result<Bag> {
    let bag_id = match tile.source {
        TileSource::Original => format!("{}/{}/{}", tile.slide_id, tile.grid_x, tile.grid_y),
        TileSource::Augmented { aug_id, .. } => format!("{}/{}/{}#{aug_id}", tile.slide_id, tile.grid_x, tile.grid_y),
    };
    Ok(Bag {
        bag_id,
        instances: cache.get(tile)?,
        label,
        weight,
        origin: BagOrigin::Tile {
            patient_id: patient_id.to_string(),
            slide_id: tile.slide_id.clone(),
            grid_x: tile.grid_x,
            grid_y: tile.grid_y,
            transform: transform_of(tile),
        },
    })
}

/// One bag per labelled tile, label 1 for tumor, pooled over responders and
/// non-responders.
pub fn make_tumor_bags(patients: &[PatientTiles], weights: TumorStepWeights, cache: &mut FeatureCache) -> Result<Vec<Bag>> {
    let mut bags = Vec::new();
    for p in patients {
        for t in &p.tiles {
            let label = t.tumor_label.ok_or_else(|| Error::UnlabeledTile {
                slide: t.slide_id.clone(),
                x: t.grid_x,
                y: t.grid_y,
            })?;
            let (y, w) = if label.is_tumor() { (1, weights.tumor) } else { (0, weights.non_tumor) };
            bags.push(tile_bag(cache, &p.patient_id, t, y, w)?);
        }
    }
    Ok(bags)
}

/// One bag per tile inheriting the patient's response, weighted
/// `responder_weight` for responders and 1 otherwise. With `augment`, every
/// patient is padded to the largest tile count first.
pub fn make_responder_bags(
    patients: &[PatientTiles],
    augment: bool,
    responder_weight: f64,
    cache: &mut FeatureCache,
) -> Result<Vec<Bag>> {
    if let Some(p) = patients.iter().find(|p| p.tiles.is_empty()) {
        return Err(Error::NoTumorTiles(p.patient_id.clone()));
    }
    let lists: Vec<(String, Vec<TileRecord>)> = patients.iter().map(|p| (p.patient_id.clone(), p.tiles.clone())).collect();
    let lists = if augment { augment_tiles(&lists)? } else { lists };
    let mut bags = Vec::new();
    for (p, (_, tiles)) in patients.iter().zip(&lists) {
        let y = p.response.as_label();
        let w = if y == 1 { responder_weight } else { 1.0 };
        for t in tiles {
            bags.push(tile_bag(cache, &p.patient_id, t, y, w)?);
        }
    }
    Ok(bags)
}
