use crate::error::{Error, Result};
use crate::raster::{Dihedral, Raster};
use crate::slide::{extract_tile, SlideImage, TileRecord, TileSource};

/// Transforms used for padding, in order. Each pass over a patient's
/// original tiles uses the next entry.
pub const AUG_CYCLE: [Dihedral; 7] = [
    Dihedral::Rot90,
    Dihedral::Rot180,
    Dihedral::Rot270,
    Dihedral::FlipHorizontal,
    Dihedral::FlipVertical,
    Dihedral::Transpose,
    Dihedral::AntiTranspose,
];

/// Transform of a tile record; identity for originals.
pub fn transform_of(tile: &TileRecord) -> Dihedral {
    match tile.source {
        TileSource::Original => Dihedral::Identity,
        TileSource::Augmented { transform, .. } => transform,
    }
}

/// Pads every list to the longest one. Augmented tile `j` (zero-based) of
/// a patient with `n` originals copies original `j mod n` under
/// `AUG_CYCLE[(j / n) mod 7]`.
pub fn augment_tiles(patients: &[(String, Vec<TileRecord>)]) -> Result<Vec<(String, Vec<TileRecord>)>> {
    if let Some((id, _)) = patients.iter().find(|(_, t)| t.is_empty()) {
        return Err(Error::EmptyPatient(id.clone()));
    }
    let target = patients.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    Ok(patients
        .iter()
        .map(|(id, tiles)| {
            let n = tiles.len();
            let mut out = tiles.clone();
            for j in 0..target - n {
                let mut t = tiles[j % n].clone();
                t.source = TileSource::Augmented { aug_id: j as u32, transform: AUG_CYCLE[(j / n) % AUG_CYCLE.len()] };
                out.push(t);
            }
            (id.clone(), out)
        })
        .collect())
}

/// Pixels of a tile after its augmentation transform.
pub fn tile_pixels(slide: &SlideImage, tile: &TileRecord) -> Raster {
    let raw = extract_tile(slide, tile);
    match transform_of(tile) {
        Dihedral::Identity => raw,
        t => raw.transformed(t),
    }
}
