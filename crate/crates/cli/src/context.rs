//! Loading a cohort and everything derived from it for a command.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use tilemil::annotation::{read_labels, SNAPSHOT_FILE};
use tilemil::pipeline::{apply_labels, load_slides, tile_cohort, FeatureCache, PatientTiles, PixelFeaturizer, PrecomputedFeaturizer};
use tilemil::slide::{read_cohort, slide_id_of, CohortManifest, SlideImage, TileRecord};
use tilemil::stain::{read_features, FeatureExtractor};
use tilemil::synth::TRUTH_LABELS_FILE;

use crate::config::{absolute, require_exists, RunConfig};
use crate::error::{usage, CliResult};

pub const TILES_DIR: &str = "tiles";
pub const TILES_FILE: &str = "tiles.jsonl";
pub const LABELS_DIR: &str = "labels";

pub struct Cohort {
    pub dir: PathBuf,
    pub manifest: CohortManifest,
    pub slides: Vec<SlideImage>,
    pub patients: Vec<PatientTiles>,
}

impl Cohort {
    /// Directory holding the slide PNG of `slide_id`.
    pub fn slide_dir(&self, slide_id: &str) -> Option<PathBuf> {
        self.manifest
            .patients
            .iter()
            .flat_map(|p| &p.slides)
            .find(|s| slide_id_of(s) == slide_id)
            .and_then(|s| self.dir.join(s).parent().map(Path::to_path_buf))
    }

    pub fn slide(&self, slide_id: &str) -> Option<&SlideImage> {
        self.slides.iter().find(|s| s.slide_id == slide_id)
    }
}

pub fn write_tiles(path: &Path, patients: &[PatientTiles]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in patients.iter().flat_map(|p| &p.tiles) {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tiles(path: &Path) -> CliResult<Vec<TileRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn group_tiles(manifest: &CohortManifest, tiles: Vec<TileRecord>) -> Vec<PatientTiles> {
    let mut by_slide: HashMap<String, Vec<TileRecord>> = HashMap::new();
    for t in tiles {
        by_slide.entry(t.slide_id.clone()).or_default().push(t);
    }
    manifest
        .patients
        .iter()
        .map(|p| PatientTiles {
            patient_id: p.id.clone(),
            response: p.response,
            tiles: p.slides.iter().flat_map(|s| by_slide.remove(&slide_id_of(s)).unwrap_or_default()).collect(),
        })
        .collect()
}

/// Makes every path in `cfg` absolute and fills in defaults: the tiles file
/// `<cohort>/tiles/tiles.jsonl` when present, and the first existing label
/// snapshot of `<cohort>/labels/labels.jsonl`, `<cohort>/labels.jsonl` and
/// the generator's truth labels.
pub fn resolve_paths(cfg: &mut RunConfig, want_labels: bool) -> CliResult<()> {
    let cohort = absolute(cfg.cohort()?);
    require_exists(&cohort, "cohort directory")?;
    let p = &mut cfg.paths;
    p.tiles = match p.tiles.take() {
        Some(t) => Some(absolute(&t)),
        None => Some(cohort.join(TILES_DIR).join(TILES_FILE)).filter(|t| t.exists()),
    };
    if let Some(t) = &p.tiles {
        require_exists(t, "tiles file")?;
    }
    if want_labels {
        p.labels = match p.labels.take() {
            Some(l) => Some(absolute(&l)),
            None => [cohort.join(LABELS_DIR).join(SNAPSHOT_FILE), cohort.join(SNAPSHOT_FILE), cohort.join(TRUTH_LABELS_FILE)]
                .into_iter()
                .find(|l| l.exists()),
        };
        if let Some(l) = &p.labels {
            require_exists(l, "labels file")?;
        }
    }
    for f in [&mut p.features, &mut p.models, &mut p.input] {
        if let Some(x) = f.take() {
            *f = Some(absolute(&x));
        }
    }
    if let Some(o) = p.out.take() {
        p.out = Some(absolute(&o));
    }
    p.cohort = Some(cohort);
    cfg.features.patch_size = cfg.pipeline.patch_size;
    Ok(())
}

/// Slides, tiles and (when configured) labels of the cohort in `cfg`, whose
/// paths must already be resolved.
pub fn load_cohort(cfg: &RunConfig) -> CliResult<Cohort> {
    cfg.pipeline.validate()?;
    let dir = cfg.cohort()?.to_path_buf();
    let manifest = read_cohort(&dir)?;
    let slides = load_slides(&dir, &manifest)?;
    let mut patients = match &cfg.paths.tiles {
        Some(path) => {
            let tiles = read_tiles(path)?;
            if let Some(t) = tiles.iter().find(|t| t.tile_size as usize != cfg.pipeline.tile_size) {
                return Err(usage(format!(
                    "{} holds {}px tiles but tile_size is {}",
                    path.display(),
                    t.tile_size,
                    cfg.pipeline.tile_size
                )));
            }
            group_tiles(&manifest, tiles)
        }
        None => tile_cohort(&manifest, &slides, &cfg.pipeline)?,
    };
    if let Some(l) = &cfg.paths.labels {
        apply_labels(&mut patients, &read_labels(l)?);
    }
    Ok(Cohort { dir, manifest, slides, patients })
}

/// Feature source per the config: the feature file when given, otherwise
/// stain features from the slide pixels.
pub fn feature_cache(cfg: &RunConfig, cohort: &Cohort) -> CliResult<FeatureCache> {
    match &cfg.paths.features {
        Some(path) => {
            let side = cfg.pipeline.tile_size / cfg.pipeline.patch_size;
            Ok(FeatureCache::new(Box::new(PrecomputedFeaturizer::new(read_features(path)?, side)?)))
        }
        None => {
            let fx = FeatureExtractor::new(cfg.features)?;
            Ok(FeatureCache::new(Box::new(PixelFeaturizer::new(cohort.slides.clone(), fx))))
        }
    }
}
