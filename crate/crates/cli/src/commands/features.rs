use std::fs::File;
use std::io::{BufRead, BufReader};

use serde::Deserialize;
use tilemil::stain::{write_features, FeatureMatrix, RowIndex};

use super::{prepare, FEATURES_FILE};
use crate::args::{ExtractArgs, ImportArgs};
use crate::config::{absolute, require_exists};
use crate::context::{feature_cache, load_cohort};
use crate::error::{usage, CliResult};

pub fn extract(args: &ExtractArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.tiling.apply(&mut cfg);
    cfg.paths.features = None;
    let out = prepare(&mut cfg, "features extract", false)?;
    let cohort = load_cohort(&cfg)?;
    let mut cache = feature_cache(&cfg, &cohort)?;
    let side = (cfg.pipeline.tile_size / cfg.pipeline.patch_size) as u32;
    let mut values = Vec::new();
    let mut index = Vec::new();
    for t in cohort.patients.iter().flat_map(|p| &p.tiles) {
        let f = cache.get(t)?;
        for (k, row) in f.rows().into_iter().enumerate() {
            values.extend(row.iter().map(|&v| v as f32));
            let k = k as u32;
            index.push(RowIndex {
                slide_id: t.slide_id.clone(),
                grid_x: t.grid_x,
                grid_y: t.grid_y,
                patch_x: k % side,
                patch_y: k / side,
            });
        }
    }
    let m = FeatureMatrix::new(cache.dim(), values, index)?;
    cfg.write(&out)?;
    write_features(&m, &out.join(FEATURES_FILE))?;
    println!("{} x {} features written to {}", m.n, m.d, out.join(FEATURES_FILE).display());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportRow {
    slide_id: String,
    grid_x: u32,
    grid_y: u32,
    patch_x: u32,
    patch_y: u32,
    values: Vec<f32>,
}

pub fn import(args: &ImportArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    if let Some(i) = &args.input {
        cfg.paths.input = Some(i.clone());
    }
    cfg.command = "features import".into();
    let input = absolute(cfg.paths.input.as_deref().ok_or_else(|| usage("missing --input"))?);
    require_exists(&input, "input")?;
    let out = absolute(cfg.out()?);
    cfg.paths.input = Some(input.clone());
    cfg.paths.out = Some(out.clone());

    let mut d = None;
    let mut values = Vec::new();
    let mut index = Vec::new();
    for (i, line) in BufReader::new(File::open(&input)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ImportRow = serde_json::from_str(&line)?;
        if *d.get_or_insert(r.values.len()) != r.values.len() {
            return Err(tilemil::Error::DimensionMismatch(format!("line {} has {} values", i + 1, r.values.len())).into());
        }
        values.extend(r.values);
        index.push(RowIndex { slide_id: r.slide_id, grid_x: r.grid_x, grid_y: r.grid_y, patch_x: r.patch_x, patch_y: r.patch_y });
    }
    let m = FeatureMatrix::new(d.unwrap_or(0), values, index)?;
    cfg.write(&out)?;
    write_features(&m, &out.join(FEATURES_FILE))?;
    println!("{} x {} features written to {}", m.n, m.d, out.join(FEATURES_FILE).display());
    Ok(())
}
