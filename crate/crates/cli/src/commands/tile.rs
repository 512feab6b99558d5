use tilemil::pipeline::{load_slides, tile_cohort};
use tilemil::slide::read_cohort;

use crate::args::TileArgs;
use crate::config::{absolute, require_exists};
use crate::context::{write_tiles, TILES_DIR, TILES_FILE};
use crate::error::CliResult;

pub fn run(args: &TileArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.tiling.apply(&mut cfg);
    cfg.command = "tile".into();
    let dir = absolute(cfg.cohort()?);
    require_exists(&dir, "cohort directory")?;
    let out = cfg.paths.out.as_deref().map(absolute).unwrap_or_else(|| dir.join(TILES_DIR));
    cfg.paths.cohort = Some(dir.clone());
    cfg.paths.out = Some(out.clone());
    cfg.paths.tiles = Some(out.join(TILES_FILE));
    cfg.pipeline.validate()?;

    let manifest = read_cohort(&dir)?;
    let slides = load_slides(&dir, &manifest)?;
    let patients = tile_cohort(&manifest, &slides, &cfg.pipeline)?;
    cfg.write(&out)?;
    write_tiles(&out.join(TILES_FILE), &patients)?;
    let n: usize = patients.iter().map(|p| p.tiles.len()).sum();
    println!("{n} tiles from {} slides written to {}", slides.len(), out.join(TILES_FILE).display());
    Ok(())
}
