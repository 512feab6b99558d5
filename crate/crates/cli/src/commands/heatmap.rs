use tilemil::eval::write_attention_heatmap;
use tilemil::slide::extract_tile;

use super::predict::load_pipeline;
use super::prepare;
use crate::args::HeatmapArgs;
use crate::context::{feature_cache, load_cohort};
use crate::error::{usage, CliResult};

fn parse_tile(s: &str) -> CliResult<(String, u32, u32)> {
    let bad = || usage(format!("--tile expects slide/x/y, got `{s}`"));
    let mut parts = s.rsplitn(3, '/');
    let y = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let x = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let slide = parts.next().filter(|v| !v.is_empty()).ok_or_else(bad)?;
    Ok((slide.to_string(), x, y))
}

/// Responder-model attention over one tile's sub-patches.
pub fn run(args: &HeatmapArgs) -> CliResult<()> {
    let (slide_id, x, y) = parse_tile(&args.tile)?;
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.inputs.apply(&mut cfg);
    args.pipeline.apply(&mut cfg);
    if let Some(m) = &args.models {
        cfg.paths.models = Some(m.clone());
    }
    let out = prepare(&mut cfg, "heatmap", false)?;
    let models = cfg.paths.models.clone().ok_or_else(|| usage("missing --models"))?;
    let fitted = load_pipeline(&models, cfg.pipeline.mode)?;
    let cohort = load_cohort(&cfg)?;
    let tile = cohort
        .patients
        .iter()
        .flat_map(|p| &p.tiles)
        .find(|t| t.slide_id == slide_id && t.grid_x == x && t.grid_y == y)
        .ok_or_else(|| tilemil::Error::UnknownTile { slide: slide_id.clone(), x, y })?;
    let slide = cohort.slide(&slide_id).expect("tiles come from cohort slides");
    let mut cache = feature_cache(&cfg, &cohort)?;
    let fwd = fitted.responder.forward(&cache.get(tile)?)?;
    let logits = fwd.instance_logits(&fitted.responder.params);
    cfg.write(&out)?;
    let path = out.join(format!("heatmap_{slide_id}_{x}_{y}.png"));
    write_attention_heatmap(
        &extract_tile(slide, tile),
        cfg.pipeline.patch_size,
        fwd.attention().as_slice().expect("contiguous"),
        logits.as_slice().expect("contiguous"),
        &path,
    )?;
    println!("responder probability {:.3}, heatmap at {}", fwd.probability(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tile_address() {
        assert_eq!(parse_tile("P01_S1/3/4").unwrap(), ("P01_S1".into(), 3, 4));
        assert!(parse_tile("3/4").is_err());
        assert!(parse_tile("s/x/4").is_err());
    }
}
