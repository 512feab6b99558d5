use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::Ellipse;
use super::poisson;
use super::truth::{tile_truth, Cell, GroundTruth, Pattern};
use super::{PatientSpec, SynthConfig};
use crate::raster::{Mask, Raster};
use crate::slide::SlideImage;
use crate::stain::{od_to_rgb, StainVectors};

pub const TUMOR_CELL_RADIUS: u32 = 3;
pub const STROMAL_CELL_RADIUS: u32 = 2;
const TUMOR_CELL_SPACING: f64 = (2 * TUMOR_CELL_RADIUS + 3) as f64;
const STROMAL_CELL_SPACING: f64 = 14.0;
const BACKGROUND: u8 = 240;
const NOISE: i16 = 5;

/// Stain concentrations (H, DAB, residual) of each rendered structure.
const STROMA_OD: [f64; 3] = [0.3, 0.0, 0.0];
const NEST_MATRIX_OD: [f64; 3] = [0.5, 0.0, 0.0];
const NEGATIVE_NUCLEUS_OD: [f64; 3] = [1.0, 0.0, 0.0];
const POSITIVE_NUCLEUS_OD: [f64; 3] = [0.1, 0.8, 0.0];
const STROMAL_NUCLEUS_OD: [f64; 3] = [0.6, 0.0, 0.0];

/// Everything produced for one synthetic slide.
#[derive(Debug, Clone)]
pub struct GeneratedSlide {
    pub slide: SlideImage,
    pub truth: GroundTruth,
    pub tissue: Mask,
    pub tumor: Mask,
}

fn tissue_regions(rng: &mut impl Rng, size: usize, target_area: f64) -> Vec<Ellipse> {
    let k = rng.random_range(2..=5);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let s = size as f64;
    weights
        .iter()
        .map(|w| {
            let area = target_area * w / total;
            let q = rng.random_range(0.55..1.0);
            let a = (area / (std::f64::consts::PI * q)).sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let margin = (0.8 * a).min(s / 2.0);
            let cx = if margin < s - margin { rng.random_range(margin..s - margin) } else { s / 2.0 };
            let cy = if margin < s - margin { rng.random_range(margin..s - margin) } else { s / 2.0 };
            Ellipse { cx, cy, a, b: q * a, theta }
        })
        .collect()
}

/// Nest sub-ellipses share the parent's orientation. In the parent frame
/// the centre offset plus the larger semi-axis stays below 0.95, so every
/// nest is contained in its parent.
fn nest_in(rng: &mut impl Rng, parent: &Ellipse) -> Ellipse {
    let ra = rng.random_range(0.2..0.5);
    let rb = ra * rng.random_range(0.6..1.0);
    let r = (0.95 - ra) * rng.random::<f64>().sqrt();
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let (cx, cy) = parent.to_pixel(r * phi.cos(), r * phi.sin());
    Ellipse { cx, cy, a: ra * parent.a, b: rb * parent.b, theta: parent.theta }
}

fn any_pixel(e: &Ellipse, size: usize, mut f: impl FnMut(usize, usize) -> bool) -> bool {
    let (x0, x1, y0, y1) = e.pixel_bounds(size, size);
    (y0..y1).any(|y| (x0..x1).any(|x| e.contains(x as f64, y as f64) && f(x, y)))
}

/// Places disjoint nests until each region reaches a drawn tumor share of
/// its area or the attempts run out; nests keep a gap of one cell spacing.
fn nests(rng: &mut impl Rng, regions: &[Ellipse], size: usize) -> Vec<Ellipse> {
    let s = size as f64;
    let min_axis = 2.0 * TUMOR_CELL_SPACING;
    let mut occupied = Mask::new(size, size);
    let mut out: Vec<Ellipse> = Vec::new();
    for parent in regions {
        let share = rng.random_range(0.3..0.6);
        let mut area = 0.0;
        for _ in 0..80 {
            if area >= share * parent.area() {
                break;
            }
            let n = nest_in(rng, parent);
            if n.a.min(n.b) < min_axis || !(0.0..s).contains(&n.cx) || !(0.0..s).contains(&n.cy) {
                continue;
            }
            if any_pixel(&n.offset(TUMOR_CELL_SPACING), size, |x, y| occupied.get(x, y)) {
                continue;
            }
            any_pixel(&n, size, |x, y| {
                occupied.set(x, y, true);
                false
            });
            area += n.area();
            out.push(n);
        }
    }
    if out.is_empty() {
        let largest = regions.iter().max_by(|a, b| a.area().total_cmp(&b.area())).expect("at least two regions");
        out.push(Ellipse { a: 0.4 * largest.a, b: 0.4 * largest.b, ..*largest });
    }
    out
}

/// Marks `round(tps * n)` tumor cells positive: the outermost cells by
/// nest-normalized radius for the reactive pattern, a uniform random subset
/// for the constitutive one.
pub fn assign_positive(cells: &mut [Cell], nests: &[Ellipse], pattern: Pattern, tps: f64, rng: &mut impl Rng) {
    let tumor: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].is_tumor).collect();
    let n_pos = ((tps.clamp(0.0, 1.0) * tumor.len() as f64) + 0.5).floor() as usize;
    let n_pos = n_pos.min(tumor.len());
    for &i in &tumor {
        cells[i].is_positive = false;
    }
    match pattern {
        Pattern::Reactive => {
            let rho = |c: &Cell| c.nest.map_or(0.0, |k| nests[k].rho(c.x as f64, c.y as f64));
            let mut order = tumor.clone();
            order.sort_by(|&i, &j| rho(&cells[j]).total_cmp(&rho(&cells[i])).then(i.cmp(&j)));
            for &i in &order[..n_pos] {
                cells[i].is_positive = true;
            }
        }
        Pattern::Constitutive => {
            for k in index::sample(rng, tumor.len(), n_pos) {
                cells[tumor[k]].is_positive = true;
            }
        }
    }
}

fn stamp(buf: &mut Raster, c: &Cell, rgb: [u8; 3]) {
    let r = c.radius as i64;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let (x, y) = (c.x + dx, c.y + dy);
            if x >= 0 && y >= 0 && (x as usize) < buf.width() && (y as usize) < buf.height() {
                buf.set(x as usize, y as usize, rgb);
            }
        }
    }
}

pub fn generate_slide(spec: &PatientSpec, cfg: &SynthConfig) -> GeneratedSlide {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let size = cfg.slide_size;
    let stains = StainVectors::default();
    let target_area = (spec.target_tiles * cfg.tile_size * cfg.tile_size) as f64;

    let regions = tissue_regions(&mut rng, size, target_area);
    let nests = nests(&mut rng, &regions, size);

    let mut tissue = Mask::new(size, size);
    let mut tumor = Mask::new(size, size);
    for e in &regions {
        let (x0, x1, y0, y1) = e.pixel_bounds(size, size);
        for y in y0..y1 {
            for x in x0..x1 {
                if e.contains(x as f64, y as f64) {
                    tissue.set(x, y, true);
                }
            }
        }
    }
    for e in &nests {
        let (x0, x1, y0, y1) = e.pixel_bounds(size, size);
        for y in y0..y1 {
            for x in x0..x1 {
                if e.contains(x as f64, y as f64) && tissue.get(x, y) {
                    tumor.set(x, y, true);
                }
            }
        }
    }

    let r_t = TUMOR_CELL_RADIUS as i64;
    let mut cells = Vec::new();
    for (k, nest) in nests.iter().enumerate() {
        let core = nest.offset(-(r_t as f64 + 1.0));
        let bounds = nest.pixel_bounds(size, size);
        let lim = size as i64 - r_t;
        let fits = |x: i64, y: i64| x >= r_t && y >= r_t && x < lim && y < lim && core.contains(x as f64, y as f64);
        let mut pts = poisson::sample(&mut rng, bounds, TUMOR_CELL_SPACING, 50, fits);
        let centre = (nest.cx.round() as i64, nest.cy.round() as i64);
        if pts.is_empty() && fits(centre.0, centre.1) {
            pts.push(centre);
        }
        cells.extend(pts.into_iter().map(|(x, y)| Cell {
            x,
            y,
            radius: TUMOR_CELL_RADIUS,
            is_tumor: true,
            is_positive: false,
            nest: Some(k),
        }));
    }
    assign_positive(&mut cells, &nests, spec.pattern, spec.tps, &mut rng);

    let r_s = STROMAL_CELL_RADIUS as f64;
    let shrunk: Vec<Ellipse> = regions.iter().map(|e| e.offset(-(r_s + 1.0))).collect();
    let grown: Vec<Ellipse> = nests.iter().map(|e| e.offset(r_s + 2.0)).collect();
    let stroma = poisson::sample(&mut rng, (0, size, 0, size), STROMAL_CELL_SPACING, 200, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        shrunk.iter().any(|e| e.contains(fx, fy)) && !grown.iter().any(|e| e.contains(fx, fy))
    });
    cells.extend(stroma.into_iter().map(|(x, y)| Cell {
        x,
        y,
        radius: STROMAL_CELL_RADIUS,
        is_tumor: false,
        is_positive: false,
        nest: None,
    }));

    let colour = |c: [f64; 3]| od_to_rgb(stains.mix(c));
    let (stroma_rgb, matrix_rgb) = (colour(STROMA_OD), colour(NEST_MATRIX_OD));
    let mut raster = Raster::filled(size, size, [BACKGROUND; 3]);
    for y in 0..size {
        for x in 0..size {
            if tumor.get(x, y) {
                raster.set(x, y, matrix_rgb);
            } else if tissue.get(x, y) {
                raster.set(x, y, stroma_rgb);
            }
        }
    }
    let (neg, pos, strom) = (colour(NEGATIVE_NUCLEUS_OD), colour(POSITIVE_NUCLEUS_OD), colour(STROMAL_NUCLEUS_OD));
    for c in &cells {
        let rgb = match (c.is_tumor, c.is_positive) {
            (true, true) => pos,
            (true, false) => neg,
            _ => strom,
        };
        stamp(&mut raster, c, rgb);
    }
    for v in raster.data_mut() {
        *v = (*v as i16 + rng.random_range(-NOISE..=NOISE)).clamp(0, 255) as u8;
    }

    let true_tps = GroundTruth::tps_from_cells(&cells).unwrap_or(0.0);
    let tiles = tile_truth(&tissue, &tumor, cfg.tile_size, cfg.tumor_tile_threshold);
    let truth = GroundTruth {
        version: 1,
        slide_id: spec.slide_id.clone(),
        pattern: spec.pattern,
        true_tps,
        tile_size: cfg.tile_size as u32,
        tumor_tile_threshold: cfg.tumor_tile_threshold,
        tissue_regions: regions,
        nests,
        cells,
        tiles,
    };
    GeneratedSlide { slide: SlideImage::new(spec.slide_id.clone(), raster), truth, tissue, tumor }
}
