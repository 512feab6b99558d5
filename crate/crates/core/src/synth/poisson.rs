//! Bridson Poisson-disk sampling on the integer lattice.

use rand::Rng;

const CANDIDATES: usize = 30;

/// Integer points inside `[x0, x1) x [y0, y1)` accepted by `inside`, no two
/// closer than `min_dist`.
///
/// Restarts from a fresh random seed point whenever the active list drains,
/// so disconnected regions are covered too; `reseeds` bounds those attempts.
pub fn sample(
    rng: &mut impl Rng,
    bounds: (usize, usize, usize, usize),
    min_dist: f64,
    reseeds: usize,
    inside: impl Fn(i64, i64) -> bool,
) -> Vec<(i64, i64)> {
    let (x0, x1, y0, y1) = bounds;
    if x0 >= x1 || y0 >= y1 {
        return Vec::new();
    }
    let cell = min_dist / std::f64::consts::SQRT_2;
    let gw = (((x1 - x0) as f64) / cell).ceil() as usize + 1;
    let gh = (((y1 - y0) as f64) / cell).ceil() as usize + 1;
    let mut grid: Vec<Option<usize>> = vec![None; gw * gh];
    let mut points: Vec<(i64, i64)> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let d2 = min_dist * min_dist;

    let cell_of = |p: (i64, i64)| {
        let gx = ((p.0 - x0 as i64) as f64 / cell) as usize;
        let gy = ((p.1 - y0 as i64) as f64 / cell) as usize;
        (gx, gy)
    };
    let in_bounds = |p: (i64, i64)| p.0 >= x0 as i64 && p.0 < x1 as i64 && p.1 >= y0 as i64 && p.1 < y1 as i64;

    let fits = |p: (i64, i64), grid: &[Option<usize>], points: &[(i64, i64)]| {
        if !in_bounds(p) || !inside(p.0, p.1) {
            return false;
        }
        let (gx, gy) = cell_of(p);
        for ny in gy.saturating_sub(2)..(gy + 3).min(gh) {
            for nx in gx.saturating_sub(2)..(gx + 3).min(gw) {
                if let Some(i) = grid[ny * gw + nx] {
                    let q = points[i];
                    let dx = (q.0 - p.0) as f64;
                    let dy = (q.1 - p.1) as f64;
                    if dx * dx + dy * dy < d2 {
                        return false;
                    }
                }
            }
        }
        true
    };

    for _ in 0..reseeds {
        let p = (rng.random_range(x0..x1) as i64, rng.random_range(y0..y1) as i64);
        if !fits(p, &grid, &points) {
            continue;
        }
        let (gx, gy) = cell_of(p);
        grid[gy * gw + gx] = Some(points.len());
        active.push(points.len());
        points.push(p);

        while !active.is_empty() {
            let slot = rng.random_range(0..active.len());
            let base = points[active[slot]];
            let mut placed = false;
            for _ in 0..CANDIDATES {
                let r = rng.random_range(min_dist..2.0 * min_dist);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let q = ((base.0 as f64 + r * a.cos()).round() as i64, (base.1 as f64 + r * a.sin()).round() as i64);
                if fits(q, &grid, &points) {
                    let (qx, qy) = cell_of(q);
                    grid[qy * gw + qx] = Some(points.len());
                    active.push(points.len());
                    points.push(q);
                    placed = true;
                    break;
                }
            }
            if !placed {
                active.swap_remove(slot);
            }
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_min_distance_and_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inside = |x: i64, y: i64| (x - 50).pow(2) + (y - 50).pow(2) <= 40 * 40;
        let pts = sample(&mut rng, (0, 100, 0, 100), 9.0, 5, inside);
        assert!(pts.len() > 40, "{}", pts.len());
        for (i, p) in pts.iter().enumerate() {
            assert!(inside(p.0, p.1));
            for q in &pts[i + 1..] {
                let d2 = (p.0 - q.0).pow(2) + (p.1 - q.1).pow(2);
                assert!(d2 >= 81, "{p:?} {q:?}");
            }
        }
    }

    #[test]
    fn covers_disconnected_regions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inside = |x: i64, _y: i64| !(40..60).contains(&x);
        let pts = sample(&mut rng, (0, 100, 0, 30), 8.0, 50, inside);
        assert!(pts.iter().any(|p| p.0 < 40));
        assert!(pts.iter().any(|p| p.0 >= 60));
    }
}
