//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilemil::Raster;

/// `k` instances of width `d`, uniform in [-1, 1).
pub fn random_instances(k: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((k, d), |_| rng.random_range(-1.0..1.0))
}

/// Brownish speckle on a light background, roughly IHC-coloured.
pub fn random_tile(size: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..size * size)
        .flat_map(|_| {
            let base: u8 = rng.random_range(120..240);
            [base, base.saturating_sub(rng.random_range(10..60)), base.saturating_sub(rng.random_range(20..90))]
        })
        .collect();
    Raster::new(size, size, data).expect("size matches")
}

/// Scores and labels with a mild signal.
pub fn random_scores(n: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 4 == 0)).collect();
    let scores = labels.iter().map(|&l| rng.random::<f64>() + 0.3 * l as f64).collect();
    (scores, labels)
}
