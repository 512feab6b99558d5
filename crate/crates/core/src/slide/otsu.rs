use crate::error::{Error, Result};

/// Intensity histogram over the 256 levels of an 8-bit channel.
pub type Histogram = [u64; 256];

pub fn histogram<I: IntoIterator<Item = u8>>(levels: I) -> Histogram {
    let mut h = [0u64; 256];
    for l in levels {
        h[l as usize] += 1;
    }
    h
}

/// Between-class variance for a split with `n0` pixels summing to `s0` at
/// or below the threshold and `n1`, `s1` above it.
#[inline]
fn between_class_variance(n0: u64, s0: u64, n1: u64, s1: u64) -> f64 {
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let total = (n0 + n1) as f64;
    let w0 = n0 as f64 / total;
    let w1 = n1 as f64 / total;
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = s1 as f64 / n1 as f64;
    w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
}

/// Otsu's threshold: the smallest `t` in `0..=254` maximising the
/// between-class variance, with class 0 holding levels `<= t`.
pub fn otsu_threshold(hist: &Histogram) -> Result<u8> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let n: u64 = hist.iter().sum();
    let s: u64 = hist.iter().enumerate().map(|(l, &c)| l as u64 * c).sum();

    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best = (0u8, f64::NEG_INFINITY);
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let var = between_class_variance(n0, s0, n - n0, s - s0);
        // strict comparison keeps the smallest maximiser
        if var > best.1 {
            best = (t as u8, var);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_plateau_picks_lower_edge() {
        let mut h = [0u64; 256];
        h[10] = 500;
        h[200] = 500;
        assert_eq!(otsu_threshold(&h).unwrap(), 10);
    }

    #[test]
    fn single_level_is_degenerate() {
        let mut h = [0u64; 256];
        h[128] = 1000;
        assert!(matches!(otsu_threshold(&h), Err(Error::DegenerateHistogram)));
        assert!(matches!(otsu_threshold(&[0; 256]), Err(Error::DegenerateHistogram)));
    }

    #[test]
    fn extremes_split_at_zero() {
        let mut h = [0u64; 256];
        h[0] = 3;
        h[255] = 9;
        assert_eq!(otsu_threshold(&h).unwrap(), 0);
    }

    #[test]
    fn bimodal_lands_between_modes() {
        let mut h = [0u64; 256];
        for l in 40..60 {
            h[l] = 100;
        }
        for l in 180..220 {
            h[l] = 80;
        }
        let t = otsu_threshold(&h).unwrap();
        assert!((59..180).contains(&t), "{t}");
    }
}
