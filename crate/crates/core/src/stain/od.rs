use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

pub type Vec3 = [f64; 3];

/// Beer-Lambert optical density of one pixel, per channel.
#[inline]
pub fn rgb_to_od(rgb: [u8; 3]) -> Vec3 {
    rgb.map(|c| -((c.max(1) as f64) / 255.0).log10())
}

/// Inverse of [`rgb_to_od`] before quantisation.
#[inline]
pub fn od_to_rgb(od: Vec3) -> [u8; 3] {
    od.map(|d| (255.0 * 10f64.powf(-d)).round().clamp(0.0, 255.0) as u8)
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalized(v: Vec3) -> Vec3 {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

type Mat3 = [[f64; 3]; 3];

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse(m: &Mat3) -> Option<Mat3> {
    let d = det(m);
    if d.abs() < 1e-12 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / d;
        }
    }
    Some(inv)
}

fn frobenius(m: &Mat3) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Unit optical-density directions of hematoxylin, DAB and a residual
/// channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StainVectors {
    pub hematoxylin: Vec3,
    pub dab: Vec3,
    pub residual: Vec3,
}

impl Default for StainVectors {
    fn default() -> Self {
        Self::from_directions([0.650, 0.704, 0.286], [0.269, 0.568, 0.778], None)
    }
}

impl StainVectors {
    /// Normalises the inputs; the residual defaults to the normalised cross
    /// product of the two stains.
    pub fn from_directions(h: Vec3, dab: Vec3, residual: Option<Vec3>) -> Self {
        let hematoxylin = normalized(h);
        let dab = normalized(dab);
        let residual = normalized(residual.unwrap_or_else(|| cross(hematoxylin, dab)));
        Self { hematoxylin, dab, residual }
    }

    /// Columns are the stain vectors: `od = M * concentrations`.
    fn matrix(&self) -> Mat3 {
        let (h, d, r) = (self.hematoxylin, self.dab, self.residual);
        [[h[0], d[0], r[0]], [h[1], d[1], r[1]], [h[2], d[2], r[2]]]
    }

    /// Frobenius condition number of the stain matrix.
    pub fn condition_number(&self) -> f64 {
        let m = self.matrix();
        match inverse(&m) {
            Some(inv) => frobenius(&m) * frobenius(&inv),
            None => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.hematoxylin, self.dab, self.residual] {
            if (norm(v) - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!("stain vector {v:?} is not unit length")));
            }
        }
        let k = self.condition_number();
        if !(k < 100.0) {
            return Err(Error::SingularStainMatrix(k));
        }
        Ok(())
    }

    /// Mixes stain concentrations back into optical density.
    #[inline]
    pub fn mix(&self, c: Vec3) -> Vec3 {
        let (h, d, r) = (self.hematoxylin, self.dab, self.residual);
        [0, 1, 2].map(|i| h[i] * c[0] + d[i] * c[1] + r[i] * c[2])
    }

    pub fn unmixer(&self) -> Result<Unmixer> {
        self.validate()?;
        let inv = inverse(&self.matrix()).ok_or(Error::SingularStainMatrix(f64::INFINITY))?;
        Ok(Unmixer { inv })
    }
}

/// Precomputed inverse stain matrix.
#[derive(Debug, Clone, Copy)]
pub struct Unmixer {
    inv: Mat3,
}

impl Unmixer {
    #[inline]
    pub fn unmix(&self, od: Vec3) -> Vec3 {
        let m = &self.inv;
        [0, 1, 2].map(|r| m[r][0] * od[0] + m[r][1] * od[1] + m[r][2] * od[2])
    }
}

/// Per-pixel stain concentrations of a raster.
#[derive(Debug, Clone, PartialEq)]
pub struct StainPlanes {
    pub width: usize,
    pub height: usize,
    pub hematoxylin: Vec<f64>,
    pub dab: Vec<f64>,
    pub residual: Vec<f64>,
    /// Number of negative concentrations produced (they are kept, not clipped).
    pub negatives: usize,
}

pub fn deconvolve_hdab(patch: &Raster, vectors: &StainVectors) -> Result<StainPlanes> {
    let unmixer = vectors.unmixer()?;
    let n = patch.width() * patch.height();
    let mut planes = StainPlanes {
        width: patch.width(),
        height: patch.height(),
        hematoxylin: Vec::with_capacity(n),
        dab: Vec::with_capacity(n),
        residual: Vec::with_capacity(n),
        negatives: 0,
    };
    for px in patch.pixels() {
        let c = unmixer.unmix(rgb_to_od(px));
        planes.negatives += c.iter().filter(|&&v| v < 0.0).count();
        planes.hematoxylin.push(c[0]);
        planes.dab.push(c[1]);
        planes.residual.push(c[2]);
    }
    Ok(planes)
}
