use serde::{Deserialize, Serialize};

/// Rotated ellipse in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    /// Semi-axis along the rotated x direction.
    pub a: f64,
    pub b: f64,
    /// Rotation in radians.
    pub theta: f64,
}

impl Ellipse {
    /// Coordinates of (`x`, `y`) in the ellipse frame, scaled so the boundary
    /// is the unit circle.
    #[inline]
    pub fn normalized(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a, v / self.b)
    }

    /// Normalized radius; 1 on the boundary.
    #[inline]
    pub fn rho(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.normalized(x, y);
        (u * u + v * v).sqrt()
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (u, v) = self.normalized(x, y);
        u * u + v * v <= 1.0
    }

    /// Same ellipse with both semi-axes moved by `delta` pixels.
    pub fn offset(&self, delta: f64) -> Ellipse {
        Ellipse { a: self.a + delta, b: self.b + delta, ..*self }
    }

    /// Pixel point for normalized frame coordinates (`u`, `v`).
    pub fn to_pixel(&self, u: f64, v: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (du, dv) = (u * self.a, v * self.b);
        (self.cx + c * du - s * dv, self.cy + s * du + c * dv)
    }

    pub fn max_radius(&self) -> f64 {
        self.a.max(self.b)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.a * self.b
    }

    /// Integer pixel bounds `[x0, x1) x [y0, y1)` clipped to a `w`x`h` image.
    pub fn pixel_bounds(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let r = self.max_radius().ceil() + 1.0;
        let clip = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as usize;
        (clip(self.cx - r, w), clip(self.cx + r + 1.0, w), clip(self.cy - r, h), clip(self.cy + r + 1.0, h))
    }
}
