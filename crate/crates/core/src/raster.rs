//! Owned 8-bit RGB rasters and the dihedral group acting on them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WHITE: [u8; 3] = [255, 255, 255];

/// Row-major interleaved RGB buffer.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidSlide(format!("empty raster {width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidSlide(format!(
                "buffer length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Copies a `w`x`h` window starting at (`x0`, `y0`); parts outside the
    /// source are filled with `pad`.
    pub fn crop_padded(&self, x0: usize, y0: usize, w: usize, h: usize, pad: [u8; 3]) -> Raster {
        let mut out = Raster::filled(w, h, pad);
        let x_end = (x0 + w).min(self.width);
        let y_end = (y0 + h).min(self.height);
        if x0 >= x_end || y0 >= y_end {
            return out;
        }
        let row_len = (x_end - x0) * 3;
        for y in y0..y_end {
            let src = (y * self.width + x0) * 3;
            let dst = ((y - y0) * w) * 3;
            out.data[dst..dst + row_len].copy_from_slice(&self.data[src..src + row_len]);
        }
        out
    }

    /// Writes `src` at (`x0`, `y0`), clipping anything beyond the raster.
    pub fn paste(&mut self, src: &Raster, x0: usize, y0: usize) {
        let x_end = (x0 + src.width).min(self.width);
        let y_end = (y0 + src.height).min(self.height);
        if x0 >= x_end || y0 >= y_end {
            return;
        }
        let row_len = (x_end - x0) * 3;
        for y in y0..y_end {
            let dst = (y * self.width + x0) * 3;
            let s = ((y - y0) * src.width) * 3;
            self.data[dst..dst + row_len].copy_from_slice(&src.data[s..s + row_len]);
        }
    }

    pub fn transformed(&self, t: Dihedral) -> Raster {
        let (w, h) = t.output_dims(self.width, self.height);
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = t.source_of(x, y, self.width, self.height);
                data.extend_from_slice(&self.get(sx, sy));
            }
        }
        Raster { width: w, height: h, data }
    }

    pub fn load_png(path: &Path) -> Result<Raster> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Raster::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction");
        buf.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let enc = image::codecs::png::PngEncoder::new(&mut out);
        image::ImageEncoder::write_image(
            enc,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )?;
        Ok(out)
    }
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixels set inside `[x0, x0+w) x [y0, y0+h)`, clipped to the mask.
    pub fn count_in(&self, x0: usize, y0: usize, w: usize, h: usize) -> usize {
        let mut n = 0;
        for y in y0..(y0 + h).min(self.height) {
            let row = &self.bits[y * self.width..(y + 1) * self.width];
            n += row[x0.min(self.width)..(x0 + w).min(self.width)].iter().filter(|&&b| b).count();
        }
        n
    }

    /// Writes 0/255 grayscale.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, data)
            .expect("mask buffer matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    /// Reads a grayscale PNG; any non-zero value is set.
    pub fn load_png(path: &Path) -> Result<Mask> {
        let img = image::open(path)?.to_luma8();
        let (w, h) = img.dimensions();
        Ok(Mask { width: w as usize, height: h as usize, bits: img.into_raw().into_iter().map(|v| v > 0).collect() })
    }
}

/// ITU-R 601 luma rounded to the nearest integer.
#[inline]
pub fn luminance(rgb: [u8; 3]) -> u8 {
    let l = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    l.round().clamp(0.0, 255.0) as u8
}

/// The eight symmetries of the square.
///
/// Rotations are clockwise. `Transpose` mirrors about the main diagonal and
/// `AntiTranspose` about the anti-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipHorizontal,
    FlipVertical,
    Transpose,
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    pub fn output_dims(self, w: usize, h: usize) -> (usize, usize) {
        match self {
            Dihedral::Rot90 | Dihedral::Rot270 | Dihedral::Transpose | Dihedral::AntiTranspose => {
                (h, w)
            }
            _ => (w, h),
        }
    }

    /// Source coordinate for output pixel (`x`, `y`) when transforming a
    /// `w`x`h` input.
    #[inline]
    pub fn source_of(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        match self {
            Dihedral::Identity => (x, y),
            Dihedral::Rot90 => (y, h - 1 - x),
            Dihedral::Rot180 => (w - 1 - x, h - 1 - y),
            Dihedral::Rot270 => (w - 1 - y, x),
            Dihedral::FlipHorizontal => (w - 1 - x, y),
            Dihedral::FlipVertical => (x, h - 1 - y),
            Dihedral::Transpose => (y, x),
            Dihedral::AntiTranspose => (w - 1 - y, h - 1 - x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(w: usize, h: usize) -> Raster {
        let data = (0..w * h).flat_map(|i| [i as u8, (i >> 8) as u8, 7]).collect();
        Raster::new(w, h, data).unwrap()
    }

    #[test]
    fn rot90_moves_top_left_to_top_right() {
        let r = numbered(3, 2);
        let t = r.transformed(Dihedral::Rot90);
        assert_eq!((t.width(), t.height()), (2, 3));
        assert_eq!(t.get(1, 0), r.get(0, 0));
        assert_eq!(t.get(0, 0), r.get(0, 1));
    }

    #[test]
    fn four_quarter_turns_is_identity() {
        let r = numbered(5, 4);
        let mut t = r.clone();
        for _ in 0..4 {
            t = t.transformed(Dihedral::Rot90);
        }
        assert_eq!(t, r);
        assert_eq!(r.transformed(Dihedral::Rot90).transformed(Dihedral::Rot270), r);
    }

    #[test]
    fn reflections_are_involutions() {
        let r = numbered(4, 6);
        for t in [
            Dihedral::FlipHorizontal,
            Dihedral::FlipVertical,
            Dihedral::Transpose,
            Dihedral::AntiTranspose,
            Dihedral::Rot180,
        ] {
            assert_eq!(r.transformed(t).transformed(t), r, "{t:?}");
        }
    }

    #[test]
    fn all_transforms_distinct_on_asymmetric_square() {
        let r = numbered(4, 4);
        let outs: Vec<_> = Dihedral::ALL.iter().map(|&t| r.transformed(t)).collect();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(outs[i], outs[j]);
            }
        }
    }

    #[test]
    fn crop_pads_outside() {
        let r = Raster::filled(3, 3, [10, 10, 10]);
        let c = r.crop_padded(2, 2, 2, 2, WHITE);
        assert_eq!(c.get(0, 0), [10, 10, 10]);
        assert_eq!(c.get(1, 0), WHITE);
        assert_eq!(c.get(1, 1), WHITE);
    }

    #[test]
    fn rejects_bad_buffer() {
        assert!(Raster::new(2, 2, vec![0; 11]).is_err());
        assert!(Raster::new(0, 2, vec![]).is_err());
    }
}
