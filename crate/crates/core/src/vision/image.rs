use std::fmt;
use std::io::Cursor;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::VisionError;

/// Axis-aligned pixel rectangle. Serialized as `[x, y, w, h]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for Rect {
    fn from(v: [u32; 4]) -> Self {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [u32; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

impl fmt::Debug for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rect({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn is_degenerate(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.right() && y < self.bottom()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    /// Center pixel, rounding toward the top-left.
    pub fn center(&self) -> (u32, u32) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        !self.is_degenerate()
            && u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }

    /// Translates by a signed offset; `None` if the result would leave the
    /// non-negative quadrant.
    pub fn translated(&self, dx: i64, dy: i64) -> Option<Rect> {
        let x = i64::from(self.x) + dx;
        let y = i64::from(self.y) + dy;
        if x < 0 || y < 0 || x > i64::from(u32::MAX) || y > i64::from(u32::MAX) {
            return None;
        }
        Some(Rect::new(x as u32, y as u32, self.w, self.h))
    }
}

/// Row-major RGB8 image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Image({}x{}, {})", self.width, self.height, &self.digest()[..12])
    }
}

impl Image {
    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::EmptyImage);
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(VisionError::BufferLength { expected, actual: pixels.len() });
        }
        Ok(Image { width, height, pixels })
    }

    /// Image of the given size filled with one color. Panics on zero size.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Image { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub(crate) fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Bytes of row `y` restricted to columns `[x, x + w)`.
    pub fn row(&self, x: u32, y: u32, w: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.pixels[o..o + w as usize * 3]
    }

    pub(crate) fn row_mut(&mut self, x: u32, y: u32, w: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        &mut self.pixels[o..o + w as usize * 3]
    }

    pub fn check_rect(&self, rect: &Rect) -> Result<(), VisionError> {
        if rect.fits_in(self.width, self.height) {
            Ok(())
        } else {
            Err(VisionError::OutOfBounds { rect: *rect, width: self.width, height: self.height })
        }
    }

    pub fn crop(&self, rect: &Rect) -> Result<Image, VisionError> {
        self.check_rect(rect)?;
        let mut pixels = Vec::with_capacity(rect.area() as usize * 3);
        for y in rect.y..rect.bottom() {
            pixels.extend_from_slice(self.row(rect.x, y, rect.w));
        }
        Ok(Image { width: rect.w, height: rect.h, pixels })
    }

    /// Copies `src` with its top-left at `(x, y)`; the placement must fit.
    pub fn paste(&mut self, src: &Image, x: u32, y: u32) -> Result<(), VisionError> {
        self.check_rect(&Rect::new(x, y, src.width, src.height))?;
        for row in 0..src.height {
            self.row_mut(x, y + row, src.width).copy_from_slice(src.row(0, row, src.width));
        }
        Ok(())
    }

    pub fn fill_rect(&mut self, rect: &Rect, rgb: [u8; 3]) {
        let clipped_w = rect.w.min(self.width.saturating_sub(rect.x));
        let clipped_h = rect.h.min(self.height.saturating_sub(rect.y));
        for y in rect.y..rect.y + clipped_h {
            for px in self.row_mut(rect.x, y, clipped_w).chunks_exact_mut(3) {
                px.copy_from_slice(&rgb);
            }
        }
    }

    /// Hex SHA-256 of dimensions and pixel data.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        hex::encode(h.finalize())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, VisionError> {
        let buf = image::RgbImage::from_raw(self.width, self.height, self.pixels.clone()).ok_or(
            VisionError::BufferLength {
                expected: self.width as usize * self.height as usize * 3,
                actual: self.pixels.len(),
            },
        )?;
        let mut out = Vec::new();
        buf.write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png)
            .map_err(|e| VisionError::Codec(e.to_string()))?;
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, VisionError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| VisionError::Codec(e.to_string()))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Image::from_raw(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), VisionError> {
        std::fs::write(path, self.to_png()?).map_err(|e| VisionError::Io(e.to_string()))
    }

    pub fn load_png(path: &Path) -> Result<Self, VisionError> {
        let bytes = std::fs::read(path).map_err(|e| VisionError::Io(format!("{}: {e}", path.display())))?;
        Image::from_png(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_and_paste_round_trip() {
        let mut img = Image::filled(6, 4, [10, 20, 30]);
        img.set_pixel(2, 1, [255, 0, 0]);
        let crop = img.crop(&Rect::new(1, 1, 3, 2)).unwrap();
        assert_eq!(crop.pixel(1, 0), [255, 0, 0]);
        let mut other = Image::filled(6, 4, [0, 0, 0]);
        other.paste(&crop, 1, 1).unwrap();
        assert_eq!(other.pixel(2, 1), [255, 0, 0]);
        assert!(img.crop(&Rect::new(4, 0, 3, 1)).is_err());
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(Image::from_raw(2, 2, vec![0; 11]), Err(VisionError::BufferLength { .. })));
        assert!(matches!(Image::from_raw(0, 2, vec![]), Err(VisionError::EmptyImage)));
    }

    #[test]
    fn png_round_trip_is_lossless() {
        let mut img = Image::filled(5, 3, [1, 2, 3]);
        img.set_pixel(4, 2, [200, 100, 50]);
        let back = Image::from_png(&img.to_png().unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rect_serializes_as_array() {
        let r = Rect::new(1, 2, 3, 4);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[1,2,3,4]");
        assert!(r.contains(1, 2) && r.contains(3, 5) && !r.contains(4, 2));
    }
}
