use crate::error::{Error, Result};

/// Grayscale image with row-major intensities clamped to `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Values outside `[0, 255]` are clamped; non-finite values are rejected.
    pub fn new(width: usize, height: usize, mut pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::invalid(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        for p in &mut pixels {
            if !p.is_finite() {
                return Err(Error::invalid("pixel values must be finite"));
            }
            *p = clamp_intensity(*p);
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copy of the `height x width` block starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, width: usize, height: usize) -> Result<Image> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::invalid("crop window exceeds image bounds"));
        }
        Image::from_fn(width, height, |r, c| self.get(top + r, left + c))
    }
}

#[inline]
pub(crate) fn clamp_intensity(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}
