//! Fidelity metrics between images of equal size.

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR values are printed capped at this many dB; identical images have
/// infinite PSNR.
pub const PSNR_TEXT_CAP: f64 = 99.0;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum: f64 = a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.pixels().len() as f64)
}

/// `10 log10(255^2 / mse)`; `f64::INFINITY` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / m).log10())
}

/// Two-decimal text form, with infinity shown as the cap.
pub fn format_psnr(db: f64) -> String {
    format!("{:.2}", db.min(PSNR_TEXT_CAP))
}
