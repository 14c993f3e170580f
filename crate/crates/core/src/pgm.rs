//! 8-bit PGM reading and writing (binary P5 and ASCII P2).

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// Binary
    P5,
    /// ASCII
    P2,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.data.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| Error::parse(start, format!("{what} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.data.get(start) {
                None => Error::parse(start, format!("unexpected end of data, expected {what}")),
                Some(_) => Error::parse(start, format!("expected {what}")),
            });
        }
        if let Some(&b) = self.data.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(Error::parse(self.pos, format!("unexpected byte 0x{b:02x} after {what}")));
            }
        }
        Ok(value)
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let format = match bytes.get(..2) {
        Some(b"P5") => PgmFormat::P5,
        Some(b"P2") => PgmFormat::P2,
        _ => return Err(Error::parse(0, "missing P5/P2 magic number")),
    };
    let mut cur = Cursor { data: bytes, pos: 2 };
    match cur.data.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(Error::parse(2, "expected whitespace after magic number")),
    }
    let width_at = cur.pos;
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(width_at, format!("zero image dimension {width}x{height}")));
    }
    let maxval_at = cur.pos;
    let maxval = cur.read_uint("maxval")?;
    if maxval == 0 {
        return Err(Error::parse(maxval_at, "maxval must be positive"));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} exceeds 255")));
    }
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .ok_or_else(|| Error::parse(width_at, "image dimensions overflow"))?;

    let raw: Vec<u64> = match format {
        PgmFormat::P5 => {
            // exactly one whitespace byte separates the header from the raster
            let start = cur.pos + 1;
            let end = start
                .checked_add(count)
                .filter(|e| *e <= bytes.len())
                .ok_or_else(|| {
                    Error::parse(
                        bytes.len(),
                        format!("truncated raster: need {count} bytes, found {}", bytes.len().saturating_sub(start)),
                    )
                })?;
            bytes[start..end].iter().map(|b| u64::from(*b)).collect()
        }
        PgmFormat::P2 => {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let at = cur.pos;
                v.push(cur.read_uint("pixel value")?);
                if let Some(last) = v.last() {
                    if *last > maxval {
                        return Err(Error::parse(at, format!("pixel value {last} exceeds maxval {maxval}")));
                    }
                }
            }
            v
        }
    };
    if let Some((i, v)) = raw.iter().enumerate().find(|(_, v)| **v > maxval) {
        return Err(Error::parse(cur.pos + 1 + i, format!("pixel value {v} exceeds maxval {maxval}")));
    }

    let scale = 255.0 / maxval as f64;
    let pixels = raw
        .into_iter()
        .map(|v| if maxval == 255 { v as f64 } else { v as f64 * scale })
        .collect();
    Image::new(width as usize, height as usize, pixels)
}

/// Half-up rounding to an 8-bit sample.
fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn write_pgm(img: &Image, format: PgmFormat) -> Vec<u8> {
    let samples = img.pixels().iter().map(|v| quantize(*v));
    match format {
        PgmFormat::P5 => {
            let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
            out.extend(samples);
            out
        }
        PgmFormat::P2 => {
            let mut out = format!("P2\n{} {}\n255\n", img.width(), img.height());
            let samples: Vec<u8> = samples.collect();
            for row in samples.chunks(img.width()) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn read_pgm_file(path: impl AsRef<std::path::Path>) -> Result<Image> {
    read_pgm(&std::fs::read(path)?)
}

pub fn write_pgm_file(path: impl AsRef<std::path::Path>, img: &Image, format: PgmFormat) -> Result<()> {
    std::fs::write(path, write_pgm(img, format))?;
    Ok(())
}
