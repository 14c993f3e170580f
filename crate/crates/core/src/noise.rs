//! Seeded noise injection.
//!
//! All generators draw from one xorshift64* stream, visiting pixels in
//! row-major order, so a given (image, parameters, seed) always produces
//! the same output on every platform.

use crate::image::{clamp_intensity, Image};

const ZERO_SEED_REMAP: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_MULTIPLIER: u64 = 2_685_821_657_736_338_717;

/// xorshift64* generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    /// A zero seed would lock the generator at zero, so it is remapped.
    pub fn new(seed: u64) -> Self {
        Self {
            state: if seed == 0 { ZERO_SEED_REMAP } else { seed },
        }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_MULTIPLIER)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Pure-function form of [`Rng::next_u64`].
pub fn rng_next_u64(r: Rng) -> (u64, Rng) {
    let mut r = r;
    let v = r.next_u64();
    (v, r)
}

/// Basic Box-Muller: each pair of uniforms yields two normals, handed out
/// in order (cosine branch first).
struct BoxMuller<'a> {
    rng: &'a mut Rng,
    spare: Option<f64>,
}

impl<'a> BoxMuller<'a> {
    fn new(rng: &'a mut Rng) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite
        let u1 = 1.0 - self.rng.next_f64();
        let u2 = self.rng.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * theta.sin());
        radius * theta.cos()
    }
}

fn gaussian_stage(pixels: &mut [f64], s: f64, rng: &mut Rng) {
    if s == 0.0 {
        return;
    }
    let mut normals = BoxMuller::new(rng);
    for p in pixels {
        *p = clamp_intensity(*p + s * normals.next());
    }
}

fn impulse_stage(pixels: &mut [f64], p: f64, rng: &mut Rng) {
    for px in pixels {
        if rng.next_f64() < p {
            *px = if rng.next_f64() < 0.5 { 0.0 } else { 255.0 };
        }
    }
}

fn rebuild(img: &Image, pixels: Vec<f64>) -> Image {
    Image::new(img.width(), img.height(), pixels).expect("noise preserves image shape and finiteness")
}

fn check_std(s: f64) {
    assert!(s.is_finite() && s >= 0.0, "noise std must be finite and >= 0, got {s}");
}

fn check_fraction(p: f64) {
    assert!((0.0..=1.0).contains(&p), "impulse fraction must lie in [0, 1], got {p}");
}

/// Additive Gaussian noise with standard deviation `s`, clamped to `[0, 255]`.
///
/// # Panics
/// If `s` is negative or not finite.
pub fn add_gaussian_noise(img: &Image, s: f64, seed: u64) -> Image {
    check_std(s);
    let mut px = img.pixels().to_vec();
    gaussian_stage(&mut px, s, &mut Rng::new(seed));
    rebuild(img, px)
}

/// Salt-and-pepper noise: each pixel is replaced with probability `p` by 0
/// or 255, chosen with equal probability.
///
/// # Panics
/// If `p` is outside `[0, 1]`.
pub fn add_impulse_noise(img: &Image, p: f64, seed: u64) -> Image {
    check_fraction(p);
    let mut px = img.pixels().to_vec();
    impulse_stage(&mut px, p, &mut Rng::new(seed));
    rebuild(img, px)
}

/// Gaussian stage followed by the impulse stage on the same stream. With
/// `s == 0` the Gaussian stage draws nothing.
pub fn add_mixed_noise(img: &Image, s: f64, p: f64, seed: u64) -> Image {
    check_std(s);
    check_fraction(p);
    let mut rng = Rng::new(seed);
    let mut px = img.pixels().to_vec();
    gaussian_stage(&mut px, s, &mut rng);
    impulse_stage(&mut px, p, &mut rng);
    rebuild(img, px)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    Gaussian { s: f64 },
    Impulse { p: f64 },
    Mixed { s: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn apply(&self, img: &Image) -> Image {
        match self.kind {
            NoiseKind::Gaussian { s } => add_gaussian_noise(img, s, self.seed),
            NoiseKind::Impulse { p } => add_impulse_noise(img, p, self.seed),
            NoiseKind::Mixed { s, p } => add_mixed_noise(img, s, p, self.seed),
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            NoiseKind::Gaussian { s } => write!(f, "gaussian s={s}"),
            NoiseKind::Impulse { p } => write!(f, "impulse p={p}"),
            NoiseKind::Mixed { s, p } => write!(f, "mixed s={s} p={p}"),
        }
    }
}

impl std::fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} seed={}", self.kind, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn zero_seed_remapped() {
        let mut a = Rng::new(0);
        let mut b = Rng::new(0x9E37_79B9_7F4A_7C15);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn first_output_matches_hand_computation() {
        let mut x: u64 = 1;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        let expected = x.wrapping_mul(2_685_821_657_736_338_717);
        let (v, next) = rng_next_u64(Rng::new(1));
        assert_eq!(v, expected);
        assert_eq!(next.state(), x);
    }

    #[test]
    fn uniform_mean() {
        let mut r = Rng::new(12345);
        let n = 1_000_000;
        let mean = (0..n).map(|_| r.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "{mean}");
    }

    #[test]
    fn zero_noise_is_identity() {
        let img = Image::from_fn(9, 7, |r, c| ((r * 31 + c * 7) % 256) as f64).unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 3), img);
        assert_eq!(add_impulse_noise(&img, 0.0, 3), img);
        assert_eq!(add_mixed_noise(&img, 0.0, 0.0, 3), img);
    }

    #[test]
    fn full_impulse_saturates() {
        let img = Image::filled(20, 20, 100.0).unwrap();
        let out = add_impulse_noise(&img, 1.0, 9);
        assert!(out.pixels().iter().all(|v| *v == 0.0 || *v == 255.0));
    }

    #[test]
    fn mixed_without_gaussian_matches_impulse() {
        let img = Image::from_fn(16, 16, |r, c| (r * 16 + c) as f64).unwrap();
        assert_eq!(add_mixed_noise(&img, 0.0, 0.3, 77), add_impulse_noise(&img, 0.3, 77));
    }

    #[test]
    fn different_seeds_differ() {
        let img = Image::filled(16, 16, 128.0).unwrap();
        assert_ne!(add_gaussian_noise(&img, 20.0, 1), add_gaussian_noise(&img, 20.0, 2));
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut rng = Rng::new(5);
        let mut bm = BoxMuller::new(&mut rng);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| bm.next()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }
}
