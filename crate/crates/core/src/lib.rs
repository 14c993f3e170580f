//! Edge-preserving image denoising with semiparametric kernel models.
//!
//! Each pixel's neighbourhood is fitted by a function made of a Gaussian
//! kernel expansion over the patch grid, a set of oriented Erf edge ridges,
//! and a bilinear polynomial. The fit minimizes an L1 data term plus
//! quadratic penalties with a projected subgradient method, and the pixel
//! is replaced by the fitted value at the patch center. Penalties on the
//! edge and polynomial terms are relaxed where the patch looks like an edge.
//!
//! Pixels are independent, so [`engine::denoise_image`] spreads rows over a
//! rayon pool when the `parallel` feature is enabled (the default).

pub mod bench;
pub mod config;
pub mod engine;
pub mod error;
pub mod image;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod numerics;
pub mod pgm;
pub mod solver;

pub use engine::{denoise_image, denoise_image_with, EngineConfig, Execution, RegionClass};
pub use error::{Error, Result};
pub use image::Image;
pub use metrics::{mse, psnr};
pub use noise::{add_gaussian_noise, add_impulse_noise, add_mixed_noise, NoiseKind, NoiseSpec, Rng};
pub use pgm::{read_pgm, write_pgm, PgmFormat};
