//! Benchmark harness: corrupt a clean image over a noise grid, denoise each
//! case and report PSNR before and after.

use std::io::Write;
use std::time::Instant;

use crate::engine::{denoise_image_with, EngineConfig, Execution};
use crate::error::Result;
use crate::image::Image;
use crate::metrics::psnr;
use crate::noise::{NoiseKind, NoiseSpec};

pub const CSV_HEADER: [&str; 6] = ["image", "noise", "noisy_psnr", "denoised_psnr", "runtime_s", "config_digest"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gaussian,
    Impulse,
    Mixed,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(Suite::Gaussian),
            "impulse" => Ok(Suite::Impulse),
            "mixed" => Ok(Suite::Mixed),
            other => Err(format!("unknown suite {other:?} (expected gaussian, impulse or mixed)")),
        }
    }
}

/// Noise levels swept by the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    pub stds: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl Default for NoiseGrid {
    fn default() -> Self {
        Self {
            stds: vec![10.0, 20.0, 30.0],
            fractions: vec![0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl NoiseGrid {
    /// Gaussian uses `stds`, impulse uses `fractions`, mixed uses every
    /// `(s, p)` pair, std-major.
    pub fn cases(&self, suite: Suite) -> Vec<NoiseKind> {
        match suite {
            Suite::Gaussian => self.stds.iter().map(|&s| NoiseKind::Gaussian { s }).collect(),
            Suite::Impulse => self.fractions.iter().map(|&p| NoiseKind::Impulse { p }).collect(),
            Suite::Mixed => self
                .stds
                .iter()
                .flat_map(|&s| self.fractions.iter().map(move |&p| NoiseKind::Mixed { s, p }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image_name: String,
    pub noise: NoiseKind,
    pub noisy_psnr: f64,
    pub denoised_psnr: f64,
    pub runtime_seconds: f64,
    pub config_digest: String,
}

impl BenchRow {
    fn record(&self) -> [String; 6] {
        [
            self.image_name.clone(),
            self.noise.to_string(),
            format_db(self.noisy_psnr),
            format_db(self.denoised_psnr),
            format!("{:.3}", self.runtime_seconds),
            self.config_digest.clone(),
        ]
    }
}

fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

pub struct BenchOptions<'a> {
    pub image_name: &'a str,
    pub suite: Suite,
    pub grid: &'a NoiseGrid,
    pub config: &'a EngineConfig,
    pub seed: u64,
    pub execution: Execution,
}

/// Runs every case of the suite; each case draws its noise from `seed`.
pub fn run_bench(clean: &Image, opts: &BenchOptions<'_>, mut on_row: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    opts.config.validate()?;
    let digest = opts.config.digest();
    let mut rows = Vec::new();
    for kind in opts.grid.cases(opts.suite) {
        let noisy = NoiseSpec { kind, seed: opts.seed }.apply(clean);
        let start = Instant::now();
        let denoised = denoise_image_with(&noisy, opts.config, opts.execution, None)?;
        let runtime_seconds = start.elapsed().as_secs_f64();
        let row = BenchRow {
            image_name: opts.image_name.to_string(),
            noise: kind,
            noisy_psnr: psnr(&noisy, clean)?,
            denoised_psnr: psnr(&denoised, clean)?,
            runtime_seconds,
            config_digest: digest.clone(),
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}
