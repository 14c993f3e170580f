//! Whole-image denoising.
//!
//! Every pixel is handled independently: the `n x n` window around it is
//! extracted with mirrored borders, classified as edge or smooth by its mean
//! gradient, fitted with the region's penalty weights, and replaced by the
//! fitted model at the window center. The Gram and design matrices depend
//! only on the window geometry and are built once per image.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::image::{clamp_intensity, Image};
use crate::model::{default_basis, PatchGeometry};
use crate::numerics::KernelParams;
use crate::solver::{solve_with_geometry, PatchSamples, SolverParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub patch_n: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub mu_smooth: f64,
    pub mu_edge: f64,
    pub mu1_smooth: f64,
    pub mu1_edge: f64,
    /// Mean gradient, in intensity per pixel, at or above which a window is
    /// treated as containing an edge.
    pub edge_threshold: f64,
    pub basis_levels: usize,
    pub basis_sharpness: f64,
    pub max_iters: usize,
    pub step_c: f64,
    /// `None` uses [`SolverParams::default_radius`].
    pub radius: Option<f64>,
    pub tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            patch_n: 5,
            sigma: 0.35,
            lambda: 0.5,
            mu_smooth: 10.0,
            mu_edge: 0.05,
            mu1_smooth: 5.0,
            mu1_edge: 0.05,
            edge_threshold: 25.0,
            basis_levels: 2,
            basis_sharpness: 15.0,
            max_iters: SolverParams::DEFAULT_MAX_ITERS,
            step_c: SolverParams::DEFAULT_STEP_C,
            radius: None,
            tol: SolverParams::DEFAULT_TOL,
        }
    }
}

pub const MIN_PATCH_N: usize = 3;
pub const MAX_PATCH_N: usize = 13;

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_n.is_multiple_of(2) || !(MIN_PATCH_N..=MAX_PATCH_N).contains(&self.patch_n) {
            return Err(Error::invalid(format!(
                "patch_n must be odd and in {MIN_PATCH_N}..={MAX_PATCH_N}, got {}",
                self.patch_n
            )));
        }
        KernelParams::new(self.sigma)?;
        if self.mu_edge > self.mu_smooth {
            return Err(Error::invalid("mu_edge must not exceed mu_smooth"));
        }
        if self.mu1_edge > self.mu1_smooth {
            return Err(Error::invalid("mu1_edge must not exceed mu1_smooth"));
        }
        if !(self.edge_threshold.is_finite() && self.edge_threshold >= 0.0) {
            return Err(Error::invalid("edge_threshold must be finite and >= 0"));
        }
        if self.basis_levels == 0 {
            return Err(Error::invalid("basis_levels must be >= 1"));
        }
        if !(self.basis_sharpness.is_finite() && self.basis_sharpness > 0.0) {
            return Err(Error::invalid("basis_sharpness must be > 0"));
        }
        self.solver_params(RegionClass::Smooth).validate()?;
        self.solver_params(RegionClass::Edge).validate()
    }

    fn solver_params(&self, cls: RegionClass) -> SolverParams {
        let (mu, mu1) = match cls {
            RegionClass::Edge => (self.mu_edge, self.mu1_edge),
            RegionClass::Smooth => (self.mu_smooth, self.mu1_smooth),
        };
        SolverParams {
            lambda: self.lambda,
            mu,
            mu1,
            max_iters: self.max_iters,
            step_c: self.step_c,
            radius: self.radius.unwrap_or_else(|| SolverParams::default_radius(self.patch_n)),
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionClass {
    Edge,
    Smooth,
}

/// Reflects `idx` into `0..len` without repeating the border sample
/// (`-1 -> 1`, `len -> len - 2`), folding as often as needed.
fn mirror(idx: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = idx.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

pub fn extract_patch(img: &Image, i: usize, j: usize, n: usize) -> Result<PatchSamples> {
    if i >= img.height() || j >= img.width() {
        return Err(Error::invalid(format!(
            "pixel ({i}, {j}) outside {}x{} image",
            img.width(),
            img.height()
        )));
    }
    if n.is_multiple_of(2) {
        return Err(Error::invalid(format!("patch size must be odd, got {n}")));
    }
    let half = (n / 2) as isize;
    let mut values = Vec::with_capacity(n * n);
    for dr in -half..=half {
        let r = mirror(i as isize + dr, img.height());
        for dc in -half..=half {
            let c = mirror(j as isize + dc, img.width());
            values.push(img.get(r, c));
        }
    }
    PatchSamples::new(n, values)
}

/// Mean gradient magnitude over interior samples, using central
/// differences of the raw samples. A 2x2 patch has no interior and yields 0.
pub fn mean_gradient(patch: &PatchSamples) -> Result<f64> {
    let n = patch.n();
    if n < 2 {
        return Err(Error::invalid("mean gradient needs a patch of size >= 2"));
    }
    if n == 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for r in 1..n - 1 {
        for c in 1..n - 1 {
            let gx = 0.5 * (patch.get(r, c + 1) - patch.get(r, c - 1));
            let gy = 0.5 * (patch.get(r + 1, c) - patch.get(r - 1, c));
            total += gx.hypot(gy);
        }
    }
    Ok(total / ((n - 2) * (n - 2)) as f64)
}

pub fn classify_region(mean_grad: f64, cfg: &EngineConfig) -> RegionClass {
    if mean_grad >= cfg.edge_threshold {
        RegionClass::Edge
    } else {
        RegionClass::Smooth
    }
}

/// Penalty weights for a region: lambda is shared, edges get the smaller
/// `mu` / `mu1` pair.
pub fn params_for_region(cls: RegionClass, cfg: &EngineConfig) -> SolverParams {
    cfg.solver_params(cls)
}

/// Precomputed, read-only state shared by all pixel solves of one config.
#[derive(Debug, Clone)]
pub struct DenoiseContext {
    geometry: PatchGeometry,
    edge: SolverParams,
    smooth: SolverParams,
}

impl DenoiseContext {
    pub fn new(cfg: &EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let basis = default_basis(cfg.basis_levels, cfg.basis_sharpness)?;
        let geometry = PatchGeometry::new(cfg.patch_n, KernelParams::new(cfg.sigma)?, basis)?;
        Ok(Self {
            geometry,
            edge: params_for_region(RegionClass::Edge, cfg),
            smooth: params_for_region(RegionClass::Smooth, cfg),
        })
    }

    pub fn geometry(&self) -> &PatchGeometry {
        &self.geometry
    }

    pub fn params(&self, cls: RegionClass) -> &SolverParams {
        match cls {
            RegionClass::Edge => &self.edge,
            RegionClass::Smooth => &self.smooth,
        }
    }
}

/// Result of one pixel solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFit {
    pub value: f64,
    pub class: RegionClass,
    pub mu: f64,
    pub mu1: f64,
}

pub fn fit_pixel(img: &Image, i: usize, j: usize, cfg: &EngineConfig, ctx: &DenoiseContext) -> Result<PixelFit> {
    let geom = ctx.geometry();
    let patch = extract_patch(img, i, j, geom.n())?;
    let class = classify_region(mean_gradient(&patch)?, cfg);
    let params = ctx.params(class);
    let out = solve_with_geometry(&patch, geom, params, None)?;
    let center = geom.design().row(geom.center_index());
    let value: f64 = center.iter().zip(&out.coeffs).map(|(d, c)| d * c).sum();
    Ok(PixelFit {
        value: clamp_intensity(value),
        class,
        mu: params.mu,
        mu1: params.mu1,
    })
}

pub fn denoise_pixel(img: &Image, i: usize, j: usize, cfg: &EngineConfig, ctx: &DenoiseContext) -> Result<f64> {
    fit_pixel(img, i, j, cfg, ctx).map(|f| f.value)
}

/// How [`denoise_image_with`] schedules rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Rows are spread over a rayon pool; `None` uses the global pool.
    /// Without the `parallel` feature this runs serially.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Serial
        }
    }
}

/// Called with `(pixels_done, pixels_total)`, possibly from worker threads.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

pub fn denoise_image(img: &Image, cfg: &EngineConfig, progress: Option<Progress<'_>>) -> Result<Image> {
    denoise_image_with(img, cfg, Execution::default(), progress)
}

pub fn denoise_image_with(
    img: &Image,
    cfg: &EngineConfig,
    exec: Execution,
    progress: Option<Progress<'_>>,
) -> Result<Image> {
    let ctx = DenoiseContext::new(cfg)?;
    let rows = map_rows(img, exec, progress, |i| {
        (0..img.width()).map(|j| denoise_pixel(img, i, j, cfg, &ctx)).collect()
    })?;
    Image::new(img.width(), img.height(), rows.into_iter().flatten().collect())
}

/// Per-pixel fit details for the whole image, in row-major order.
pub fn fit_image(img: &Image, cfg: &EngineConfig, exec: Execution) -> Result<Vec<PixelFit>> {
    let ctx = DenoiseContext::new(cfg)?;
    let rows = map_rows(img, exec, None, |i| {
        (0..img.width()).map(|j| fit_pixel(img, i, j, cfg, &ctx)).collect()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

fn map_rows<T, F>(img: &Image, exec: Execution, progress: Option<Progress<'_>>, row: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize) -> Result<Vec<T>> + Sync,
{
    let total = img.width() * img.height();
    let done = AtomicUsize::new(0);
    let tracked = |i: usize| {
        let out = row(i)?;
        if let Some(cb) = progress {
            let d = done.fetch_add(img.width(), Ordering::Relaxed) + img.width();
            cb(d, total);
        }
        Ok(out)
    };
    match exec {
        Execution::Serial => (0..img.height()).map(tracked).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let run = || (0..img.height()).into_par_iter().map(tracked).collect::<Result<Vec<_>>>();
            match threads {
                None => run(),
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?
                    .install(run),
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => (0..img.height()).map(tracked).collect(),
    }
}
