//! The semiparametric function class fitted to each patch: a Gaussian-kernel
//! expansion over the patch grid, a family of oriented Erf edge ridges, and a
//! bilinear polynomial.
//!
//! Coefficients are handled as one flat vector laid out as
//! `[alpha (row-major grid order) | beta (basis order) | h0 h1 h2 h3]`.

use std::fmt::Write as _;
use std::ops::Range;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{build_gram, erf, kernel_unchecked, quad_form, GramMatrix, KernelParams, Point};

/// `erf(a*x + b*y + c)`, a smoothed step across the line `a*x + b*y + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeFunction {
    a: f64,
    b: f64,
    c: f64,
}

impl RidgeFunction {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::invalid("ridge parameters must be finite"));
        }
        if a == 0.0 && b == 0.0 {
            return Err(Error::invalid("ridge direction (a, b) must be nonzero"));
        }
        Ok(Self { a, b, c })
    }

    pub fn params(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        erf(self.a * x + self.b * y + self.c)
    }
}

pub fn ridge_eval(r: &RidgeFunction, x: f64, y: f64) -> f64 {
    r.eval(x, y)
}

/// Ordered set of edge ridges. The position of a ridge is the index of its
/// beta coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeBasis {
    ridges: Vec<RidgeFunction>,
}

impl EdgeBasis {
    pub fn new(ridges: Vec<RidgeFunction>) -> Self {
        Self { ridges }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ridges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ridges.is_empty()
    }

    pub fn ridges(&self) -> &[RidgeFunction] {
        &self.ridges
    }
}

/// Unit directions at 0, 45, 90 and 135 degrees.
const ORIENTATIONS: [(f64, f64); 4] = [
    (1.0, 0.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
];

/// Ridges `erf(s * (x cos t + y sin t - offset))` for four orientations and
/// `levels` evenly spaced offsets.
///
/// For each orientation the offsets split the range of the projection
/// `x cos t + y sin t` over the unit square into `levels + 1` equal parts,
/// so every ridge crosses the patch. Ordering is orientation-major.
pub fn default_basis(levels: usize, sharpness: f64) -> Result<EdgeBasis> {
    if levels == 0 {
        return Err(Error::invalid("basis levels must be >= 1"));
    }
    if !(sharpness.is_finite() && sharpness > 0.0) {
        return Err(Error::invalid(format!("basis sharpness must be > 0, got {sharpness}")));
    }
    let mut ridges = Vec::with_capacity(4 * levels);
    for &(cos, sin) in &ORIENTATIONS {
        let corners = [0.0, cos, sin, cos + sin];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for j in 1..=levels {
            let t = j as f64 / (levels + 1) as f64;
            let offset = lo + t * (hi - lo);
            ridges.push(RidgeFunction::new(sharpness * cos, sharpness * sin, -sharpness * offset)?);
        }
    }
    Ok(EdgeBasis { ridges })
}

/// Kernel centers of an `n x n` patch: index `r * n + c` sits at
/// `(c / (n - 1), r / (n - 1))`. A single-sample patch sits at the origin.
pub fn patch_grid(n: usize) -> Vec<Point> {
    let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .flat_map(|r| (0..n).map(move |c| [c as f64 * step, r as f64 * step]))
        .collect()
}

/// Block boundaries of the flat coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffLayout {
    pub n_alpha: usize,
    pub n_beta: usize,
}

impl CoeffLayout {
    pub const N_POLY: usize = 4;

    pub fn len(&self) -> usize {
        self.n_alpha + self.n_beta + Self::N_POLY
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alpha(&self) -> Range<usize> {
        0..self.n_alpha
    }

    pub fn beta(&self) -> Range<usize> {
        self.n_alpha..self.n_alpha + self.n_beta
    }

    pub fn h(&self) -> Range<usize> {
        let start = self.n_alpha + self.n_beta;
        start..start + Self::N_POLY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiParametricModel {
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    h: [f64; 4],
    kernel: KernelParams,
    grid: Vec<Point>,
    basis: EdgeBasis,
}

impl SemiParametricModel {
    pub fn zeros(n: usize, kernel: KernelParams, basis: EdgeBasis) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("patch size must be >= 1"));
        }
        let k = basis.len();
        Ok(Self {
            n,
            alpha: vec![0.0; n * n],
            beta: vec![0.0; k],
            h: [0.0; 4],
            kernel,
            grid: patch_grid(n),
            basis,
        })
    }

    pub fn from_coeffs(n: usize, kernel: KernelParams, basis: EdgeBasis, coeffs: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(n, kernel, basis)?;
        m.set_coeffs(coeffs)?;
        Ok(m)
    }

    pub fn layout(&self) -> CoeffLayout {
        CoeffLayout {
            n_alpha: self.alpha.len(),
            n_beta: self.beta.len(),
        }
    }

    pub fn set_coeffs(&mut self, coeffs: &[f64]) -> Result<()> {
        let layout = self.layout();
        if coeffs.len() != layout.len() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        self.alpha.copy_from_slice(&coeffs[layout.alpha()]);
        self.beta.copy_from_slice(&coeffs[layout.beta()]);
        self.h.copy_from_slice(&coeffs[layout.h()]);
        Ok(())
    }

    pub fn coeffs(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout().len());
        out.extend_from_slice(&self.alpha);
        out.extend_from_slice(&self.beta);
        out.extend_from_slice(&self.h);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn alpha_mut(&mut self) -> &mut [f64] {
        &mut self.alpha
    }
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
    pub fn beta_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }
    pub fn h(&self) -> [f64; 4] {
        self.h
    }
    pub fn set_h(&mut self, h: [f64; 4]) {
        self.h = h;
    }
    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }
    pub fn grid(&self) -> &[Point] {
        &self.grid
    }
    pub fn basis(&self) -> &EdgeBasis {
        &self.basis
    }

    /// Debug record: `N K sigma` on the first line, then all coefficients.
    pub fn to_record(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.basis.len(), self.kernel.sigma());
        let coeffs = self.coeffs();
        for (i, c) in coeffs.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{c}");
        }
        s.push('\n');
        s
    }

    /// Inverse of [`to_record`](Self::to_record). The record does not carry
    /// ridge parameters, so the basis is supplied and its size checked.
    pub fn from_record(text: &str, basis: EdgeBasis) -> Result<Self> {
        let mut tokens = text.split_ascii_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::invalid(format!("model record: missing {what}")))
        };
        let n: usize = next("N")?
            .parse()
            .map_err(|_| Error::invalid("model record: bad N"))?;
        let k: usize = next("K")?
            .parse()
            .map_err(|_| Error::invalid("model record: bad K"))?;
        let sigma: f64 = next("sigma")?
            .parse()
            .map_err(|_| Error::invalid("model record: bad sigma"))?;
        if k != basis.len() {
            return Err(Error::invalid(format!(
                "model record has K = {k}, basis has {}",
                basis.len()
            )));
        }
        let coeffs = tokens
            .map(|t| t.parse::<f64>().map_err(|_| Error::invalid(format!("model record: bad coefficient {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(n, KernelParams::new(sigma)?, basis, &coeffs)
    }
}

pub fn model_eval(m: &SemiParametricModel, x: f64, y: f64) -> f64 {
    let scale = 1.0 / (2.0 * m.kernel.sigma() * m.kernel.sigma());
    let q = [x, y];
    let kernel_part: f64 = m
        .alpha
        .iter()
        .zip(&m.grid)
        .map(|(a, p)| a * kernel_unchecked(*p, q, scale))
        .sum();
    let ridge_part: f64 = m
        .beta
        .iter()
        .zip(m.basis.ridges())
        .map(|(b, r)| b * r.eval(x, y))
        .sum();
    let [h0, h1, h2, h3] = m.h;
    kernel_part + ridge_part + h0 + h1 * x + h2 * y + h3 * x * y
}

/// Basis functions evaluated at the grid: row `i` holds every basis value at
/// grid point `i`, so `design.row(i) . coeffs` is the model at that point.
pub fn design_matrix(m: &SemiParametricModel) -> Array2<f64> {
    // Gram construction cannot fail for a valid model grid.
    let gram = build_gram(&m.grid, &m.kernel).expect("model grid is nonempty and finite");
    design_from_parts(&m.grid, &gram, &m.basis)
}

pub(crate) fn design_from_parts(grid: &[Point], gram: &GramMatrix, basis: &EdgeBasis) -> Array2<f64> {
    let rows = grid.len();
    let k = basis.len();
    let layout = CoeffLayout { n_alpha: rows, n_beta: k };
    let mut d = Array2::<f64>::zeros((rows, layout.len()));
    for (i, p) in grid.iter().enumerate() {
        let mut row = d.row_mut(i);
        for j in 0..rows {
            row[j] = gram.get(i, j);
        }
        for (kk, r) in basis.ridges().iter().enumerate() {
            row[rows + kk] = r.eval(p[0], p[1]);
        }
        let h = layout.h().start;
        row[h] = 1.0;
        row[h + 1] = p[0];
        row[h + 2] = p[1];
        row[h + 3] = p[0] * p[1];
    }
    d
}

pub fn rkhs_norm_sq(m: &SemiParametricModel, gram: &GramMatrix) -> Result<f64> {
    quad_form(gram, &m.alpha)
}

/// Everything about a patch solve that depends only on geometry and not on
/// the sample values: grid, Gram matrix and design matrix. Built once and
/// shared read-only across all pixels of an image.
#[derive(Debug, Clone)]
pub struct PatchGeometry {
    n: usize,
    kernel: KernelParams,
    basis: EdgeBasis,
    grid: Vec<Point>,
    gram: GramMatrix,
    design: Array2<f64>,
}

impl PatchGeometry {
    pub fn new(n: usize, kernel: KernelParams, basis: EdgeBasis) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("patch size must be >= 1"));
        }
        let grid = patch_grid(n);
        let gram = build_gram(&grid, &kernel)?;
        let design = design_from_parts(&grid, &gram, &basis);
        Ok(Self {
            n,
            kernel,
            basis,
            grid,
            gram,
            design,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn samples(&self) -> usize {
        self.n * self.n
    }
    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }
    pub fn basis(&self) -> &EdgeBasis {
        &self.basis
    }
    pub fn grid(&self) -> &[Point] {
        &self.grid
    }
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }
    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn layout(&self) -> CoeffLayout {
        CoeffLayout {
            n_alpha: self.samples(),
            n_beta: self.basis.len(),
        }
    }

    /// Grid index of the patch center; `n` is odd in every engine use.
    pub fn center_index(&self) -> usize {
        (self.samples() - 1) / 2
    }

    pub fn model(&self, coeffs: &[f64]) -> Result<SemiParametricModel> {
        SemiParametricModel::from_coeffs(self.n, self.kernel, self.basis.clone(), coeffs)
    }
}
