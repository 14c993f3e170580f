//! Independent reference computations used as test oracles. Nothing here
//! calls into the evaluation paths it is used to check.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rkhs_denoise::model::EdgeBasis;
use rkhs_denoise::numerics::erf;

/// Deterministic splitmix64 stream for test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(lo, hi)).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

pub fn erf_quadrature(x: f64) -> f64 {
    2.0 / std::f64::consts::PI.sqrt() * simpson(&|t| (-t * t).exp(), 0.0, x, 1e-12)
}

pub fn grid_points(n: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if n == 1 {
                pts.push([0.0, 0.0]);
            } else {
                pts.push([c as f64 / (n - 1) as f64, r as f64 / (n - 1) as f64]);
            }
        }
    }
    pts
}

pub fn kernel(p: [f64; 2], q: [f64; 2], sigma: f64) -> f64 {
    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    (-d2 / (2.0 * sigma * sigma)).exp()
}

pub fn gram_dense(points: &[[f64; 2]], sigma: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| kernel(points[i], points[j], sigma))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Term-by-term model value at `(x, y)`.
pub fn naive_model(coeffs: &[f64], n: usize, sigma: f64, basis: &EdgeBasis, x: f64, y: f64) -> f64 {
    let pts = grid_points(n);
    let k = basis.len();
    let mut total = 0.0;
    for (i, p) in pts.iter().enumerate() {
        total += coeffs[i] * kernel(*p, [x, y], sigma);
    }
    for (j, r) in basis.ridges().iter().enumerate() {
        let (a, b, c) = r.params();
        total += coeffs[pts.len() + j] * erf(a * x + b * y + c);
    }
    let h = &coeffs[pts.len() + k..];
    total + h[0] + h[1] * x + h[2] * y + h[3] * x * y
}

pub struct Weights {
    pub lambda: f64,
    pub mu: f64,
    pub mu1: f64,
}

/// Term-by-term reimplementation of the patch objective.
pub fn naive_objective(coeffs: &[f64], values: &[f64], n: usize, sigma: f64, basis: &EdgeBasis, w: &Weights) -> f64 {
    let pts = grid_points(n);
    let k = basis.len();
    let mut data = 0.0;
    for (i, p) in pts.iter().enumerate() {
        data += (naive_model(coeffs, n, sigma, basis, p[0], p[1]) - values[i]).abs();
    }
    let mut rkhs = 0.0;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            rkhs += coeffs[i] * coeffs[j] * kernel(pts[i], pts[j], sigma);
        }
    }
    let beta: f64 = coeffs[pts.len()..pts.len() + k].iter().map(|b| b * b).sum();
    let h = &coeffs[pts.len() + k..];
    let hsq = h[1] * h[1] + h[2] * h[2] + h[3] * h[3];
    data + 0.5 * w.lambda * rkhs + 0.5 * w.mu * beta + 0.5 * w.mu1 * hsq
}

/// Mean of central-difference gradient magnitudes at interior samples.
pub fn naive_mean_gradient(values: &[f64], n: usize) -> f64 {
    let at = |r: usize, c: usize| values[r * n + c];
    let mut sum = 0.0;
    let mut count = 0;
    for r in 1..n - 1 {
        for c in 1..n - 1 {
            let gx = (at(r, c + 1) - at(r, c - 1)) / 2.0;
            let gy = (at(r + 1, c) - at(r - 1, c)) / 2.0;
            sum += (gx * gx + gy * gy).sqrt();
            count += 1;
        }
    }
    sum / count as f64
}

/// Exhaustive search of the data term `sum |D c - v|` over the Cartesian
/// product of per-coordinate candidate lists. Returns the smallest value.
pub fn lattice_search(design: &DMatrix<f64>, values: &[f64], candidates: &[Vec<f64>]) -> f64 {
    let dims = candidates.len();
    assert_eq!(dims, design.ncols());
    let rows = design.nrows();
    let mut idx = vec![0usize; dims];
    // fitted values for the current lattice point, updated incrementally
    let mut fit = vec![0.0; rows];
    for (j, cand) in candidates.iter().enumerate() {
        for (i, f) in fit.iter_mut().enumerate() {
            *f += design[(i, j)] * cand[0];
        }
    }
    let mut best = f64::INFINITY;
    loop {
        let obj: f64 = fit.iter().zip(values).map(|(f, v)| (f - v).abs()).sum();
        best = best.min(obj);
        // odometer increment
        let mut j = 0;
        loop {
            if j == dims {
                return best;
            }
            let old = candidates[j][idx[j]];
            idx[j] += 1;
            if idx[j] == candidates[j].len() {
                idx[j] = 0;
            }
            let new = candidates[j][idx[j]];
            for (i, f) in fit.iter_mut().enumerate() {
                *f += design[(i, j)] * (new - old);
            }
            if idx[j] != 0 {
                break;
            }
            j += 1;
        }
    }
}
