//! Scalar special functions and Gaussian-kernel linear algebra.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A point in the normalized patch plane.
pub type Point = [f64; 2];

/// Width of the Gaussian kernel in normalized patch coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma: f64,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("kernel sigma must be > 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    fn inv_two_sigma_sq(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }
}

// Abramowitz & Stegun 7.1.26.
const ERF_P: f64 = 0.327_591_1;
const ERF_A: [f64; 5] = [
    0.254_829_592,
    -0.284_496_736,
    1.421_413_741,
    -1.453_152_027,
    1.061_405_429,
];

/// Error function, absolute error at most 1.5e-7 on the whole real line.
///
/// The rational approximation is evaluated for |x| and extended as an odd
/// function, so `erf(-x) == -erf(x)` holds bit for bit and `erf(0) == 0`.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let t = 1.0 / (1.0 + ERF_P * ax);
    let poly = t * (ERF_A[0] + t * (ERF_A[1] + t * (ERF_A[2] + t * (ERF_A[3] + t * ERF_A[4]))));
    let y = 1.0 - poly * (-ax * ax).exp();
    if x < 0.0 {
        -y
    } else {
        y
    }
}

#[inline]
pub(crate) fn kernel_unchecked(p: Point, q: Point, inv_two_sigma_sq: f64) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp()
}

/// `exp(-|p - q|^2 / (2 sigma^2))`
pub fn gaussian_kernel(p: Point, q: Point, params: &KernelParams) -> f64 {
    kernel_unchecked(p, q, params.inv_two_sigma_sq())
}

/// Matrix of pairwise kernel values over a fixed point set.
///
/// Only the upper triangle is evaluated; the lower triangle is a mirror
/// copy, so the matrix is exactly symmetric. The diagonal is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Array2<f64>,
}

impl GramMatrix {
    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    /// `out = G a`
    pub(crate) fn mul_vec_into(&self, a: &[f64], out: &mut [f64]) {
        for (row, o) in self.entries.rows().into_iter().zip(out.iter_mut()) {
            *o = row.iter().zip(a).map(|(g, x)| g * x).sum();
        }
    }
}

pub fn build_gram(grid: &[Point], params: &KernelParams) -> Result<GramMatrix> {
    if grid.is_empty() {
        return Err(Error::invalid("gram matrix needs at least one point"));
    }
    if grid.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::invalid("grid points must be finite"));
    }
    let n = grid.len();
    let scale = params.inv_two_sigma_sq();
    let mut entries = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        entries[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let k = kernel_unchecked(grid[i], grid[j], scale);
            entries[[i, j]] = k;
            entries[[j, i]] = k;
        }
    }
    Ok(GramMatrix { entries })
}

/// `a^T G a`, the squared RKHS norm of `sum_i a_i k(p_i, .)`.
pub fn quad_form(gram: &GramMatrix, a: &[f64]) -> Result<f64> {
    if a.len() != gram.order() {
        return Err(Error::invalid(format!(
            "coefficient length {} does not match gram order {}",
            a.len(),
            gram.order()
        )));
    }
    Ok(quad_form_unchecked(gram, a))
}

pub(crate) fn quad_form_unchecked(gram: &GramMatrix, a: &[f64]) -> f64 {
    gram.entries
        .rows()
        .into_iter()
        .zip(a)
        .map(|(row, ai)| ai * row.iter().zip(a).map(|(g, aj)| g * aj).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn erf_quadrature(x: f64) -> f64 {
        2.0 / std::f64::consts::PI.sqrt() * simpson(&|t| (-t * t).exp(), 0.0, x, 1e-10)
    }

    #[test]
    fn erf_quadrature_oracle_values() {
        // Frozen from the quadrature oracle.
        assert!((erf_quadrature(1.0) - 0.842_700_79).abs() < 1e-8);
        assert!((erf_quadrature(3.0) - 0.999_977_91).abs() < 1e-8);
        assert!((erf(1.0) - 0.842_700_79).abs() <= 1.5e-7);
        assert!((erf(3.0) - 0.999_977_91).abs() <= 1.5e-7);
    }

    #[test]
    fn erf_is_odd_and_zero_at_origin() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erf(-0.7), -erf(0.7));
    }

    #[test]
    fn erf_monotone_and_bounded() {
        let mut prev = erf(-5.0);
        for k in 1..=100_000 {
            let x = -5.0 + 10.0 * k as f64 / 100_000.0;
            let v = erf(x);
            assert!(v > prev, "erf not increasing at {x}");
            assert!(v.abs() < 1.0);
            prev = v;
        }
    }

    #[test]
    fn kernel_examples() {
        let k = KernelParams::new(0.3).unwrap();
        assert_eq!(gaussian_kernel([0.2, 0.7], [0.2, 0.7], &k), 1.0);
        let k = KernelParams::new(0.5).unwrap();
        assert!((gaussian_kernel([0.0, 0.0], [1.0, 1.0], &k) - 0.018_315_64).abs() < 1e-8);
        assert_eq!(
            gaussian_kernel([0.1, 0.9], [0.4, 0.3], &k),
            gaussian_kernel([0.4, 0.3], [0.1, 0.9], &k)
        );
    }

    #[test]
    fn kernel_decreases_with_distance() {
        let k = KernelParams::new(0.35).unwrap();
        let mut prev = 1.0;
        for i in 1..200 {
            let d = i as f64 * 0.01;
            let v = gaussian_kernel([0.0, 0.0], [d * 0.6, d * 0.8], &k);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(-1.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn gram_small_cases() {
        let k = KernelParams::new(0.3).unwrap();
        assert!(build_gram(&[], &k).is_err());
        let g = build_gram(&[[0.5, 0.5]], &k).unwrap();
        assert_eq!(g.entries(), &ndarray::arr2(&[[1.0]]));
        let g = build_gram(&[[0.5, 0.5], [0.5, 0.5]], &k).unwrap();
        assert_eq!(g.entries(), &ndarray::arr2(&[[1.0, 1.0], [1.0, 1.0]]));
    }

    #[test]
    fn quad_form_cases() {
        let k = KernelParams::new(0.3).unwrap();
        let g = build_gram(&[[0.0, 0.0]], &k).unwrap();
        assert_eq!(quad_form(&g, &[0.0]).unwrap(), 0.0);
        assert_eq!(quad_form(&g, &[3.0]).unwrap(), 9.0);
        assert!(quad_form(&g, &[1.0, 2.0]).is_err());
    }
}
