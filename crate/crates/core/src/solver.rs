//! Regularized L1 risk for a single patch and its minimization by a
//! projected subgradient method.
//!
//! The objective over the flat coefficient vector `c = [alpha | beta | h]` is
//!
//! ```text
//! sum_i |(D c)_i - v_i| + lambda/2 alpha^T G alpha + mu/2 |beta|^2 + mu1/2 (h1^2 + h2^2 + h3^2)
//! ```
//!
//! where `D` is the design matrix of the patch geometry and `G` its Gram
//! matrix. The constant term `h0` is not penalized.

use crate::error::{Error, Result};
use crate::model::{CoeffLayout, EdgeBasis, PatchGeometry, SemiParametricModel};
use crate::numerics::KernelParams;

/// Window over which the best objective must improve to keep iterating.
const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub lambda: f64,
    pub mu: f64,
    pub mu1: f64,
    pub max_iters: usize,
    /// Numerator of the diminishing step `step_c / sqrt(t + 1)`.
    pub step_c: f64,
    /// Radius of the L2 ball the iterates are projected onto.
    pub radius: f64,
    /// Relative best-objective improvement over 50 iterations below which
    /// the solve stops early. Zero disables early stopping.
    pub tol: f64,
}

impl SolverParams {
    pub const DEFAULT_MAX_ITERS: usize = 300;
    pub const DEFAULT_STEP_C: f64 = 25.0;
    pub const DEFAULT_TOL: f64 = 1e-4;

    /// Ball radius used when none is configured: `10 * n * 255`.
    pub fn default_radius(n: usize) -> f64 {
        10.0 * n as f64 * 255.0
    }

    /// Defaults for an `n x n` patch with the given penalty weights.
    pub fn with_weights(n: usize, lambda: f64, mu: f64, mu1: f64) -> Self {
        Self {
            lambda,
            mu,
            mu1,
            max_iters: Self::DEFAULT_MAX_ITERS,
            step_c: Self::DEFAULT_STEP_C,
            radius: Self::default_radius(n),
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("lambda", self.lambda)?;
        nonneg("mu", self.mu)?;
        nonneg("mu1", self.mu1)?;
        nonneg("tol", self.tol)?;
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.step_c.is_finite() && self.step_c > 0.0) {
            return Err(Error::invalid(format!("step_c must be > 0, got {}", self.step_c)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!("radius must be > 0, got {}", self.radius)));
        }
        Ok(())
    }
}

/// Noisy samples of one `n x n` patch, row-major, in intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSamples {
    n: usize,
    values: Vec<f64>,
}

impl PatchSamples {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("patch size must be >= 1"));
        }
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "patch of size {n} needs {} samples, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("patch samples must be finite"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn center(&self) -> f64 {
        self.values[self.values.len() / 2]
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }
}

/// Starting point: every coefficient zero except `h0`, which is the patch
/// median (the best constant fit under the L1 data term).
pub fn default_init(patch: &PatchSamples, layout: CoeffLayout) -> Vec<f64> {
    let mut c = vec![0.0; layout.len()];
    c[layout.h().start] = patch.median();
    c
}

/// Scratch buffers reused across iterations of one solve.
struct Workspace {
    residual: Vec<f64>,
    gram_alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl Workspace {
    fn new(geom: &PatchGeometry) -> Self {
        Self {
            residual: vec![0.0; geom.samples()],
            gram_alpha: vec![0.0; geom.samples()],
            grad: vec![0.0; geom.layout().len()],
        }
    }
}

fn check_dims(coeffs: &[f64], patch: &PatchSamples, geom: &PatchGeometry) -> Result<()> {
    if patch.n() != geom.n() {
        return Err(Error::invalid(format!(
            "patch size {} does not match geometry size {}",
            patch.n(),
            geom.n()
        )));
    }
    if coeffs.len() != geom.layout().len() {
        return Err(Error::invalid(format!(
            "expected {} coefficients, got {}",
            geom.layout().len(),
            coeffs.len()
        )));
    }
    Ok(())
}

/// Objective value at `c`; fills `ws.grad` with a subgradient when asked.
fn evaluate(
    c: &[f64],
    values: &[f64],
    geom: &PatchGeometry,
    p: &SolverParams,
    ws: &mut Workspace,
    with_grad: bool,
) -> f64 {
    let layout = geom.layout();
    let design = geom.design();
    let alpha = &c[layout.alpha()];
    let beta = &c[layout.beta()];
    let h = &c[layout.h()];

    let mut data = 0.0;
    for ((row, r), v) in design.rows().into_iter().zip(ws.residual.iter_mut()).zip(values) {
        let fit: f64 = row.iter().zip(c).map(|(d, x)| d * x).sum();
        *r = fit - v;
        data += r.abs();
    }

    geom.gram().mul_vec_into(alpha, &mut ws.gram_alpha);
    let rkhs: f64 = alpha.iter().zip(&ws.gram_alpha).map(|(a, ga)| a * ga).sum();
    let beta_sq: f64 = beta.iter().map(|b| b * b).sum();
    let h_sq = h[1] * h[1] + h[2] * h[2] + h[3] * h[3];
    let value = data + 0.5 * p.lambda * rkhs + 0.5 * p.mu * beta_sq + 0.5 * p.mu1 * h_sq;

    if with_grad {
        let g = &mut ws.grad;
        g.iter_mut().for_each(|x| *x = 0.0);
        for (row, r) in design.rows().into_iter().zip(&ws.residual) {
            let s = if *r > 0.0 {
                1.0
            } else if *r < 0.0 {
                -1.0
            } else {
                continue;
            };
            for (gj, d) in g.iter_mut().zip(row.iter()) {
                *gj += s * d;
            }
        }
        for (gj, ga) in g[layout.alpha()].iter_mut().zip(&ws.gram_alpha) {
            *gj += p.lambda * ga;
        }
        for (gj, b) in g[layout.beta()].iter_mut().zip(beta) {
            *gj += p.mu * b;
        }
        let hs = layout.h().start;
        for l in 1..4 {
            g[hs + l] += p.mu1 * h[l];
        }
    }
    value
}

pub fn objective(coeffs: &[f64], patch: &PatchSamples, geom: &PatchGeometry, params: &SolverParams) -> Result<f64> {
    check_dims(coeffs, patch, geom)?;
    let mut ws = Workspace::new(geom);
    Ok(evaluate(coeffs, patch.values(), geom, params, &mut ws, false))
}

/// `D^T sign(residual) + (lambda G alpha, mu beta, mu1 (0, h1, h2, h3))`
/// with `sign(0) = 0`.
pub fn subgradient(
    coeffs: &[f64],
    patch: &PatchSamples,
    geom: &PatchGeometry,
    params: &SolverParams,
) -> Result<Vec<f64>> {
    check_dims(coeffs, patch, geom)?;
    let mut ws = Workspace::new(geom);
    evaluate(coeffs, patch.values(), geom, params, &mut ws, true);
    Ok(ws.grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Best iterate seen.
    pub coeffs: Vec<f64>,
    /// Objective at `coeffs`.
    pub objective: f64,
    /// Objective at the starting point.
    pub initial_objective: f64,
    /// Subgradient steps taken.
    pub iterations: usize,
}

/// A fitted model together with its objective value.
#[derive(Debug, Clone)]
pub struct PatchFit {
    pub model: SemiParametricModel,
    pub objective: f64,
}

fn project_onto_ball(c: &mut [f64], radius: f64) {
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > radius {
        let s = radius / norm;
        c.iter_mut().for_each(|x| *x *= s);
    }
}

fn run(
    patch: &PatchSamples,
    geom: &PatchGeometry,
    params: &SolverParams,
    init: Option<&[f64]>,
    mut trace: Option<&mut SolveTrace>,
) -> Result<SolveOutcome> {
    params.validate()?;
    let mut c = match init {
        Some(c) => c.to_vec(),
        None => default_init(patch, geom.layout()),
    };
    check_dims(&c, patch, geom)?;

    let values = patch.values();
    let mut ws = Workspace::new(geom);
    let initial = evaluate(&c, values, geom, params, &mut ws, true);
    let mut best = initial;
    let mut best_c = c.clone();
    let mut history = Vec::with_capacity(params.max_iters + 1);
    history.push(best);
    if let Some(tr) = trace.as_deref_mut() {
        tr.record(best, &c);
    }

    let mut iterations = 0;
    for t in 0..params.max_iters {
        let gnorm = ws.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            // zero is a subgradient: the current point is optimal
            break;
        }
        let scale = params.step_c / ((t + 1) as f64).sqrt() / gnorm;
        for (x, g) in c.iter_mut().zip(&ws.grad) {
            *x -= scale * g;
        }
        project_onto_ball(&mut c, params.radius);
        iterations += 1;

        let value = evaluate(&c, values, geom, params, &mut ws, true);
        if value < best {
            best = value;
            best_c.copy_from_slice(&c);
        }
        debug_assert!(best <= *history.last().unwrap());
        history.push(best);
        if let Some(tr) = trace.as_deref_mut() {
            tr.record(best, &c);
        }

        if params.tol > 0.0 && history.len() > STALL_WINDOW {
            let past = history[history.len() - 1 - STALL_WINDOW];
            if past - best <= params.tol * past.abs() {
                break;
            }
        }
    }

    Ok(SolveOutcome {
        coeffs: best_c,
        objective: best,
        initial_objective: initial,
        iterations,
    })
}

/// Minimizes the patch objective over a prebuilt geometry. Starts from
/// `init` or from [`default_init`]; the result is the best iterate.
pub fn solve_with_geometry(
    patch: &PatchSamples,
    geom: &PatchGeometry,
    params: &SolverParams,
    init: Option<&[f64]>,
) -> Result<SolveOutcome> {
    run(patch, geom, params, init, None)
}

/// Per-iterate record of a solve, starting with the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Best objective so far.
    pub best: Vec<f64>,
    /// Euclidean norm of the iterate.
    pub norms: Vec<f64>,
}

impl SolveTrace {
    fn record(&mut self, best: f64, c: &[f64]) {
        self.best.push(best);
        self.norms.push(c.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
}

/// Like [`solve_with_geometry`], also returning a [`SolveTrace`].
pub fn solve_traced(
    patch: &PatchSamples,
    geom: &PatchGeometry,
    params: &SolverParams,
    init: Option<&[f64]>,
) -> Result<(SolveOutcome, SolveTrace)> {
    let mut trace = SolveTrace::default();
    let out = run(patch, geom, params, init, Some(&mut trace))?;
    Ok((out, trace))
}

pub fn solve_patch(
    patch: &PatchSamples,
    basis: &EdgeBasis,
    kernel: KernelParams,
    params: &SolverParams,
    init: Option<&[f64]>,
) -> Result<PatchFit> {
    let geom = PatchGeometry::new(patch.n(), kernel, basis.clone())?;
    let out = solve_with_geometry(patch, &geom, params, init)?;
    Ok(PatchFit {
        model: geom.model(&out.coeffs)?,
        objective: out.objective,
    })
}
