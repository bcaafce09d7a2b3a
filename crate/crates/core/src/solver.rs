//! Regularized least squares on a kernel matrix and GCV choice of `lambda`.
//!
//! With squared loss `L(y, z) = (y - z)^2 / 2`, the finite-dimensional problem
//! `min_c sum_i L(y_i, (Kc)_i) + lambda/2 c'Kc` is solved by
//! `(K + lambda I) c = y`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gram::{cross_gram, representer_matrix, GramEngine};
use crate::kernels::KernelSpec;
use crate::quadrature::QuadratureConfig;
use crate::signals::PiecewiseConstantSignal;

fn check_len(k: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if !k.is_square() || k.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: y.len(),
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")))
    }
}

/// Cholesky factor of `K + lambda I`, retried once with a diagonal jitter of
/// `1e-12 * trace(K) / n`.
pub(crate) fn factor(
    k: &DMatrix<f64>,
    lambda: f64,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = k.nrows();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch);
    }
    let jitter = 1e-12 * k.trace().abs() / n as f64;
    for i in 0..n {
        a[(i, i)] += jitter;
    }
    a.cholesky().ok_or(Error::IllConditioned { lambda })
}

/// Coefficients `c = (K + lambda I)^{-1} y`.
pub fn fit_rls(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<DVector<f64>> {
    check_len(k, y)?;
    check_lambda(lambda)?;
    let ch = factor(k, lambda)?;
    Ok(ch.solve(&DVector::from_column_slice(y)))
}

/// Objective `sum (y - Kc)^2 / 2 + lambda/2 c'Kc`.
pub fn rls_objective(k: &DMatrix<f64>, y: &[f64], lambda: f64, c: &DVector<f64>) -> f64 {
    let kc = k * c;
    let fit: f64 = y.iter().zip(kc.iter()).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    fit + 0.5 * lambda * c.dot(&kc)
}

/// `n ||(I - H) y||^2 / trace(I - H)^2` with `H = K (K + lambda I)^{-1}`.
pub fn gcv_score(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<f64> {
    check_len(k, y)?;
    check_lambda(lambda)?;
    let n = y.len() as f64;
    let ch = factor(k, lambda)?;
    let c = ch.solve(&DVector::from_column_slice(y));
    // I - H = lambda (K + lambda I)^{-1}
    let trace = lambda * ch.inverse().trace();
    if !(trace > 0.0) {
        return Err(Error::DegenerateSmoother { lambda, trace });
    }
    let resid = lambda * c.norm();
    Ok(n * resid * resid / (trace * trace))
}

/// Scores over a `lambda` grid and the selected value.
#[derive(Debug, Clone, PartialEq)]
pub struct GcvResult {
    pub lambda_grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub selected: f64,
}

/// `n` points log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Default grid: 30 points log-spaced in `[1e-8, 1e2]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-8, 1e2, 30)
}

/// Eigenvalues of the symmetric `k` and the coordinates of `y` in its eigenbasis.
///
/// All-zero rows (samples taken before the input is ever nonzero) are exact
/// eigenpairs and are split off first; nalgebra's solver can return NaN on
/// matrices that contain many of them.
pub(crate) fn spectral_coordinates(k: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = k.nrows();
    let live: Vec<usize> = (0..n)
        .filter(|&i| k.row(i).iter().any(|&x| x != 0.0))
        .collect();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for i in (0..n).filter(|i| !live.contains(i)) {
        eigenvalues.push(0.0);
        z.push(y[i]);
    }
    if !live.is_empty() {
        let sub = k.select_rows(&live).select_columns(&live);
        let eig = sub.symmetric_eigen();
        let ys = DVector::from_iterator(live.len(), live.iter().map(|&i| y[i]));
        let zs = eig.eigenvectors.transpose() * ys;
        eigenvalues.extend(eig.eigenvalues.iter());
        z.extend(zs.iter());
    }
    (eigenvalues, z)
}

/// GCV over `grid` using one eigendecomposition of `K`; ties go to the larger `lambda`.
pub fn select_lambda(k: &DMatrix<f64>, y: &[f64], grid: &[f64]) -> Result<GcvResult> {
    check_len(k, y)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("lambda grid must be ascending".into()));
    }
    for &l in grid {
        check_lambda(l)?;
    }
    let n = y.len() as f64;
    let (eigenvalues, z) = spectral_coordinates(k, y);
    let scores: Vec<f64> = grid
        .iter()
        .map(|&lambda| {
            let mut num = 0.0;
            let mut trace = 0.0;
            for (e, zi) in eigenvalues.iter().zip(z.iter()) {
                // eigenvalues below zero are round-off on a PSD matrix
                let f = lambda / (e.max(0.0) + lambda);
                num += f * f * zi * zi;
                trace += f;
            }
            if trace > 0.0 {
                n * num / (trace * trace)
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if s > b => {}
            _ => best = Some((i, s)),
        }
    }
    let (idx, _) = best.ok_or(Error::LambdaSelection)?;
    Ok(GcvResult {
        lambda_grid: grid.to_vec(),
        scores,
        selected: grid[idx],
    })
}

/// A fitted impulse-response model `h*(t) = sum_i c_i sum_k w_k (u * K_k,t)(t_i)`.
#[derive(Debug, Clone)]
pub struct IdentifiedModel {
    components: Vec<(f64, KernelSpec)>,
    input: PiecewiseConstantSignal,
    times: Vec<f64>,
    coefficients: DVector<f64>,
    lambda: f64,
    quadrature: QuadratureConfig,
}

impl IdentifiedModel {
    /// Model over a weighted kernel mixture; zero-weight components are dropped.
    pub fn new(
        components: Vec<(f64, KernelSpec)>,
        input: PiecewiseConstantSignal,
        times: Vec<f64>,
        coefficients: DVector<f64>,
        lambda: f64,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        if coefficients.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: coefficients.len(),
            });
        }
        check_lambda(lambda)?;
        quadrature.validate()?;
        Ok(Self {
            components: components.into_iter().filter(|(w, _)| *w != 0.0).collect(),
            input,
            times,
            coefficients,
            lambda,
            quadrature,
        })
    }

    pub fn single(
        spec: KernelSpec,
        input: PiecewiseConstantSignal,
        times: Vec<f64>,
        coefficients: DVector<f64>,
        lambda: f64,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        Self::new(vec![(1.0, spec)], input, times, coefficients, lambda, quadrature)
    }

    pub fn components(&self) -> &[(f64, KernelSpec)] {
        &self.components
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn input(&self) -> &PiecewiseConstantSignal {
        &self.input
    }

    /// `h*(t)`; exactly zero for `t < 0`.
    pub fn eval_impulse_response(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (w, spec) in &self.components {
            let engine = GramEngine::new(spec, &self.quadrature)?;
            let mut part = 0.0;
            for (ti, ci) in self.times.iter().zip(self.coefficients.iter()) {
                part += ci * engine.representer(&engine.excitation(&self.input, *ti), t - spec.delay())?;
            }
            acc += w * part;
        }
        Ok(acc)
    }

    /// `y*(t) = sum_i c_i sum_k w_k K_k(t_i, t)` with the doubly-convolved cross-kernel.
    pub fn predict_output(&self, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, spec) in &self.components {
            let col = cross_gram(spec, &self.input, &self.times, &[t], &self.quadrature)?;
            acc += w * dot_row(&col, 0, &self.coefficients);
        }
        Ok(acc)
    }

    /// `h*` on many points at once.
    pub fn impulse_curve(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; ts.len()];
        for (w, spec) in &self.components {
            let r = representer_matrix(spec, &self.input, &self.times, ts, &self.quadrature)?;
            for (q, o) in out.iter_mut().enumerate() {
                if ts[q] >= 0.0 {
                    *o += w * dot_row(&r, q, &self.coefficients);
                }
            }
        }
        Ok(out)
    }

    /// `y*` on many points at once.
    pub fn output_curve(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; ts.len()];
        for (w, spec) in &self.components {
            let m = cross_gram(spec, &self.input, &self.times, ts, &self.quadrature)?;
            for (q, o) in out.iter_mut().enumerate() {
                *o += w * dot_row(&m, q, &self.coefficients);
            }
        }
        Ok(out)
    }
}

/// Sequential `sum_i m[row, i] c_i`.
pub(crate) fn dot_row(m: &DMatrix<f64>, row: usize, c: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for (i, ci) in c.iter().enumerate() {
        acc += m[(row, i)] * ci;
    }
    acc
}

/// Free-function form of [`IdentifiedModel::eval_impulse_response`].
pub fn eval_impulse_response(model: &IdentifiedModel, t: f64) -> Result<f64> {
    model.eval_impulse_response(t)
}

/// Free-function form of [`IdentifiedModel::predict_output`].
pub fn predict_output(model: &IdentifiedModel, t: f64) -> Result<f64> {
    model.predict_output(t)
}
