//! Multiple kernel learning over a finite dictionary with simplex weights.
//!
//! For squared loss the inner minimization over `c` has the closed form
//! `c = (K(d) + lambda I)^{-1} y` and leaves the reduced objective
//! `J(d) = lambda/2 * y' (K(d) + lambda I)^{-1} y`, which is convex in `d`.
//! Its gradient is `dJ/dd_k = -lambda/2 * c' K_k c`. We minimize `J` over the
//! standard simplex by projected gradient with spectral (Barzilai–Borwein)
//! trial steps and monotone Armijo backtracking.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gram::{combine, GramMatrix};
use crate::kernels::KernelSpec;
use crate::solver::factor;

/// Euclidean projection onto `{d : d >= 0, sum d = 1}` by sort and threshold.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Basis kernels and their Gram matrices on a common set of times.
///
/// Each basis kernel carries a positive scale; the Gram matrices held here are
/// already multiplied by it. Scales are 1 unless the dictionary was normalized.
#[derive(Debug, Clone)]
pub struct KernelDictionary {
    basis: Vec<KernelSpec>,
    grams: Vec<GramMatrix>,
    scales: Vec<f64>,
}

impl KernelDictionary {
    pub fn new(basis: Vec<KernelSpec>, grams: Vec<GramMatrix>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidArgument("empty kernel dictionary".into()));
        }
        if basis.len() != grams.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: grams.len(),
            });
        }
        let n = grams[0].len();
        if let Some(g) = grams.iter().find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        let scales = vec![1.0; basis.len()];
        Ok(Self {
            basis,
            grams,
            scales,
        })
    }

    /// Rescale every basis kernel so its Gram matrix has trace equal to the
    /// number of samples. Without this, kernels whose magnitude differs by
    /// orders of magnitude compete unevenly for the simplex weight.
    pub fn trace_normalized(self) -> Result<Self> {
        let n = self.grams[0].len() as f64;
        let mut grams = Vec::with_capacity(self.grams.len());
        let mut scales = Vec::with_capacity(self.grams.len());
        for (g, s0) in self.grams.into_iter().zip(self.scales) {
            let tr = g.matrix().trace();
            if !(tr > 0.0 && tr.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "cannot normalize a Gram matrix with trace {tr}"
                )));
            }
            let f = n / tr;
            let times = g.times().to_vec();
            grams.push(GramMatrix::new(g.matrix() * f, times)?);
            scales.push(s0 * f);
        }
        Ok(Self {
            basis: self.basis,
            grams,
            scales,
        })
    }

    pub fn basis(&self) -> &[KernelSpec] {
        &self.basis
    }

    pub fn grams(&self) -> &[GramMatrix] {
        &self.grams
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// `(d_k * scale_k, basis_k)` pairs, the kernel `sum_k d_k K_k` in terms
    /// of the unscaled basis.
    pub fn components(&self, d: &[f64]) -> Vec<(f64, KernelSpec)> {
        d.iter()
            .zip(&self.scales)
            .map(|(w, s)| w * s)
            .zip(self.basis.iter().cloned())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn combined(&self, d: &[f64]) -> DMatrix<f64> {
        combine(&self.grams, d)
    }

    pub fn uniform_weights(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MklOptions {
    /// Stop once the projected-gradient residual, or the relative objective
    /// decrease on two consecutive steps, falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    /// Weights below this are set to zero and the rest renormalized.
    pub clamp: f64,
}

impl Default for MklOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            armijo: 1e-4,
            clamp: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MklModel {
    pub weights: Vec<f64>,
    pub coefficients: DVector<f64>,
    pub lambda: f64,
    /// `J` after each accepted step, starting with the initial weights.
    pub objective_trace: Vec<f64>,
    /// `||d - P(d - grad J(d))||` at the returned weights.
    pub stationarity: f64,
}

impl MklModel {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }
}

/// `(J(d), c)` for the combined kernel `sum d_k K_k`.
pub fn reduced_objective(
    dict: &KernelDictionary,
    d: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<(f64, DVector<f64>)> {
    let k = dict.combined(d);
    let ch = factor(&k, lambda)?;
    let yv = DVector::from_column_slice(y);
    let c = ch.solve(&yv);
    Ok((0.5 * lambda * yv.dot(&c), c))
}

fn gradient(dict: &KernelDictionary, c: &DVector<f64>, lambda: f64) -> Vec<f64> {
    dict.grams
        .iter()
        .map(|g| -0.5 * lambda * c.dot(&(g.matrix() * c)))
        .collect()
}

fn stationarity(d: &[f64], g: &[f64]) -> f64 {
    let trial: Vec<f64> = d.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = simplex_project(&trial);
    d.iter()
        .zip(&p)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn clamp_weights(d: &mut [f64], floor: f64) {
    for w in d.iter_mut() {
        if *w < floor {
            *w = 0.0;
        }
    }
    let s: f64 = d.iter().sum();
    for w in d.iter_mut() {
        *w /= s;
    }
}

/// Minimize the reduced objective over the simplex, starting from uniform weights.
pub fn fit_mkl(
    dict: &KernelDictionary,
    y: &[f64],
    lambda: f64,
    opts: &MklOptions,
) -> Result<MklModel> {
    fit_mkl_from(dict, y, lambda, &dict.uniform_weights(), opts)
}

/// [`fit_mkl`] started from `init` (projected onto the simplex first), for
/// warm starts along a `lambda` path.
pub fn fit_mkl_from(
    dict: &KernelDictionary,
    y: &[f64],
    lambda: f64,
    init: &[f64],
    opts: &MklOptions,
) -> Result<MklModel> {
    let n = dict.grams[0].len();
    if init.len() != dict.len() {
        return Err(Error::DimensionMismatch {
            expected: dict.len(),
            got: init.len(),
        });
    }
    if init.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("initial weights must be finite".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let m = dict.len();
    let mut d = simplex_project(init);
    let (mut obj, mut c) = reduced_objective(dict, &d, y, lambda)?;
    let mut g = gradient(dict, &c, lambda);
    let mut trace = vec![obj];
    if m == 1 {
        return Ok(MklModel {
            weights: d,
            coefficients: c,
            lambda,
            objective_trace: trace,
            stationarity: 0.0,
        });
    }
    let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut step = if gmax > 0.0 { 1.0 / gmax } else { 1.0 };
    let mut small_steps = 0;
    for _ in 0..opts.max_iter {
        if stationarity(&d, &g) <= opts.tol {
            break;
        }
        let mut s = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = d.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            let mut d_new = simplex_project(&trial);
            clamp_weights(&mut d_new, opts.clamp);
            let dir: f64 = d_new.iter().zip(&d).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            if dir >= 0.0 {
                // projected direction is not a descent direction: stationary to round-off
                break;
            }
            let (o_new, c_new) = reduced_objective(dict, &d_new, y, lambda)?;
            if o_new <= obj + opts.armijo * dir {
                accepted = Some((d_new, o_new, c_new));
                break;
            }
            s *= 0.5;
        }
        let Some((d_new, o_new, c_new)) = accepted else {
            break;
        };
        let g_new = gradient(dict, &c_new, lambda);
        // Barzilai–Borwein trial step for the next iteration
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..m {
            let sd = d_new[k] - d[k];
            ss += sd * sd;
            sy += sd * (g_new[k] - g[k]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { s * 2.0 };
        let decrease = obj - o_new;
        d = d_new;
        obj = o_new;
        c = c_new;
        g = g_new;
        trace.push(obj);
        if decrease <= opts.tol * obj.abs().max(f64::MIN_POSITIVE) {
            small_steps += 1;
            if small_steps >= 2 {
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    Ok(MklModel {
        stationarity: stationarity(&d, &g),
        weights: d,
        coefficients: c,
        lambda,
        objective_trace: trace,
    })
}

/// Indices with weight above `threshold`, heaviest first.
pub fn active_atoms(model: &MklModel, threshold: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = model
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > threshold)
        .map(|(i, &w)| (i, w))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_fixed_points_and_vertices() {
        let v = [0.2, 0.3, 0.5];
        let p = simplex_project(&v);
        for (a, b) in p.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(simplex_project(&[10.0, 0.0]), vec![1.0, 0.0]);
        let p = simplex_project(&[-3.0, -1.0, -2.0]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn active_atoms_sorted_and_filtered() {
        let model = MklModel {
            weights: vec![0.005, 0.6, 0.0, 0.395],
            coefficients: DVector::zeros(1),
            lambda: 1.0,
            objective_trace: vec![0.0],
            stationarity: 0.0,
        };
        assert_eq!(active_atoms(&model, 0.01), vec![(1, 0.6), (3, 0.395)]);
        assert!(active_atoms(&model, 0.7).is_empty());
        let vertex = MklModel {
            weights: vec![1.0, 0.0, 0.0],
            ..model
        };
        assert_eq!(active_atoms(&vertex, 0.01), vec![(0, 1.0)]);
    }
}
