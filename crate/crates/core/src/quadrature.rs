//! Panelized Gauss–Legendre quadrature with adaptive bisection.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Accuracy knobs shared by every numerical integral in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub panel_order: usize,
    /// Target relative accuracy of each integral.
    pub entry_rel_tol: f64,
    /// Truncation time for semi-infinite diagnostic integrals.
    pub horizon: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_order: 8,
            entry_rel_tol: 1e-8,
            horizon: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panel_order < 2 {
            return Err(Error::InvalidArgument("panel_order must be >= 2".into()));
        }
        if !(self.entry_rel_tol > 0.0) {
            return Err(Error::InvalidArgument("entry_rel_tol must be positive".into()));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("horizon must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.panel_order)
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MAX_DEPTH: u32 = 48;

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrate over the panels delimited by `breaks` (sorted), bisecting
    /// each panel until the one-level refinement agrees with the coarse value.
    pub fn integrate_panels(
        &self,
        mut f: impl FnMut(f64) -> f64,
        breaks: &[f64],
        rel_tol: f64,
    ) -> Result<f64> {
        let panels: Vec<(f64, f64)> = breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1]))
            .collect();
        if panels.is_empty() {
            return Ok(0.0);
        }
        let total = panels.last().unwrap().1 - panels[0].0;
        let coarse: Vec<f64> = panels
            .iter()
            .map(|&(a, b)| self.integrate(&mut f, a, b))
            .collect();
        let scale: f64 = coarse.iter().map(|v| v.abs()).sum();
        let abs_tol = rel_tol * scale * 1e-2;
        let mut acc = 0.0;
        for (&(a, b), &c) in panels.iter().zip(&coarse) {
            acc += self.refine(&mut f, (a, b), c, rel_tol, (abs_tol, total), 0)?;
        }
        Ok(acc)
    }

    fn refine(
        &self,
        f: &mut impl FnMut(f64) -> f64,
        (a, b): (f64, f64),
        coarse: f64,
        rel_tol: f64,
        (abs_tol, total): (f64, f64),
        depth: u32,
    ) -> Result<f64> {
        let abs_density = abs_tol / total;
        let m = 0.5 * (a + b);
        let left = self.integrate(f, a, m);
        let right = self.integrate(f, m, b);
        let fine = left + right;
        let err = (fine - coarse).abs();
        if err <= rel_tol * fine.abs() || err <= abs_density * (b - a) || !fine.is_finite() {
            if !fine.is_finite() {
                return Err(Error::QuadratureNonConvergence {
                    lo: a,
                    hi: b,
                    tol: rel_tol,
                });
            }
            return Ok(fine);
        }
        // Integrands that are themselves adaptive integrals carry a noise floor
        // that does not shrink with the panel; accept a sliver whose error is
        // negligible against the whole budget.
        if b - a <= 1e-9 * total && err <= 1e-3 * abs_tol {
            return Ok(fine);
        }
        if depth >= MAX_DEPTH || m <= a || m >= b {
            return Err(Error::QuadratureNonConvergence {
                lo: a,
                hi: b,
                tol: rel_tol,
            });
        }
        Ok(self.refine(f, (a, m), left, rel_tol, (abs_tol, total), depth + 1)?
            + self.refine(f, (m, b), right, rel_tol, (abs_tol, total), depth + 1)?)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, endpoints included.
pub fn panel_breaks(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = std::iter::once(lo)
        .chain(interior.into_iter().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Composite trapezoid rule on `n` equispaced nodes of `[a, b]`.
pub fn trapezoid(values: &[f64], a: f64, b: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let h = (b - a) / (n - 1) as f64;
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (0.5 * (values[0] + values[n - 1]) + inner)
}
