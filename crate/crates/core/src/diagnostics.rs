//! Numerical probes of kernel-level properties: integrability (stability),
//! relative degree and smoothness of kernel sections.
//!
//! None of these can prove a property. They report trends on finite horizons
//! and finite-difference estimates, with an explicit inconclusive outcome.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::moments::binomial;
use crate::quadrature::{panel_breaks, GaussLegendre, QuadratureConfig};

/// Bounded test function `h` used in the necessary condition
/// `int |int K(t1, t2) h(t1) dt1| dt2 < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    Constant,
    Cosine(f64),
}

impl Probe {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Probe::Constant => 1.0,
            Probe::Cosine(w) => (w * t).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendThresholds {
    /// Increments below this fraction of the running value count as converged.
    pub bounded_rel: f64,
    /// Minimum growth over one doubling of the horizon to call a series diverging.
    pub diverging_growth: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self {
            bounded_rel: 1e-6,
            diverging_growth: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub horizons: Vec<f64>,
    /// `int int_{[0,T]^2} |K|` for each horizon.
    pub l1_values: Vec<f64>,
    /// `int_0^T |int_0^T K(t1, t2) h(t1) dt1| dt2` for the probe `h`.
    pub lemma2_values: Vec<f64>,
    pub probe: Probe,
    pub verdict: Verdict,
}

const GEOMETRIC_BREAKS: i32 = 12;

fn graded_breaks(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let len = hi - lo;
    let geo = (1..=GEOMETRIC_BREAKS).map(|j| lo + len * 2f64.powi(-j));
    panel_breaks(lo, hi, geo.chain(extra.iter().copied()))
}

const SIGN_SAMPLES: usize = 256;

/// Zeros of `g` on `[lo, hi]` bracketed by sign changes on a uniform grid and
/// refined by bisection. Oscillating kernels put a kink in `|g|` at each one.
fn sign_changes(g: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / SIGN_SAMPLES as f64;
    let mut out = Vec::new();
    let mut a = lo;
    let mut ga = g(a);
    for i in 1..=SIGN_SAMPLES {
        let b = if i == SIGN_SAMPLES { hi } else { lo + i as f64 * step };
        let gb = g(b);
        if ga * gb < 0.0 {
            let (mut l, mut r, mut gl) = (a, b, ga);
            for _ in 0..60 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                let gm = g(m);
                if gm * gl > 0.0 {
                    l = m;
                    gl = gm;
                } else {
                    r = m;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    out
}

/// `int_{y0}^{y1} int_{x0}^{x1} |f(x, y)| dx dy` by nested adaptive Gauss–Legendre,
/// with the diagonal `x = y` and the zeros of `f` as inner breakpoints.
fn nested_integral(
    f: &(impl Fn(f64, f64) -> f64 + ?Sized),
    x: (f64, f64),
    y: (f64, f64),
    rule: &GaussLegendre,
    tol: f64,
) -> Result<f64> {
    if !(x.1 > x.0 && y.1 > y.0) {
        return Ok(0.0);
    }
    let failure: Cell<Option<Error>> = Cell::new(None);
    let inner = |yv: f64| -> f64 {
        let mut extra = sign_changes(&|xv| f(xv, yv), x.0, x.1);
        extra.push(yv);
        let breaks = graded_breaks(x.0, x.1, &extra);
        match rule.integrate_panels(|xv| f(xv, yv).abs(), &breaks, tol * 0.1) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let outer_breaks = graded_breaks(y.0, y.1, &[x.0, x.1]);
    let out = rule.integrate_panels(inner, &outer_breaks, tol);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    out
}

fn support_start<K: Kernel + ?Sized>(kernel: &K) -> f64 {
    kernel.delay().max(0.0)
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("horizon must be positive, got {t}")))
    }
}

/// `int int_{[0,T]^2} |K(t1, t2)| dt1 dt2`.
pub fn l1_norm_estimate<K: Kernel + ?Sized>(
    kernel: &K,
    horizon: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    check_horizon(horizon)?;
    q.validate()?;
    let lo = support_start(kernel);
    let f = |a: f64, b: f64| kernel.eval(a, b);
    nested_integral(&f, (lo, horizon), (lo, horizon), &q.rule(), q.entry_rel_tol)
}

/// `int_0^T |int_0^T K(t1, t2) h(t1) dt1| dt2`.
pub fn lemma2_integral<K: Kernel + ?Sized>(
    kernel: &K,
    horizon: f64,
    probe: Probe,
    q: &QuadratureConfig,
) -> Result<f64> {
    check_horizon(horizon)?;
    q.validate()?;
    let lo = support_start(kernel);
    if horizon <= lo {
        return Ok(0.0);
    }
    let rule = q.rule();
    let tol = q.entry_rel_tol;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let inner = |t2: f64| -> f64 {
        let breaks = graded_breaks(lo, horizon, &[t2]);
        match rule.integrate_panels(|t1| kernel.eval(t1, t2) * probe.eval(t1), &breaks, tol * 0.1) {
            Ok(v) => v.abs(),
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let out = rule.integrate_panels(inner, &graded_breaks(lo, horizon, &[]), tol);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    out
}

/// `l1_values` accumulated over nested squares so the sequence is monotone by construction.
fn l1_series<K: Kernel + ?Sized>(
    kernel: &K,
    horizons: &[f64],
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let lo = support_start(kernel);
    let rule = q.rule();
    let tol = q.entry_rel_tol;
    let f = |a: f64, b: f64| kernel.eval(a, b);
    let pieces: Vec<Result<f64>> = (0..horizons.len())
        .into_par_iter()
        .map(|k| {
            let hi = horizons[k].max(lo);
            let prev = if k == 0 { lo } else { horizons[k - 1].max(lo) };
            // L-shaped shell = two symmetric strips plus the new corner square
            let strip = nested_integral(&f, (prev, hi), (lo, prev), &rule, tol)?;
            let corner = nested_integral(&f, (prev, hi), (prev, hi), &rule, tol)?;
            Ok(2.0 * strip + corner)
        })
        .collect();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    for p in pieces {
        acc += p?;
        out.push(acc);
    }
    Ok(out)
}

/// Classify a series of values on increasing horizons.
pub fn classify_trend(horizons: &[f64], values: &[f64], th: &TrendThresholds) -> Verdict {
    let n = values.len();
    if n < 3 || horizons.len() != n {
        return Verdict::Inconclusive;
    }
    let last = values[n - 1];
    let inc_last = values[n - 1] - values[n - 2];
    let inc_prev = values[n - 2] - values[n - 3];
    let scale = th.bounded_rel * last.abs();
    if last == 0.0 && inc_last == 0.0 && inc_prev == 0.0 {
        return Verdict::Bounded;
    }
    if inc_last.abs() < scale && inc_prev.abs() < scale {
        return Verdict::Bounded;
    }
    // increments shrinking geometrically: the remaining tail is at most inc * rho / (1 - rho)
    if inc_prev > 0.0 && inc_last >= 0.0 {
        let rho = inc_last / inc_prev;
        if rho < 1.0 && inc_last * rho / (1.0 - rho) <= scale {
            return Verdict::Bounded;
        }
    }
    let incs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let nondecreasing = incs
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(values[n - 1].abs()));
    let prev = values[n - 2];
    if nondecreasing && prev > 0.0 && inc_last > 0.0 {
        let doublings = (horizons[n - 1] / horizons[n - 2]).log2();
        let growth = (last / prev).powf(1.0 / doublings) - 1.0;
        if growth > th.diverging_growth {
            return Verdict::Diverging;
        }
    }
    Verdict::Inconclusive
}

fn check_horizons(horizons: &[f64]) -> Result<()> {
    if horizons.len() < 3 {
        return Err(Error::InvalidArgument("at least three horizons are needed".into()));
    }
    for &h in horizons {
        check_horizon(h)?;
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("horizons must be strictly increasing".into()));
    }
    Ok(())
}

/// Stability evidence with the constant probe and default thresholds.
pub fn stability_trend<K: Kernel + ?Sized>(
    kernel: &K,
    horizons: &[f64],
    q: &QuadratureConfig,
) -> Result<StabilityReport> {
    stability_trend_with(kernel, horizons, Probe::Constant, &TrendThresholds::default(), q)
}

/// The L1 series decides `bounded`; either series may establish `diverging`.
pub fn stability_trend_with<K: Kernel + ?Sized>(
    kernel: &K,
    horizons: &[f64],
    probe: Probe,
    th: &TrendThresholds,
    q: &QuadratureConfig,
) -> Result<StabilityReport> {
    check_horizons(horizons)?;
    q.validate()?;
    let l1_values = l1_series(kernel, horizons, q)?;
    let lemma2_values = horizons
        .par_iter()
        .map(|&t| lemma2_integral(kernel, t, probe, q))
        .collect::<Result<Vec<f64>>>()?;
    let verdict = match classify_trend(horizons, &l1_values, th) {
        Verdict::Bounded => Verdict::Bounded,
        Verdict::Diverging => Verdict::Diverging,
        Verdict::Inconclusive => match classify_trend(horizons, &lemma2_values, th) {
            Verdict::Diverging => Verdict::Diverging,
            _ => Verdict::Inconclusive,
        },
    };
    Ok(StabilityReport {
        horizons: horizons.to_vec(),
        l1_values,
        lemma2_values,
        probe,
        verdict,
    })
}

/// `int_0^T (pi/2 - atan s) ds`, the inner-integrated constant probe for
/// `1 / (1 + (t1 + t2)^2)` on the half line.
pub fn counterexample_lemma2_integral(horizon: f64) -> f64 {
    if !(horizon > 0.0) {
        return 0.0;
    }
    // pi/2 - atan s = atan(1/s) without cancellation for large s
    let f = |s: f64| if s == 0.0 { FRAC_PI_2 } else { (1.0 / s).atan() };
    let rule = GaussLegendre::new(12);
    rule.integrate_panels(f, &graded_breaks(0.0, horizon, &[1.0]), 1e-14)
        .unwrap_or(f64::NAN)
}

/// Closed form of [`counterexample_lemma2_integral`].
pub fn counterexample_lemma2_closed_form(horizon: f64) -> f64 {
    horizon * (FRAC_PI_2 - horizon.atan()) + 0.5 * horizon.mul_add(horizon, 1.0).ln()
}

pub const DEFAULT_DEGREE_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_H_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProbe {
    pub section_time: f64,
    /// Forward-difference estimates of the `i`-th derivative of the section at `0+`.
    pub derivative_estimates: Vec<f64>,
    /// `1 +` the first order whose estimate exceeds the threshold.
    pub estimated_degree: Option<usize>,
}

fn forward_difference(f: &impl Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    let n = order as u32;
    let mut acc = 0.0;
    for j in 0..=n {
        let sign = if (n - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binomial(n, j) * f(x + j as f64 * h);
    }
    acc / h.powi(order as i32)
}

fn backward_difference(f: &impl Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    let n = order as u32;
    let mut acc = 0.0;
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, j) * f(x - j as f64 * h);
    }
    acc / h.powi(order as i32)
}

/// Relative degree from one-sided derivatives of `tau -> K(tau, t)` at `0+`.
pub fn relative_degree_probe<K: Kernel + ?Sized>(
    kernel: &K,
    t: f64,
    max_order: usize,
    h_step: f64,
) -> Result<DegreeProbe> {
    relative_degree_probe_with(kernel, t, max_order, h_step, DEFAULT_DEGREE_THRESHOLD)
}

pub fn relative_degree_probe_with<K: Kernel + ?Sized>(
    kernel: &K,
    t: f64,
    max_order: usize,
    h_step: f64,
    threshold: f64,
) -> Result<DegreeProbe> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("section time must be positive, got {t}")));
    }
    if max_order > 4 {
        return Err(Error::InvalidArgument("max_order must be <= 4".into()));
    }
    if !(h_step > 0.0 && t - max_order as f64 * h_step > 0.0) {
        return Err(Error::InvalidArgument(format!("h_step {h_step} too large for t = {t}")));
    }
    let d = kernel.delay();
    let section = |tau: f64| kernel.eval(d + tau, d + t);
    let derivative_estimates: Vec<f64> = (0..=max_order)
        .map(|i| forward_difference(&section, 0.0, i, h_step))
        .collect();
    let estimated_degree = derivative_estimates
        .iter()
        .position(|e| e.abs() > threshold)
        .map(|i| i + 1);
    Ok(DegreeProbe {
        section_time: t,
        derivative_estimates,
        estimated_degree,
    })
}

/// One-sided derivative estimates of the section `tau -> K(tau, t)` at an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProbe {
    pub tau: f64,
    pub order: usize,
    /// Backward stencils ending at `tau`, steps `h` and `h/2`.
    pub left: [f64; 2],
    /// Forward stencils starting at `tau`, steps `h` and `h/2`.
    pub right: [f64; 2],
}

impl SmoothnessProbe {
    pub fn estimates(&self) -> Vec<f64> {
        vec![self.left[0], self.left[1], self.right[0], self.right[1]]
    }

    /// Mean of the four estimates.
    pub fn estimate(&self) -> f64 {
        self.estimates().iter().sum::<f64>() / 4.0
    }

    /// Whether all stencils agree to `rel_tol` (or to `abs_tol` near zero).
    pub fn agrees(&self, rel_tol: f64, abs_tol: f64) -> bool {
        let e = self.estimates();
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = e.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        hi - lo <= rel_tol * scale || hi - lo <= abs_tol
    }

    pub fn is_differentiable(&self) -> bool {
        self.agrees(1e-3, 1e-6)
    }
}

pub fn smoothness_probe<K: Kernel + ?Sized>(
    kernel: &K,
    t: f64,
    tau: f64,
    order: usize,
    h_step: f64,
) -> Result<SmoothnessProbe> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("section time must be positive, got {t}")));
    }
    if order == 0 || order > 3 {
        return Err(Error::InvalidArgument("order must be in 1..=3".into()));
    }
    if !(h_step > 0.0 && tau - order as f64 * h_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} must lie at least order * h_step inside the open half line"
        )));
    }
    let d = kernel.delay();
    let section = |x: f64| kernel.eval(d + x, d + t);
    let left = [
        backward_difference(&section, tau, order, h_step),
        backward_difference(&section, tau, order, 0.5 * h_step),
    ];
    let right = [
        forward_difference(&section, tau, order, h_step),
        forward_difference(&section, tau, order, 0.5 * h_step),
    ];
    Ok(SmoothnessProbe {
        tau,
        order,
        left,
        right,
    })
}
