//! Representers and kernel matrices of convolution functionals.
//!
//! For an input `u` and sample times `t_i` the kernel matrix is
//!
//! ```text
//! K_ij = int int u(t_i - s1) u(t_j - s2) K(s1, s2) ds1 ds2
//! ```
//!
//! With a piecewise-constant input, `s -> u(t_i - s)` is constant on a handful
//! of lag segments, so each entry is a sum over segment pairs of the kernel's
//! integral over a rectangle. Exponential and cosine mixtures are separable
//! and reduce to products of one-dimensional closed forms. Warped mixtures are
//! split along the diagonal crease `s1 = s2`: off-diagonal blocks are separable
//! and diagonal blocks are polynomial-times-exponential integrals, evaluated
//! in closed form for `G = min`. The cubic spline's diagonal block and the
//! Gaussian kernel go through panelized Gauss–Legendre on top of a closed-form
//! inner integral.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{BaseShape, Kernel, KernelFamily, KernelSpec, TiShape};
use crate::moments::{poly_exp_integral, poly_moment, poly_mul, shifted_power, shifted_power_integral};
use crate::quadrature::{panel_breaks, GaussLegendre, QuadratureConfig};
use crate::signals::{DiscreteSignal, LagSegment, PiecewiseConstantSignal, TimeDomain};

/// Dense symmetric kernel matrix together with the times it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    times: Vec<f64>,
}

impl GramMatrix {
    pub fn new(entries: DMatrix<f64>, times: Vec<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: entries.nrows(),
            });
        }
        Ok(Self { entries, times })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_extremes(&self) -> (f64, f64) {
        let zeros = vec![0.0; self.len()];
        let (ev, _) = crate::solver::spectral_coordinates(&self.entries, &zeros);
        ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)))
    }
}

/// Precomputed lag segments of one sample time, shifted by the kernel delay.
#[derive(Debug, Clone)]
pub struct Excitation {
    segments: Vec<LagSegment>,
}

impl Excitation {
    pub fn new(spec: &KernelSpec, u: &PiecewiseConstantSignal, t: f64) -> Self {
        Self {
            segments: u.lag_segments(t - spec.delay()),
        }
    }

    pub fn segments(&self) -> &[LagSegment] {
        &self.segments
    }
}

/// Evaluates entries and representers for one kernel.
pub struct GramEngine<'a> {
    spec: &'a KernelSpec,
    rule: GaussLegendre,
    tol: f64,
}

impl<'a> GramEngine<'a> {
    pub fn new(spec: &'a KernelSpec, q: &QuadratureConfig) -> Result<Self> {
        q.validate()?;
        Ok(Self {
            spec,
            rule: q.rule(),
            tol: q.entry_rel_tol,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        self.spec
    }

    pub fn excitation(&self, u: &PiecewiseConstantSignal, t: f64) -> Excitation {
        Excitation::new(self.spec, u, t)
    }

    /// Doubly-convolved kernel between two excitations.
    pub fn entry(&self, a: &Excitation, b: &Excitation) -> Result<f64> {
        let (sa, sb) = (&a.segments, &b.segments);
        if sa.is_empty() || sb.is_empty() {
            return Ok(0.0);
        }
        match self.spec.family() {
            KernelFamily::Heaviside => Ok(exp_transform(sa, 0.0) * exp_transform(sb, 0.0)),
            KernelFamily::ExponentialMixture(atoms) => Ok(atoms
                .iter()
                .map(|at| at.mass * exp_transform(sa, at.rate) * exp_transform(sb, at.rate))
                .sum()),
            KernelFamily::TranslationInvariant {
                atoms,
                shape: TiShape::CosineMixture,
            } => Ok(atoms
                .iter()
                .map(|at| {
                    let (ca, sa_) = cos_sin_transform(sa, at.rate);
                    let (cb, sb_) = cos_sin_transform(sb, at.rate);
                    at.mass * (ca * cb + sa_ * sb_)
                })
                .sum()),
            KernelFamily::TranslationInvariant {
                atoms,
                shape: TiShape::Gaussian,
            } => {
                let mut acc = 0.0;
                for at in atoms {
                    for x in sa {
                        for y in sb {
                            acc += at.mass
                                * x.level
                                * y.level
                                * self.gaussian_rect(at.rate, (x.lo, x.hi), (y.lo, y.hi))?;
                        }
                    }
                }
                Ok(acc)
            }
            KernelFamily::WarpedMixture { atoms, warp, shape } => {
                let mut acc = 0.0;
                for at in atoms {
                    let mut per_atom = 0.0;
                    for x in sa {
                        for y in sb {
                            per_atom += x.level
                                * y.level
                                * self.warped_rect(*shape, *warp, at.rate, (x.lo, x.hi), (y.lo, y.hi))?;
                        }
                    }
                    acc += at.mass * per_atom;
                }
                Ok(acc)
            }
        }
    }

    /// `int u(t_s - D - x) Kt(x, tau) dx` for the delay-shifted query lag `tau`.
    pub fn representer(&self, a: &Excitation, tau: f64) -> Result<f64> {
        if tau < 0.0 || a.segments.is_empty() {
            return Ok(0.0);
        }
        let segs = &a.segments;
        match self.spec.family() {
            KernelFamily::Heaviside => Ok(exp_transform(segs, 0.0)),
            KernelFamily::ExponentialMixture(atoms) => Ok(atoms
                .iter()
                .map(|at| at.mass * (-at.rate * tau).exp() * exp_transform(segs, at.rate))
                .sum()),
            KernelFamily::TranslationInvariant {
                atoms,
                shape: TiShape::CosineMixture,
            } => Ok(atoms
                .iter()
                .map(|at| {
                    let (c, s) = cos_sin_transform(segs, at.rate);
                    at.mass * ((at.rate * tau).cos() * c + (at.rate * tau).sin() * s)
                })
                .sum()),
            KernelFamily::TranslationInvariant {
                atoms,
                shape: TiShape::Gaussian,
            } => Ok(atoms
                .iter()
                .map(|at| {
                    at.mass
                        * segs
                            .iter()
                            .map(|s| s.level * gaussian_line(at.rate, s.lo, s.hi, tau))
                            .sum::<f64>()
                })
                .sum()),
            KernelFamily::WarpedMixture { atoms, warp, shape } => Ok(atoms
                .iter()
                .map(|at| {
                    at.mass
                        * segs
                            .iter()
                            .map(|s| s.level * warped_line(*shape, *warp, at.rate, s.lo, s.hi, tau))
                            .sum::<f64>()
                })
                .sum()),
        }
    }

    /// Integral of one warped atom over `x in i`, `y in j`.
    fn warped_rect(
        &self,
        shape: BaseShape,
        k: u32,
        w: f64,
        i: (f64, f64),
        j: (f64, f64),
    ) -> Result<f64> {
        let mut pts = [i.0, i.1, j.0, j.1];
        pts.sort_by(f64::total_cmp);
        let mut pieces: [(f64, f64, bool, bool); 3] = [(0.0, 0.0, false, false); 3];
        let mut n = 0;
        for m in 0..3 {
            let (lo, hi) = (pts[m], pts[m + 1]);
            if hi > lo {
                let in_i = i.0 <= lo && hi <= i.1;
                let in_j = j.0 <= lo && hi <= j.1;
                if in_i || in_j {
                    pieces[n] = (lo, hi, in_i, in_j);
                    n += 1;
                }
            }
        }
        let mut acc = 0.0;
        for (pa, a) in pieces[..n].iter().enumerate() {
            if !a.2 {
                continue;
            }
            for (pb, b) in pieces[..n].iter().enumerate() {
                if !b.3 {
                    continue;
                }
                acc += if pa == pb {
                    self.warped_diag(shape, k, w, a.0, a.1)?
                } else if pa < pb {
                    warped_off_diag(shape, k, w, (a.0, a.1), (b.0, b.1))
                } else {
                    warped_off_diag(shape, k, w, (b.0, b.1), (a.0, a.1))
                };
            }
        }
        Ok(acc)
    }

    /// Integral over the square `[a, b]^2`, i.e. twice the triangle `x <= y`.
    fn warped_diag(&self, shape: BaseShape, k: u32, w: f64, a: f64, b: f64) -> Result<f64> {
        let len = b - a;
        // y^k * int_a^y x^k dx as a polynomial in v = y - a
        let p = poly_mul(&shifted_power(k, a), &shifted_power_integral(k, a));
        match shape {
            BaseShape::Min => Ok(2.0 * (-w * a).exp() * poly_moment(&p, w, len)),
            BaseShape::CubicSpline => {
                let tail = (-3.0 * w * a).exp() * poly_moment(&p, 3.0 * w, len);
                let kf = k as i32;
                let head = self.rule.integrate_panels(
                    |y| y.powi(kf) * (-2.0 * w * y).exp() * poly_exp_integral(k, w, a, y - a),
                    &[a, b],
                    self.tol,
                )?;
                Ok(head - tail / 3.0)
            }
        }
    }

    fn gaussian_rect(&self, w: f64, i: (f64, f64), j: (f64, f64)) -> Result<f64> {
        if w == 0.0 {
            return Ok((i.1 - i.0) * (j.1 - j.0));
        }
        let breaks = panel_breaks(i.0, i.1, [j.0, j.1]);
        self.rule
            .integrate_panels(|x| gaussian_line(w, j.0, j.1, x), &breaks, self.tol)
    }
}

/// Separable block of a warped atom: `x in [a, b]` entirely below `y in [c, d]`.
fn warped_off_diag(shape: BaseShape, k: u32, w: f64, x: (f64, f64), y: (f64, f64)) -> f64 {
    let (a, lx) = (x.0, x.1 - x.0);
    let (c, ly) = (y.0, y.1 - y.0);
    match shape {
        BaseShape::Min => poly_exp_integral(k, 0.0, a, lx) * poly_exp_integral(k, w, c, ly),
        BaseShape::CubicSpline => {
            0.5 * poly_exp_integral(k, w, a, lx) * poly_exp_integral(k, 2.0 * w, c, ly)
                - poly_exp_integral(k, 0.0, a, lx) * poly_exp_integral(k, 3.0 * w, c, ly) / 6.0
        }
    }
}

/// `int_lo^hi Kt(x, tau) dx` for one warped atom.
fn warped_line(shape: BaseShape, k: u32, w: f64, lo: f64, hi: f64, tau: f64) -> f64 {
    let tk = tau.powi(k as i32);
    let mut acc = 0.0;
    // x <= tau: the max is tau
    let below_hi = hi.min(tau);
    if below_hi > lo {
        let len = below_hi - lo;
        acc += match shape {
            BaseShape::Min => (-w * tau).exp() * poly_exp_integral(k, 0.0, lo, len),
            BaseShape::CubicSpline => {
                0.5 * (-2.0 * w * tau).exp() * poly_exp_integral(k, w, lo, len)
                    - (-3.0 * w * tau).exp() * poly_exp_integral(k, 0.0, lo, len) / 6.0
            }
        };
    }
    let above_lo = lo.max(tau);
    if hi > above_lo {
        let len = hi - above_lo;
        acc += match shape {
            BaseShape::Min => poly_exp_integral(k, w, above_lo, len),
            BaseShape::CubicSpline => {
                0.5 * (-w * tau).exp() * poly_exp_integral(k, 2.0 * w, above_lo, len)
                    - poly_exp_integral(k, 3.0 * w, above_lo, len) / 6.0
            }
        };
    }
    tk * acc
}

/// `sum_s level_s int_s exp(-w x) dx`.
fn exp_transform(segs: &[LagSegment], w: f64) -> f64 {
    segs.iter()
        .map(|s| s.level * poly_exp_integral(0, w, s.lo, s.len()))
        .sum()
}

/// `(sum level int cos(w x), sum level int sin(w x))` over the segments.
fn cos_sin_transform(segs: &[LagSegment], w: f64) -> (f64, f64) {
    if w == 0.0 {
        return (segs.iter().map(|s| s.level * s.len()).sum(), 0.0);
    }
    segs.iter().fold((0.0, 0.0), |(c, s), seg| {
        let mid = 0.5 * w * (seg.lo + seg.hi);
        let half = (0.5 * w * seg.len()).sin();
        (
            c + seg.level * 2.0 * mid.cos() * half / w,
            s + seg.level * 2.0 * mid.sin() * half / w,
        )
    })
}

/// `int_lo^hi exp(-w (x - tau)^2) dx`.
fn gaussian_line(w: f64, lo: f64, hi: f64, tau: f64) -> f64 {
    if w == 0.0 {
        return hi - lo;
    }
    let r = w.sqrt();
    0.5 * (PI / w).sqrt() * erf_diff(r * (lo - tau), r * (hi - tau))
}

/// `erf(hi) - erf(lo)` without cancellation in the tails.
fn erf_diff(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        libm::erfc(lo) - libm::erfc(hi)
    } else if hi <= 0.0 {
        libm::erfc(-hi) - libm::erfc(-lo)
    } else {
        libm::erf(hi) - libm::erf(lo)
    }
}

/// `(u * K_t)(t_sample)`, the representer of the sample-time functional evaluated at `t`.
pub fn representer_value(
    spec: &KernelSpec,
    u: &PiecewiseConstantSignal,
    t_sample: f64,
    t: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let engine = GramEngine::new(spec, q)?;
    engine.representer(&engine.excitation(u, t_sample), t - spec.delay())
}

/// One kernel-matrix entry. Arguments are put in a canonical order so the
/// result is bitwise symmetric in `(t_i, t_j)`.
pub fn gram_entry(
    spec: &KernelSpec,
    u: &PiecewiseConstantSignal,
    t_i: f64,
    t_j: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let engine = GramEngine::new(spec, q)?;
    let (a, b) = if t_j < t_i { (t_j, t_i) } else { (t_i, t_j) };
    engine.entry(&engine.excitation(u, a), &engine.excitation(u, b))
}

fn ordered_entry(
    engine: &GramEngine<'_>,
    ta: f64,
    ea: &Excitation,
    tb: f64,
    eb: &Excitation,
) -> Result<f64> {
    if tb < ta {
        engine.entry(eb, ea)
    } else {
        engine.entry(ea, eb)
    }
}

/// Full kernel matrix on `times`; the upper triangle is computed and mirrored.
pub fn assemble_gram(
    spec: &KernelSpec,
    u: &PiecewiseConstantSignal,
    times: &[f64],
    q: &QuadratureConfig,
) -> Result<GramMatrix> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no sample times".into()));
    }
    let engine = GramEngine::new(spec, q)?;
    let exc: Vec<Excitation> = times.iter().map(|&t| engine.excitation(u, t)).collect();
    let n = times.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    ordered_entry(&engine, times[i], &exc[i], times[j], &exc[j]).map_err(|e| {
                        Error::GramEntry {
                            i,
                            j,
                            source: Box::new(e),
                        }
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            m[(i, i + off)] = v;
            m[(i + off, i)] = v;
        }
    }
    GramMatrix::new(m, times.to_vec())
}

/// `C[q, i] = gram_entry(t_i, query_q)`: doubly-convolved kernel between
/// training and query times, as used for output prediction.
pub fn cross_gram(
    spec: &KernelSpec,
    u: &PiecewiseConstantSignal,
    times: &[f64],
    queries: &[f64],
    q: &QuadratureConfig,
) -> Result<DMatrix<f64>> {
    let engine = GramEngine::new(spec, q)?;
    let exc: Vec<Excitation> = times.iter().map(|&t| engine.excitation(u, t)).collect();
    let rows: Vec<Vec<f64>> = queries
        .par_iter()
        .map(|&tq| {
            let eq = engine.excitation(u, tq);
            times
                .iter()
                .zip(&exc)
                .map(|(&ti, ei)| ordered_entry(&engine, ti, ei, tq, &eq))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(queries.len(), times.len(), |r, c| rows[r][c]))
}

/// `R[q, i] = representer_value(t_i, query_q)`.
pub fn representer_matrix(
    spec: &KernelSpec,
    u: &PiecewiseConstantSignal,
    times: &[f64],
    queries: &[f64],
    q: &QuadratureConfig,
) -> Result<DMatrix<f64>> {
    let engine = GramEngine::new(spec, q)?;
    let exc: Vec<Excitation> = times.iter().map(|&t| engine.excitation(u, t)).collect();
    let d = spec.delay();
    let rows: Vec<Vec<f64>> = queries
        .par_iter()
        .map(|&tq| {
            exc.iter()
                .map(|e| engine.representer(e, tq - d))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(queries.len(), times.len(), |r, c| rows[r][c]))
}

/// Discrete-time kernel matrix `sum_{s1, s2} u(i - s1) u(j - s2) K(s1 dt, s2 dt)`.
pub fn gram_discrete<K: Kernel + ?Sized>(
    kernel: &K,
    u: &DiscreteSignal,
    indices: &[i64],
    domain: TimeDomain,
) -> Result<GramMatrix> {
    let TimeDomain::Discrete { step } = domain else {
        return Err(Error::InvalidArgument(
            "discrete Gram needs a discrete time domain".into(),
        ));
    };
    let support: Vec<(i64, f64)> = u
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(off, &v)| (u.start_index() + off as i64, v))
        .collect();
    let n = indices.len();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let (i, j) = (indices[a], indices[b]);
            let mut acc = 0.0;
            for &(p, up) in &support {
                let s1 = (i - p) as f64 * step;
                for &(q, uq) in &support {
                    let s2 = (j - q) as f64 * step;
                    acc += up * uq * kernel.eval(s1, s2);
                }
            }
            m[(a, b)] = acc;
            m[(b, a)] = acc;
        }
    }
    GramMatrix::new(m, indices.iter().map(|&i| i as f64 * step).collect())
}

/// Weighted sum of same-size Gram matrices.
pub fn combine(grams: &[GramMatrix], weights: &[f64]) -> DMatrix<f64> {
    let n = grams[0].len();
    let mut out = DMatrix::zeros(n, n);
    for (g, &w) in grams.iter().zip(weights) {
        if w != 0.0 {
            out += g.matrix() * w;
        }
    }
    out
}
