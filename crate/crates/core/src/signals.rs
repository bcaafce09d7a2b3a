//! Input signals, sampled datasets and the synthetic test system.
//!
//! A [`PiecewiseConstantSignal`] is zero before its first breakpoint and holds
//! `levels[i]` on `[breakpoints[i], breakpoints[i + 1])`; the last level
//! persists forever. Convolution integrals against such a signal reduce to a
//! finite list of [`LagSegment`]s, which is what the Gram machinery consumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::moments::poly_exp_integral;

/// The time set a problem lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDomain {
    Continuous,
    /// Integer instants spaced `step` time units apart.
    Discrete { step: f64 },
}

impl TimeDomain {
    pub fn discrete(step: f64) -> Result<Self> {
        if step.is_finite() && step > 0.0 {
            Ok(TimeDomain::Discrete { step })
        } else {
            Err(Error::InvalidArgument(format!(
                "discrete step must be positive, got {step}"
            )))
        }
    }
}

/// A right-continuous piecewise-constant signal, zero before its first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantSignal {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

/// A stretch of lag values `x` in `[lo, hi]` on which `u(t - x)` equals `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagSegment {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl LagSegment {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

impl PiecewiseConstantSignal {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != levels.len() {
            return Err(Error::InvalidSignal(format!(
                "{} breakpoints but {} levels",
                breakpoints.len(),
                levels.len()
            )));
        }
        if breakpoints.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite value".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSignal(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            levels,
        })
    }

    /// The identically zero signal.
    pub fn zero() -> Self {
        Self {
            breakpoints: Vec::new(),
            levels: Vec::new(),
        }
    }

    /// `level` from `at` onwards, zero before.
    pub fn step(at: f64, level: f64) -> Result<Self> {
        Self::new(vec![at], vec![level])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&l| l == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        if idx == 0 {
            0.0
        } else {
            self.levels[idx - 1]
        }
    }

    /// Nonzero pieces of `x -> u(t - x)` restricted to `x >= 0`, ordered by increasing lag.
    pub fn lag_segments(&self, t: f64) -> Vec<LagSegment> {
        let n = self.breakpoints.len();
        let mut out = Vec::with_capacity(n);
        for k in (0..n).rev() {
            let level = self.levels[k];
            let hi = t - self.breakpoints[k];
            if level == 0.0 || hi <= 0.0 {
                continue;
            }
            let lo = if k + 1 < n {
                (t - self.breakpoints[k + 1]).max(0.0)
            } else {
                0.0
            };
            out.push(LagSegment { lo, hi, level });
        }
        out
    }

    /// Pointwise sum of two signals.
    pub fn add(&self, other: &Self) -> Self {
        let mut bps: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let levels = bps.iter().map(|&b| self.eval(b) + other.eval(b)).collect();
        Self {
            breakpoints: bps,
            levels,
        }
    }
}

/// A discrete-time signal, zero outside `start_index .. start_index + values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignal {
    start_index: i64,
    values: Vec<f64>,
}

impl DiscreteSignal {
    pub fn new(start_index: i64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite value".into()));
        }
        Ok(Self {
            start_index,
            values,
        })
    }

    pub fn impulse(at: i64) -> Self {
        Self {
            start_index: at,
            values: vec![1.0],
        }
    }

    /// Sample a continuous signal at `index * step` for `index` in `range`.
    pub fn sample(
        u: &PiecewiseConstantSignal,
        step: f64,
        range: std::ops::Range<i64>,
    ) -> Self {
        Self {
            start_index: range.start,
            values: range.map(|i| u.eval(i as f64 * step)).collect(),
        }
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, i: i64) -> f64 {
        let off = i - self.start_index;
        if off < 0 {
            return 0.0;
        }
        self.values.get(off as usize).copied().unwrap_or(0.0)
    }
}

/// Output measurements `(t_i, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Binary excitation whose switching instants are drawn uniformly from `interval`.
///
/// The signal starts at `high` on the earliest instant and alternates with
/// `low` afterwards.
pub fn binary_input_from_rng<R: Rng>(
    rng: &mut R,
    n_switch: usize,
    interval: (f64, f64),
    (high, low): (f64, f64),
) -> Result<PiecewiseConstantSignal> {
    let (a, b) = interval;
    if !(a < b) || n_switch == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n_switch >= 1 and a nonempty interval, got {n_switch} on ({a}, {b})"
        )));
    }
    let mut instants: Vec<f64> = (0..n_switch).map(|_| rng.random_range(a..b)).collect();
    instants.sort_by(f64::total_cmp);
    instants.dedup();
    let levels = (0..instants.len())
        .map(|i| if i % 2 == 0 { high } else { low })
        .collect();
    PiecewiseConstantSignal::new(instants, levels)
}

/// Seeded `{0, 1}` binary input.
pub fn generate_binary_input(
    seed: u64,
    n_switch: usize,
    interval: (f64, f64),
) -> Result<PiecewiseConstantSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    binary_input_from_rng(&mut rng, n_switch, interval, (1.0, 0.0))
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn add_noise_from_rng<R: Rng>(rng: &mut R, y0: &[f64], sigma_ratio: f64) -> Result<Vec<f64>> {
    if y0.is_empty() {
        return Err(Error::InvalidArgument("cannot add noise to an empty vector".into()));
    }
    let sigma = sigma_ratio * population_std(y0);
    if sigma == 0.0 {
        return Ok(y0.to_vec());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    Ok(y0.iter().map(|&y| y + normal.sample(rng)).collect())
}

/// `y0 + eps` with `eps ~ N(0, (sigma_ratio * std(y0))^2)`, std taken over the population.
pub fn add_noise(y0: &[f64], sigma_ratio: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_from_rng(&mut rng, y0, sigma_ratio)
}

/// The bimodal test system `h(t) = H(t) (exp(-w1 t) + A exp(-w2 t)) t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueSystem {
    pub omega1: f64,
    pub omega2: f64,
    pub amplitude: f64,
}

impl Default for TrueSystem {
    fn default() -> Self {
        Self {
            omega1: 10.0,
            omega2: 100.0,
            amplitude: 20.0,
        }
    }
}

impl TrueSystem {
    pub fn impulse(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        ((-self.omega1 * t).exp() + self.amplitude * (-self.omega2 * t).exp()) * t
    }

    /// Exact `(u * h)(t)`.
    pub fn response(&self, u: &PiecewiseConstantSignal, t: f64) -> f64 {
        u.lag_segments(t)
            .iter()
            .map(|s| {
                s.level
                    * (poly_exp_integral(1, self.omega1, s.lo, s.len())
                        + self.amplitude * poly_exp_integral(1, self.omega2, s.lo, s.len()))
            })
            .sum()
    }
}

/// `(u * h)(t)` for `h(t) = H(t) (exp(-w1 t) + A exp(-w2 t)) t`.
pub fn convolve_true_response(
    u: &PiecewiseConstantSignal,
    omega1: f64,
    omega2: f64,
    amplitude: f64,
    t: f64,
) -> f64 {
    TrueSystem {
        omega1,
        omega2,
        amplitude,
    }
    .response(u, t)
}
