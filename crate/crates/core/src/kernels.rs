//! Kernel families for causal impulse-response spaces.
//!
//! Every kernel here has the form `K(t1, t2) = H(t1 - D) H(t2 - D) Kt(t1 - D, t2 - D)`
//! with `H(0) = 1`. The families are
//!
//! * `Heaviside`: `Kt = 1`.
//! * `ExponentialMixture`: `Kt = sum_j m_j exp(-w_j (t1 + t2))`.
//! * `WarpedMixture`: `Kt = (t1 t2)^k sum_j m_j G(exp(-w_j t1), exp(-w_j t2))` with
//!   `G` either `min` (one atom and `k = 0` is the TC kernel) or the cubic spline kernel.
//! * `TranslationInvariant`: `Kt = f(t1 - t2)` for a cosine mixture or a Gaussian.
//!
//! Textual form, parsed case-insensitively:
//! `family=warped; atoms=1:2,0.5:30; k=1; G=min; D=0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Anything that can be evaluated as a symmetric kernel on the real line.
pub trait Kernel: Sync {
    fn eval(&self, t1: f64, t2: f64) -> f64;

    /// Start of the causal support; the kernel vanishes when either argument is below it.
    fn delay(&self) -> f64 {
        0.0
    }

    fn is_nonnegative(&self) -> bool {
        false
    }
}

/// One point mass of a discrete mixing measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub mass: f64,
    pub rate: f64,
}

impl Atom {
    pub fn new(mass: f64, rate: f64) -> Self {
        Self { mass, rate }
    }

    pub fn unit(rate: f64) -> Self {
        Self { mass: 1.0, rate }
    }
}

/// The kernel `G` on the unit square used by warped mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseShape {
    Min,
    CubicSpline,
}

impl BaseShape {
    pub fn eval(self, s1: f64, s2: f64) -> f64 {
        match self {
            BaseShape::Min => s1.min(s2),
            BaseShape::CubicSpline => cubic_spline_g(s1, s2),
        }
    }

    /// Smallest `C` with `|G(s1, s2)| <= C s1 s2` on the unit square, if one exists.
    ///
    /// `min` has none: `min(s, s) / s^2 = 1 / s` is unbounded near the origin.
    pub fn product_bound(self) -> Option<f64> {
        match self {
            BaseShape::Min => None,
            BaseShape::CubicSpline => Some(1.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiShape {
    /// `f(d) = sum_j m_j cos(w_j d)`.
    CosineMixture,
    /// `f(d) = sum_j m_j exp(-w_j d^2)`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    Heaviside,
    ExponentialMixture(Vec<Atom>),
    WarpedMixture {
        atoms: Vec<Atom>,
        warp: u32,
        shape: BaseShape,
    },
    TranslationInvariant {
        atoms: Vec<Atom>,
        shape: TiShape,
    },
}

/// Closed description of a kernel: family, mixing atoms and delay.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    delay: f64,
}

/// Highest warp exponent accepted; `(t1 t2)^k` overflows long before this matters.
pub const MAX_WARP: u32 = 16;

fn validate_atoms(atoms: &[Atom]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidKernel("mixture needs at least one atom".into()));
    }
    for a in atoms {
        if !(a.mass.is_finite() && a.mass >= 0.0) {
            return Err(Error::InvalidKernel(format!("atom mass {} must be >= 0", a.mass)));
        }
        if !(a.rate.is_finite() && a.rate >= 0.0) {
            return Err(Error::InvalidKernel(format!("atom rate {} must be >= 0", a.rate)));
        }
    }
    if !atoms.iter().any(|a| a.mass > 0.0) {
        return Err(Error::InvalidKernel("all atom masses are zero".into()));
    }
    Ok(())
}

impl KernelSpec {
    pub fn new(family: KernelFamily, delay: f64) -> Result<Self> {
        match &family {
            KernelFamily::Heaviside => {}
            KernelFamily::ExponentialMixture(atoms)
            | KernelFamily::TranslationInvariant { atoms, .. } => validate_atoms(atoms)?,
            KernelFamily::WarpedMixture { atoms, warp, .. } => {
                validate_atoms(atoms)?;
                if *warp > MAX_WARP {
                    return Err(Error::InvalidKernel(format!("warp exponent {warp} too large")));
                }
            }
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidKernel(format!("delay {delay} must be >= 0")));
        }
        Ok(Self { family, delay })
    }

    pub fn heaviside() -> Self {
        Self {
            family: KernelFamily::Heaviside,
            delay: 0.0,
        }
    }

    /// Single-atom exponential kernel `exp(-w (t1 + t2))`.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(KernelFamily::ExponentialMixture(vec![Atom::unit(rate)]), 0.0)
    }

    pub fn exponential_mixture(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(KernelFamily::ExponentialMixture(atoms), 0.0)
    }

    /// Tuned-correlated kernel `exp(-w max(t1, t2))`.
    pub fn tc(rate: f64) -> Result<Self> {
        Self::warped(vec![Atom::unit(rate)], 0, BaseShape::Min)
    }

    pub fn warped(atoms: Vec<Atom>, warp: u32, shape: BaseShape) -> Result<Self> {
        Self::new(KernelFamily::WarpedMixture { atoms, warp, shape }, 0.0)
    }

    pub fn cosine_mixture(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(
            KernelFamily::TranslationInvariant {
                atoms,
                shape: TiShape::CosineMixture,
            },
            0.0,
        )
    }

    pub fn gaussian(rate: f64) -> Result<Self> {
        Self::new(
            KernelFamily::TranslationInvariant {
                atoms: vec![Atom::unit(rate)],
                shape: TiShape::Gaussian,
            },
            0.0,
        )
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn atoms(&self) -> &[Atom] {
        match &self.family {
            KernelFamily::Heaviside => &[],
            KernelFamily::ExponentialMixture(a)
            | KernelFamily::WarpedMixture { atoms: a, .. }
            | KernelFamily::TranslationInvariant { atoms: a, .. } => a,
        }
    }

    /// Smallest atom rate, `None` for the Heaviside kernel.
    pub fn min_rate(&self) -> Option<f64> {
        self.atoms()
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| a.rate)
            .min_by(f64::total_cmp)
    }

    /// `K(t1 - D, t2 - D)` composed on top of any existing delay.
    pub fn with_delay(&self, d: f64) -> Result<Self> {
        Self::new(self.family.clone(), self.delay + d)
    }

    /// The causal factor `Kt` on nonnegative (already delay-shifted) arguments.
    pub fn eval_causal(&self, s1: f64, s2: f64) -> f64 {
        match &self.family {
            KernelFamily::Heaviside => 1.0,
            KernelFamily::ExponentialMixture(atoms) => atoms
                .iter()
                .map(|a| a.mass * (-a.rate * (s1 + s2)).exp())
                .sum(),
            KernelFamily::WarpedMixture { atoms, warp, shape } => {
                let hi = s1.max(s2);
                let lo = s1.min(s2);
                let g: f64 = atoms
                    .iter()
                    .map(|a| {
                        a.mass * shape.eval((-a.rate * lo).exp(), (-a.rate * hi).exp())
                    })
                    .sum();
                if *warp == 0 {
                    g
                } else {
                    (s1 * s2).powi(*warp as i32) * g
                }
            }
            KernelFamily::TranslationInvariant { atoms, shape } => {
                let d = (s1 - s2).abs();
                match shape {
                    TiShape::CosineMixture => {
                        atoms.iter().map(|a| a.mass * (a.rate * d).cos()).sum()
                    }
                    TiShape::Gaussian => {
                        atoms.iter().map(|a| a.mass * (-a.rate * d * d).exp()).sum()
                    }
                }
            }
        }
    }
}

impl Kernel for KernelSpec {
    fn eval(&self, t1: f64, t2: f64) -> f64 {
        let s1 = t1 - self.delay;
        let s2 = t2 - self.delay;
        if s1 < 0.0 || s2 < 0.0 {
            return 0.0;
        }
        self.eval_causal(s1, s2)
    }

    fn delay(&self) -> f64 {
        self.delay
    }

    fn is_nonnegative(&self) -> bool {
        !matches!(
            self.family,
            KernelFamily::TranslationInvariant {
                shape: TiShape::CosineMixture,
                ..
            }
        )
    }
}

pub fn kernel_eval(spec: &KernelSpec, t1: f64, t2: f64) -> f64 {
    spec.eval(t1, t2)
}

pub fn apply_delay(spec: &KernelSpec, delay: f64) -> Result<KernelSpec> {
    spec.with_delay(delay)
}

/// Cubic spline kernel on the unit square, `s1 s2 min/2 - min^3/6`.
pub fn cubic_spline_g(s1: f64, s2: f64) -> f64 {
    let m = s1.min(s2);
    s1 * s2 * m / 2.0 - m * m * m / 6.0
}

/// One step of the double-integration recursion applied to `exp(-w (t1 + t2))`.
pub fn integrate_exponential_kernel_once(rate: f64, t1: f64, t2: f64) -> f64 {
    if t1 < 0.0 || t2 < 0.0 {
        return 0.0;
    }
    let e1 = -(-rate * t1).exp_m1();
    let e2 = -(-rate * t2).exp_m1();
    e1 * e2 / (rate * rate)
}

/// The kernel produced by integrating the exponential kernel once in each argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedExponential {
    pub rate: f64,
}

impl Kernel for IntegratedExponential {
    fn eval(&self, t1: f64, t2: f64) -> f64 {
        integrate_exponential_kernel_once(self.rate, t1, t2)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// `H(t1) H(t2) / (1 + (t1 + t2)^2)`: completely monotone in `t1 + t2`, vanishing
/// at infinity, and still not stable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RationalDecay;

impl Kernel for RationalDecay {
    fn eval(&self, t1: f64, t2: f64) -> f64 {
        if t1 < 0.0 || t2 < 0.0 {
            return 0.0;
        }
        let s = t1 + t2;
        1.0 / (1.0 + s * s)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// `sum_ij c_i c_j K(t_i, t_j)`.
pub fn psd_quadratic_form<K: Kernel + ?Sized>(
    kernel: &K,
    points: &[f64],
    coeffs: &[f64],
) -> Result<f64> {
    if points.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: coeffs.len(),
        });
    }
    let mut acc = 0.0;
    for (ti, ci) in points.iter().zip(coeffs) {
        for (tj, cj) in points.iter().zip(coeffs) {
            acc += ci * cj * kernel.eval(*ti, *tj);
        }
    }
    Ok(acc)
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms = |f: &mut fmt::Formatter<'_>, atoms: &[Atom]| -> fmt::Result {
            write!(f, "; atoms=")?;
            for (i, a) in atoms.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}:{}", a.mass, a.rate)?;
            }
            Ok(())
        };
        match &self.family {
            KernelFamily::Heaviside => write!(f, "family=heaviside")?,
            KernelFamily::ExponentialMixture(a) => {
                write!(f, "family=exponential")?;
                atoms(f, a)?;
            }
            KernelFamily::WarpedMixture {
                atoms: a,
                warp,
                shape,
            } => {
                write!(f, "family=warped")?;
                atoms(f, a)?;
                let g = match shape {
                    BaseShape::Min => "min",
                    BaseShape::CubicSpline => "cubicspline",
                };
                write!(f, "; k={warp}; G={g}")?;
            }
            KernelFamily::TranslationInvariant { atoms: a, shape } => {
                write!(f, "family=translationinvariant")?;
                atoms(f, a)?;
                let s = match shape {
                    TiShape::CosineMixture => "cosine",
                    TiShape::Gaussian => "gaussian",
                };
                write!(f, "; f={s}")?;
            }
        }
        write!(f, "; D={}", self.delay)
    }
}

fn parse_atoms(s: &str) -> Result<Vec<Atom>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let (m, w) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidKernel(format!("atom `{item}` is not mass:rate")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidKernel(format!("bad number `{v}` in atom `{item}`")))
            };
            Ok(Atom::new(num(m)?, num(w)?))
        })
        .collect()
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut family = None;
        let mut atoms = None;
        let mut warp = None;
        let mut shape = None;
        let mut ti = None;
        let mut delay = 0.0;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidKernel(format!("`{part}` is not key=value")))?;
            let value = value.trim().to_ascii_lowercase();
            match key.trim().to_ascii_lowercase().as_str() {
                "family" => family = Some(value),
                "atoms" => atoms = Some(parse_atoms(&value)?),
                "k" => {
                    warp = Some(value.parse::<u32>().map_err(|_| {
                        Error::InvalidKernel(format!("k must be a nonnegative integer, got `{value}`"))
                    })?)
                }
                "g" => {
                    shape = Some(match value.as_str() {
                        "min" => BaseShape::Min,
                        "cubicspline" | "cubic" => BaseShape::CubicSpline,
                        _ => return Err(Error::InvalidKernel(format!("unknown G `{value}`"))),
                    })
                }
                "f" => {
                    ti = Some(match value.as_str() {
                        "cosine" | "cosinemixture" => TiShape::CosineMixture,
                        "gaussian" => TiShape::Gaussian,
                        _ => return Err(Error::InvalidKernel(format!("unknown f `{value}`"))),
                    })
                }
                "d" => {
                    delay = value
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidKernel(format!("bad delay `{value}`")))?
                }
                other => return Err(Error::InvalidKernel(format!("unknown key `{other}`"))),
            }
        }
        let family = family.ok_or_else(|| Error::InvalidKernel("missing `family`".into()))?;
        let reject = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::InvalidKernel(format!(
                    "key `{name}` does not apply to family `{family}`"
                )))
            } else {
                Ok(())
            }
        };
        let need_atoms = |atoms: Option<Vec<Atom>>| {
            atoms.ok_or_else(|| Error::InvalidKernel(format!("family `{family}` needs `atoms`")))
        };
        let fam = match family.as_str() {
            "heaviside" => {
                reject("atoms", atoms.is_some())?;
                reject("k", warp.is_some())?;
                reject("G", shape.is_some())?;
                reject("f", ti.is_some())?;
                KernelFamily::Heaviside
            }
            "exponential" | "exponentialmixture" => {
                reject("k", warp.is_some())?;
                reject("G", shape.is_some())?;
                reject("f", ti.is_some())?;
                KernelFamily::ExponentialMixture(need_atoms(atoms)?)
            }
            "warped" | "warpedmixture" | "tc" => {
                reject("f", ti.is_some())?;
                KernelFamily::WarpedMixture {
                    atoms: need_atoms(atoms)?,
                    warp: warp.unwrap_or(0),
                    shape: shape.unwrap_or(BaseShape::Min),
                }
            }
            "translationinvariant" | "ti" => {
                reject("k", warp.is_some())?;
                reject("G", shape.is_some())?;
                KernelFamily::TranslationInvariant {
                    atoms: need_atoms(atoms)?,
                    shape: ti.ok_or_else(|| {
                        Error::InvalidKernel("translation-invariant family needs `f`".into())
                    })?,
                }
            }
            other => return Err(Error::InvalidKernel(format!("unknown family `{other}`"))),
        };
        KernelSpec::new(fam, delay)
    }
}
