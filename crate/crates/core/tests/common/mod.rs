//! Independent reference integrals for the test suites.
//!
//! Adaptive Gauss–Kronrod (G7/K15) in one dimension, nested for two, driven
//! only by point evaluations of the kernel and the input. Nothing here shares
//! code with the library's closed forms or its Gauss–Legendre panels.

#![allow(dead_code)]

use kernel_sysid::kernels::Kernel;
use kernel_sysid::signals::PiecewiseConstantSignal;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7/K15 with interval bisection until each local error estimate
/// falls under its share of `rel_tol` times the coarse magnitude.
pub fn integrate(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let width = b - a;
    // magnitude from a 16-panel pass so a lucky zero estimate cannot stall refinement
    let scale: f64 = (0..16)
        .map(|i| {
            let lo = a + width * i as f64 / 16.0;
            gk15(f, lo, lo + width / 16.0).0.abs()
        })
        .sum();
    let abs_tol = rel_tol * scale + 1e-300;
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        if err <= abs_tol * (hi - lo) / width || depth > 40 {
            total += v;
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((lo, m, depth + 1));
            stack.push((m, hi, depth + 1));
        }
    }
    total
}

/// Same as [`integrate`] after splitting at the given interior points.
pub fn integrate_split(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    rel_tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(splits.iter().copied().filter(|&s| s > a && s < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| integrate(f, w[0], w[1], rel_tol))
        .sum()
}

/// Lags at which `s -> u(t - s)` jumps.
fn lag_jumps(u: &PiecewiseConstantSignal, t: f64) -> Vec<f64> {
    u.breakpoints().iter().map(|b| t - b).filter(|&s| s > 0.0).collect()
}

/// `int_0^t u(t - s) K(s, tau) ds`.
pub fn representer<K: Kernel + ?Sized>(
    kernel: &K,
    u: &PiecewiseConstantSignal,
    t: f64,
    tau: f64,
    rel_tol: f64,
) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut splits = lag_jumps(u, t);
    splits.push(tau);
    splits.push(kernel.delay());
    integrate_split(&mut |s| u.eval(t - s) * kernel.eval(s, tau), 0.0, t, &splits, rel_tol)
}

/// `int int u(ti - s1) u(tj - s2) K(s1, s2) ds1 ds2` by nested adaptive quadrature.
pub fn gram_entry<K: Kernel + ?Sized>(
    kernel: &K,
    u: &PiecewiseConstantSignal,
    ti: f64,
    tj: f64,
    rel_tol: f64,
) -> f64 {
    if ti <= 0.0 || tj <= 0.0 {
        return 0.0;
    }
    let mut splits = lag_jumps(u, tj);
    splits.push(kernel.delay());
    splits.extend(lag_jumps(u, ti));
    let inner_tol = rel_tol * 1e-2;
    integrate_split(
        &mut |s2| u.eval(tj - s2) * representer(kernel, u, ti, s2, inner_tol),
        0.0,
        tj,
        &splits,
        rel_tol,
    )
}

/// `int int_{[0,T]^2} K` by nested adaptive quadrature, split at the diagonal.
pub fn square_integral<K: Kernel + ?Sized>(kernel: &K, t: f64, rel_tol: f64) -> f64 {
    let inner_tol = rel_tol * 1e-2;
    integrate(
        &mut |y| integrate_split(&mut |x| kernel.eval(x, y).abs(), 0.0, t, &[y], inner_tol),
        0.0,
        t,
        rel_tol,
    )
}

use kernel_sysid::kernels::{Atom, BaseShape, KernelSpec};
use nalgebra::DMatrix;

/// One representative of every family, plus delayed variants.
pub fn kernel_zoo() -> Vec<(&'static str, KernelSpec)> {
    let mix = vec![Atom::new(0.5, 1.0), Atom::new(1.0, 4.0), Atom::new(0.25, 15.0)];
    let mut zoo = vec![
        ("heaviside", KernelSpec::heaviside()),
        ("exponential", KernelSpec::exponential(1.5).unwrap()),
        ("exponential mixture", KernelSpec::exponential_mixture(mix.clone()).unwrap()),
        ("tc", KernelSpec::tc(2.0).unwrap()),
        ("warped min k=0", KernelSpec::warped(mix.clone(), 0, BaseShape::Min).unwrap()),
        ("warped min k=1", KernelSpec::warped(mix.clone(), 1, BaseShape::Min).unwrap()),
        ("warped min k=2", KernelSpec::warped(mix.clone(), 2, BaseShape::Min).unwrap()),
        ("warped cubic k=0", KernelSpec::warped(vec![Atom::unit(2.0)], 0, BaseShape::CubicSpline).unwrap()),
        ("warped cubic k=1", KernelSpec::warped(mix.clone(), 1, BaseShape::CubicSpline).unwrap()),
        ("cosine mixture", KernelSpec::cosine_mixture(vec![Atom::new(1.0, 0.5), Atom::new(0.5, 3.0)]).unwrap()),
        ("gaussian", KernelSpec::gaussian(1.0).unwrap()),
    ];
    let delayed: Vec<(&'static str, KernelSpec)> = vec![
        ("delayed exponential", zoo[1].1.with_delay(0.7).unwrap()),
        ("delayed tc", zoo[3].1.with_delay(1.2).unwrap()),
        ("delayed warped cubic", zoo[8].1.with_delay(0.4).unwrap()),
        ("delayed gaussian", zoo[10].1.with_delay(0.3).unwrap()),
    ];
    zoo.extend(delayed);
    zoo
}

/// Plain evaluation matrix `K(t_i, t_j)`.
pub fn eval_matrix<K: Kernel + ?Sized>(kernel: &K, pts: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(pts.len(), pts.len(), |i, j| kernel.eval(pts[i], pts[j]))
}

/// Extreme eigenvalues of a symmetric matrix, ignoring rows that are identically zero.
pub fn eig_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let live: Vec<usize> = (0..m.nrows())
        .filter(|&i| m.row(i).iter().any(|&x| x != 0.0))
        .collect();
    if live.is_empty() {
        return (0.0, 0.0);
    }
    let sub = m.select_rows(&live).select_columns(&live);
    let ev = sub.symmetric_eigenvalues();
    (ev.min().min(0.0), ev.max().max(0.0))
}

use kernel_sysid::mkl::KernelDictionary;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `A A'` with `A` of size `n x rank`, entries uniform on `[-1, 1]`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose()
}

/// `1/2 ||y - Kc||^2 + lambda/2 c'Kc`.
pub fn rls_objective(k: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, c: &DVector<f64>) -> f64 {
    let r = y - k * c;
    0.5 * r.dot(&r) + 0.5 * lambda * c.dot(&(k * c))
}

/// Minimizer from the normal equations `K (K + lambda I) c = K y`, solved by
/// SVD with a rank cutoff so a singular `K` is handled.
pub fn direct_minimizer(k: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = y.len();
    let a = k * (k + DMatrix::identity(n, n) * lambda);
    let svd = a.svd(true, true);
    let cut = 1e-13 * svd.singular_values.max();
    svd.solve(&(k * y), cut).unwrap()
}

/// `lambda/2 y'(sum d_k K_k + lambda I)^{-1} y` through an LU solve.
pub fn mkl_objective(dict: &KernelDictionary, d: &[f64], y: &[f64], lambda: f64) -> f64 {
    let n = y.len();
    let mut k = DMatrix::identity(n, n) * lambda;
    for (g, w) in dict.grams().iter().zip(d) {
        k += g.matrix() * *w;
    }
    let yv = DVector::from_column_slice(y);
    let c = k.lu().solve(&yv).unwrap();
    0.5 * lambda * yv.dot(&c)
}

/// Uniform sample from the simplex via sorted uniforms.
pub fn simplex_sample(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Random dictionary of `m` PSD Grams on `n` points, data and `lambda`.
pub fn random_mkl_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (KernelDictionary, Vec<f64>, f64) {
    use kernel_sysid::gram::GramMatrix;
    let times: Vec<f64> = (1..=n).map(|i| i as f64 * 0.1).collect();
    let grams: Vec<GramMatrix> = (0..m)
        .map(|_| {
            let rank = rng.random_range(1..=n);
            GramMatrix::new(random_psd(rng, n, rank), times.clone()).unwrap()
        })
        .collect();
    let basis = (0..m).map(|i| KernelSpec::exponential(1.0 + i as f64).unwrap()).collect();
    let dict = KernelDictionary::new(basis, grams).unwrap();
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lambda = 10f64.powf(rng.random_range(-2.0..1.0));
    (dict, y, lambda)
}
