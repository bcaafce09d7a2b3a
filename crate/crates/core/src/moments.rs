//! Polynomial-times-exponential integrals evaluated without cancellation.
//!
//! Every closed form in the Gram machinery is assembled from
//! `M(j, c, L) = int_0^L v^j exp(-c v) dv` with `c >= 0`, whose terms are all
//! nonnegative. Integrals over `[a, a + L]` are shifted to the origin and
//! expanded binomially so that `a` only enters through `exp(-c a)` and
//! nonnegative powers.

/// Binomial coefficient for the small orders used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// `int_0^len v^j exp(-c v) dv`, for `c >= 0`.
pub fn exp_moment(j: u32, c: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let jp1 = f64::from(j + 1);
    if c == 0.0 {
        return len.powi(j as i32 + 1) / jp1;
    }
    let x = c * len;
    if x < jp1 + 1.0 {
        // len^{j+1} e^{-x} sum_{m>=0} x^m / ((j+1)(j+2)...(j+1+m)) * (j+1) / (j+1)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut m = 1.0;
        while term > sum * 1e-17 {
            term *= x / (jp1 + m);
            sum += term;
            m += 1.0;
        }
        len.powi(j as i32 + 1) * (-x).exp() * sum / jp1
    } else {
        // j!/c^{j+1} (1 - e^{-x} sum_{n<=j} x^n/n!)
        let mut term = 1.0;
        let mut partial = 1.0;
        let mut factorial = 1.0;
        for n in 1..=j {
            term *= x / f64::from(n);
            partial += term;
            factorial *= f64::from(n);
        }
        factorial / c.powi(j as i32 + 1) * (1.0 - (-x).exp() * partial)
    }
}

/// `int_a^{a+len} x^k exp(-c x) dx` for `a >= 0`.
pub fn poly_exp_integral(k: u32, c: f64, a: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let scale = if c == 0.0 { 1.0 } else { (-c * a).exp() };
    if scale == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut a_pow = 1.0;
    // n runs downwards so that a^{k-n} grows with the loop
    for n in (0..=k).rev() {
        acc += binomial(k, n) * a_pow * exp_moment(n, c, len);
        a_pow *= a;
    }
    scale * acc
}

/// Coefficients of `(a + v)^k` in powers of `v`.
pub(crate) fn shifted_power(k: u32, a: f64) -> Vec<f64> {
    (0..=k)
        .map(|n| binomial(k, n) * a.powi((k - n) as i32))
        .collect()
}

/// Coefficients of `int_a^{a+v} x^k dx` in powers of `v`.
pub(crate) fn shifted_power_integral(k: u32, a: f64) -> Vec<f64> {
    let mut out = vec![0.0; k as usize + 2];
    for (n, c) in shifted_power(k, a).into_iter().enumerate() {
        out[n + 1] = c / (n as f64 + 1.0);
    }
    out
}

pub(crate) fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `int_0^len p(v) exp(-c v) dv` for a polynomial with coefficients `p`.
pub(crate) fn poly_moment(p: &[f64], c: f64, len: f64) -> f64 {
    p.iter()
        .enumerate()
        .filter(|(_, &coef)| coef != 0.0)
        .map(|(j, &coef)| coef * exp_moment(j as u32, c, len))
        .sum()
}
