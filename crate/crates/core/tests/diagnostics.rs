mod common;

use kernel_sysid::diagnostics::{counterexample_lemma2_closed_form, relative_degree_probe_with};
use kernel_sysid::prelude::*;
use proptest::prelude::*;

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn exp_l1(w: f64, t: f64) -> f64 {
    ((1.0 - (-w * t).exp()) / w).powi(2)
}

/// `int_0^T int_0^T 1/(1+(t1+t2)^2)`, from `int atan = s atan s - log(1+s^2)/2`.
fn rational_square(t: f64) -> f64 {
    let g = |s: f64| s * s.atan() - 0.5 * (1.0 + s * s).ln();
    g(2.0 * t) - 2.0 * g(t)
}

fn tc_l1(w: f64, t: f64) -> f64 {
    2.0 * (1.0 - (1.0 + w * t) * (-w * t).exp()) / (w * w)
}

#[test]
fn l1_norms_of_exponential_and_tc() {
    let e = KernelSpec::exponential(1.0).unwrap();
    let v = l1_norm_estimate(&e, 20.0, &q()).unwrap();
    assert!((v - 1.0).abs() <= 1e-8, "{v}");
    let tc = KernelSpec::tc(1.0).unwrap();
    let v = l1_norm_estimate(&tc, 40.0, &q()).unwrap();
    assert!((v - 2.0).abs() <= 1e-6, "{v}");
    for &(w, t) in &[(0.5, 3.0), (2.0, 1.0), (7.0, 0.4)] {
        let ve = l1_norm_estimate(&KernelSpec::exponential(w).unwrap(), t, &q()).unwrap();
        assert!((ve - exp_l1(w, t)).abs() <= 1e-10 * exp_l1(w, t));
        let vt = l1_norm_estimate(&KernelSpec::tc(w).unwrap(), t, &q()).unwrap();
        assert!((vt - tc_l1(w, t)).abs() <= 1e-9 * tc_l1(w, t), "tc {w} {t}: {vt}");
    }
    assert!(l1_norm_estimate(&e, 0.0, &q()).is_err());
}

#[test]
fn oscillating_kernel_norm() {
    // a translation-invariant kernel reduces to int_{-T}^{T} (T - |d|) |k(d)| dd
    let (w, t) = (2.0, 40.0);
    let cosine = KernelSpec::cosine_mixture(vec![Atom::new(1.0, w)]).unwrap();
    let zeros: Vec<f64> = (0..)
        .map(|k| (k as f64 + 0.5) * std::f64::consts::PI / w)
        .take_while(|&z| z < t)
        .collect();
    let half = common::integrate_split(&mut |d| (t - d) * (w * d).cos().abs(), 0.0, t, &zeros, 1e-13);
    let got = l1_norm_estimate(&cosine, t, &q()).unwrap();
    assert!((got - 2.0 * half).abs() <= 1e-8 * got, "{got} vs {}", 2.0 * half);
}

#[test]
fn delayed_kernel_has_the_same_norm_later() {
    let e = KernelSpec::exponential(1.0).unwrap();
    let d = apply_delay(&e, 2.0).unwrap();
    let v = l1_norm_estimate(&d, 5.0, &q()).unwrap();
    assert!((v - exp_l1(1.0, 3.0)).abs() <= 1e-9 * v, "{v}");
}

#[test]
fn stable_families_are_bounded() {
    let mut kernels: Vec<(String, KernelSpec)> = vec![
        ("exponential".into(), KernelSpec::exponential(1.0).unwrap()),
        ("tc".into(), KernelSpec::tc(1.0).unwrap()),
        ("mixture".into(), KernelSpec::exponential_mixture(vec![Atom::new(1.0, 1.0), Atom::new(2.0, 5.0)]).unwrap()),
    ];
    for k in 0..=2 {
        for w in [1.0, 3.0] {
            for g in [BaseShape::Min, BaseShape::CubicSpline] {
                let spec = KernelSpec::warped(vec![Atom::unit(w)], k, g).unwrap();
                kernels.push((format!("warped k={k} w={w} {g:?}"), spec));
            }
        }
    }
    for (name, spec) in kernels {
        let wmin = spec.atoms().iter().map(|a| a.rate).fold(f64::INFINITY, f64::min);
        let horizons: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|h| h / wmin).collect();
        let r = stability_trend(&spec, &horizons, &q()).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{name}: {:?}", r.l1_values);
        assert!(r.l1_values.windows(2).all(|w| w[1] >= w[0]), "{name}");
    }
}

#[test]
fn unstable_families_diverge() {
    let horizons = [5.0, 10.0, 20.0, 40.0];
    let gauss = KernelSpec::gaussian(1.0).unwrap();
    let r = stability_trend(&gauss, &horizons, &q()).unwrap();
    assert_eq!(r.verdict, Verdict::Diverging);
    // the diagonal band has width ~ sqrt(pi), so the norm grows linearly
    let ratio = r.l1_values[3] / r.l1_values[2];
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");

    let cosine = KernelSpec::cosine_mixture(vec![Atom::new(1.0, 2.0)]).unwrap();
    assert_eq!(stability_trend(&cosine, &horizons, &q()).unwrap().verdict, Verdict::Diverging);
    let integrated = IntegratedExponential { rate: 1.0 };
    assert_eq!(stability_trend(&integrated, &horizons, &q()).unwrap().verdict, Verdict::Diverging);
    let r = stability_trend(&RationalDecay, &horizons, &q()).unwrap();
    assert_eq!(r.verdict, Verdict::Diverging);
    for (t, v) in r.horizons.iter().zip(&r.lemma2_values) {
        let c = rational_square(*t);
        assert!((v - c).abs() <= 1e-8 * c, "T={t}: {v} vs {c}");
        // truncating the inner integral to [0, T] only removes mass
        assert!(*v <= counterexample_lemma2_closed_form(*t));
    }
}

#[test]
fn counterexample_closed_form() {
    // T (pi/2 - atan T) + log(1 + T^2) / 2, written out independently
    for t in [0.5f64, 3.0, 40.0, 1e4] {
        let want = t * (std::f64::consts::FRAC_PI_2 - t.atan()) + 0.5 * (1.0 + t * t).ln();
        let got = counterexample_lemma2_integral(t);
        assert!((got - want).abs() <= 1e-10 * want, "T={t}: {got} vs {want}");
        assert!((counterexample_lemma2_closed_form(t) - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn probe_integral_of_exponential() {
    // inner integral (1 - e^{-T}) e^{-t2}, outer (1 - e^{-T})^2
    let e = KernelSpec::exponential(1.0).unwrap();
    let v = lemma2_integral(&e, 3.0, Probe::Constant, &q()).unwrap();
    assert!((v - exp_l1(1.0, 3.0)).abs() <= 1e-10 * v);
}

#[test]
fn relative_degree_of_warped_min() {
    for k in 0..=2u32 {
        let spec = KernelSpec::warped(vec![Atom::unit(1.0)], k, BaseShape::Min).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let p = relative_degree_probe(&spec, t, 4, 1e-4).unwrap();
            assert_eq!(p.estimated_degree, Some(k as usize + 1), "k={k} t={t}: {:?}", p.derivative_estimates);
        }
    }
    for spec in [KernelSpec::heaviside(), KernelSpec::tc(3.0).unwrap()] {
        let p = relative_degree_probe(&spec, 1.0, 3, 1e-4).unwrap();
        assert_eq!(p.estimated_degree, Some(1), "{spec}");
    }
    // with no nonzero derivative up to max_order there is no estimate
    let spec = KernelSpec::warped(vec![Atom::unit(1.0)], 2, BaseShape::Min).unwrap();
    let p = relative_degree_probe_with(&spec, 1.0, 1, 1e-4, 1e-3).unwrap();
    assert_eq!(p.estimated_degree, None);
    // a delay shifts the section start, not the degree
    let p = relative_degree_probe(&apply_delay(&spec, 0.5).unwrap(), 1.0, 4, 1e-4).unwrap();
    assert_eq!(p.estimated_degree, Some(3));
}

#[test]
fn smoothness_examples() {
    let e = KernelSpec::exponential(1.0).unwrap();
    let p = smoothness_probe(&e, 1.0, 0.5, 2, 1e-4).unwrap();
    assert!(p.is_differentiable());
    assert!((p.estimate() - (-1.5f64).exp()).abs() < 1e-3, "{}", p.estimate());

    let tc = KernelSpec::tc(2.0).unwrap();
    let p = smoothness_probe(&tc, 1.0, 1.0, 1, 1e-4).unwrap();
    assert!(!p.is_differentiable(), "{p:?}");
    // off the diagonal the TC section is smooth
    let p = smoothness_probe(&tc, 1.0, 0.4, 1, 1e-4).unwrap();
    assert!(p.is_differentiable(), "{p:?}");

    let p = smoothness_probe(&KernelSpec::heaviside(), 1.0, 0.3, 2, 1e-4).unwrap();
    assert_eq!(p.estimate(), 0.0);
    assert!(smoothness_probe(&e, 1.0, 1e-5, 1, 1e-4).is_err());
    assert!(smoothness_probe(&e, 1.0, 0.5, 0, 1e-4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn l1_grows_with_horizon(w in 0.2f64..5.0, t in 0.2f64..5.0) {
        let tc = KernelSpec::tc(w).unwrap();
        let a = l1_norm_estimate(&tc, t, &q()).unwrap();
        let b = l1_norm_estimate(&tc, 1.5 * t, &q()).unwrap();
        prop_assert!(b >= a);
        prop_assert!(b <= 2.0 / (w * w) * (1.0 + 1e-10));
    }
}
