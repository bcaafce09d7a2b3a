mod common;

use kernel_sysid::kernels::integrate_exponential_kernel_once;
use kernel_sysid::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn documented_values() {
    let e = KernelSpec::exponential(1.0).unwrap();
    assert_eq!(kernel_eval(&e, -0.5, 0.3), 0.0);
    assert_eq!(kernel_eval(&e, 0.0, 0.0), 1.0);
    let tc = KernelSpec::warped(vec![Atom::unit(2.0)], 0, BaseShape::Min).unwrap();
    assert!((kernel_eval(&tc, 1.0, 3.0) - (-6.0f64).exp()).abs() < 1e-16);
    assert_eq!(kernel_eval(&KernelSpec::gaussian(1.0).unwrap(), 2.0, 2.0), 1.0);
    assert_eq!(kernel_eval(&KernelSpec::heaviside(), 0.0, 3.0), 1.0);
}

#[test]
fn cubic_spline_values() {
    assert_eq!(cubic_spline_g(0.0, 0.7), 0.0);
    assert!((cubic_spline_g(1.0, 1.0) - 1.0 / 3.0).abs() < 1e-16);
    // s1 s2 min / 2 - min^3 / 6 written out for s1 = 0.3, s2 = 0.8
    let direct = 0.3 * 0.8 * 0.3 / 2.0 - 0.3f64.powi(3) / 6.0;
    assert!((cubic_spline_g(0.3, 0.8) - direct).abs() < 1e-16);
}

#[test]
fn integrated_exponential_matches_quadrature() {
    for &(w, t1, t2) in &[(1.0, 0.5, 2.0), (3.0, 1.5, 0.2), (0.4, 4.0, 4.0)] {
        let oracle = common::integrate(
            &mut |a| common::integrate(&mut |b| (-w * (a + b)).exp(), 0.0, t2, 1e-13),
            0.0,
            t1,
            1e-12,
        );
        let got = integrate_exponential_kernel_once(w, t1, t2);
        assert!((got - oracle).abs() <= 1e-10 * oracle, "{got} vs {oracle}");
    }
    assert_eq!(integrate_exponential_kernel_once(1.0, -0.1, 2.0), 0.0);
}

#[test]
fn delay_shifts_arguments() {
    let e = KernelSpec::exponential(1.0).unwrap();
    let d = apply_delay(&e, 1.0).unwrap();
    assert_eq!(kernel_eval(&d, 0.5, 2.0), 0.0);
    assert!((kernel_eval(&d, 1.5, 2.0) - (-1.5f64).exp()).abs() < 1e-15);
    let z = apply_delay(&e, 0.0).unwrap();
    for &(a, b) in &[(0.1, 0.2), (1.0, 3.0), (2.5, 0.4)] {
        assert_eq!(kernel_eval(&z, a, b), kernel_eval(&e, a, b));
    }
    assert!(apply_delay(&e, -1.0).is_err());
}

#[test]
fn quadratic_form_values() {
    let e = KernelSpec::exponential(1.0).unwrap();
    assert_eq!(psd_quadratic_form(&e, &[0.3, 0.9], &[0.0, 0.0]).unwrap(), 0.0);
    assert!((psd_quadratic_form(&e, &[1.0], &[1.0]).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
    assert!(psd_quadratic_form(&e, &[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn product_bound_on_grid() {
    assert_eq!(BaseShape::CubicSpline.product_bound(), Some(1.0 / 3.0));
    assert_eq!(BaseShape::Min.product_bound(), None);
    for i in 0..=100 {
        for j in 0..=100 {
            let (s1, s2) = (i as f64 / 100.0, j as f64 / 100.0);
            let cubic = BaseShape::CubicSpline.eval(s1, s2);
            assert!(cubic.abs() <= s1 * s2 / 3.0 + 1e-16, "cubic at {s1},{s2}");
            // min sits above the product everywhere on the square
            assert!(BaseShape::Min.eval(s1, s2) >= s1 * s2);
        }
    }
    // the cubic bound is attained at (1, 1)
    assert!((BaseShape::CubicSpline.eval(1.0, 1.0) - 1.0 / 3.0).abs() < 1e-16);
    let ratio = |s: f64| BaseShape::Min.eval(s, s) / (s * s);
    assert!(ratio(1e-3) > 999.0);
}

#[test]
fn section_value_at_origin() {
    for k in 0..3u32 {
        let spec = KernelSpec::warped(vec![Atom::unit(1.0)], k, BaseShape::Min).unwrap();
        let v = kernel_eval(&spec, 0.0, 1.3);
        if k == 0 {
            assert!(v > 0.0);
        } else {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn psd_on_random_point_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, spec) in common::kernel_zoo() {
        for _ in 0..20 {
            let n = rng.random_range(1..=20);
            let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..5.0)).collect();
            let (lo, hi) = common::eig_extremes(&common::eval_matrix(&spec, &pts));
            assert!(lo >= -1e-8 * hi, "{name}: min eig {lo}, max {hi}");
        }
    }
}

#[test]
fn text_round_trip() {
    for (name, spec) in common::kernel_zoo() {
        let back: KernelSpec = spec.to_string().parse().unwrap();
        assert_eq!(back, spec, "{name}");
    }
    let s: KernelSpec = "FAMILY=warped; atoms=1:2,0.5:30; k=1; G=cubicspline; D=0.5".parse().unwrap();
    assert_eq!(s.delay(), 0.5);
    assert!("family=warped; atoms=1:2; colour=red".parse::<KernelSpec>().is_err());
    assert!("family=exponential; atoms=1:2; k=1".parse::<KernelSpec>().is_err());
}

fn zoo_index() -> impl Strategy<Value = usize> {
    0..common::kernel_zoo().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn symmetric(i in zoo_index(), a in -1.0f64..6.0, b in -1.0f64..6.0) {
        let (_, spec) = &common::kernel_zoo()[i];
        prop_assert_eq!(kernel_eval(spec, a, b), kernel_eval(spec, b, a));
    }

    #[test]
    fn causal(i in zoo_index(), a in -2.0f64..6.0, b in -2.0f64..6.0) {
        let (_, spec) = &common::kernel_zoo()[i];
        if a.min(b) < spec.delay() {
            prop_assert_eq!(kernel_eval(spec, a, b), 0.0);
        }
    }

    #[test]
    fn tc_is_exp_of_max(w in 0.01f64..50.0, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let tc = KernelSpec::warped(vec![Atom::unit(w)], 0, BaseShape::Min).unwrap();
        let direct = (-w * a.max(b)).exp();
        prop_assert!((kernel_eval(&tc, a, b) - direct).abs() <= 1e-14);
    }

    #[test]
    fn quadratic_form_nonnegative(
        i in zoo_index(),
        pts in prop::collection::vec((-1.0f64..5.0, -1.0f64..1.0), 1..10),
    ) {
        let (_, spec) = &common::kernel_zoo()[i];
        let (t, c): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let q = psd_quadratic_form(spec, &t, &c).unwrap();
        let scale: f64 = c.iter().map(|x| x * x).sum::<f64>() * spec.atoms().iter().map(|a| a.mass).sum::<f64>().max(1.0);
        prop_assert!(q >= -1e-10 * scale, "{q}");
    }

    #[test]
    fn cubic_bound_random(s1 in 0.0f64..=1.0, s2 in 0.0f64..=1.0) {
        prop_assert!(cubic_spline_g(s1, s2).abs() <= s1 * s2 / 3.0 + 1e-16);
    }
}
