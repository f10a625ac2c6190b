use proptest::prelude::*;
use sta_core::numerics::{
    find_root, gauss_legendre, integrate_adaptive, minimize, quadrature, quadrature_with_breaks, MinimizeOptions,
    OdeOptions,
};

proptest! {
    #[test]
    fn quadrature_integrates_cubics(c in prop::array::uniform4(-5.0f64..5.0), a in -3.0f64..0.0, w in 0.1f64..4.0) {
        let b = a + w;
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let anti = |x: f64| x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)));
        let exact = anti(b) - anti(a);
        let got = quadrature(p, a, b, 1e-12).unwrap();
        prop_assert!((got - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
    }

    #[test]
    fn quadrature_breaks_handle_kinks(k in 0.1f64..0.9) {
        let got = quadrature_with_breaks(|x: f64| (x - k).abs(), &[0.0, k, 1.0], 1e-12).unwrap();
        let exact = 0.5 * (k * k + (1.0 - k) * (1.0 - k));
        prop_assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two(n in 1usize..40) {
        let s: f64 = gauss_legendre(n).iter().map(|(_, w)| w).sum();
        prop_assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn ode_matches_exponential(lambda in -3.0f64..1.0, y0 in 0.1f64..10.0, t1 in 0.1f64..3.0) {
        let traj = integrate_adaptive(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = lambda * y[0],
            &[y0],
            (0.0, t1),
            &OdeOptions::with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        let exact = y0 * (lambda * t1).exp();
        prop_assert!((traj.final_state()[0] - exact).abs() <= 1e-9 * exact.abs());
        let mid = traj.interpolate(0.5 * t1).unwrap()[0];
        prop_assert!((mid - y0 * (0.5 * lambda * t1).exp()).abs() <= 1e-8 * exact.abs().max(y0));
    }

    #[test]
    fn roots_stay_in_bracket(r in -4.0f64..4.0) {
        let x = find_root(|x| (x - r) * (1.0 + x * x), (-5.0, 5.0), 1e-14).unwrap();
        prop_assert!((-5.0..=5.0).contains(&x));
        prop_assert!((x - r).abs() < 1e-10);
    }

    #[test]
    fn minimizer_finds_shifted_bowl(cx in -5.0f64..5.0, cy in -5.0f64..5.0) {
        let f = |p: &[f64]| (p[0] - cx).powi(2) + 3.0 * (p[1] - cy).powi(2) + 0.5 * (p[0] - cx) * (p[1] - cy);
        let r = minimize(f, &[0.0, 0.0], &[1.0, 1.0], &MinimizeOptions::default()).unwrap();
        prop_assert!((r.best_params[0] - cx).abs() < 1e-5 && (r.best_params[1] - cy).abs() < 1e-5);
        prop_assert!(r.best_cost <= f(&[0.0, 0.0]));
    }
}

#[test]
fn minimizer_is_deterministic() {
    let f = |p: &[f64]| (p[0] - 1.0).powi(4) + (p[0] * p[1] - 2.0).powi(2);
    let a = minimize(f, &[0.3, 0.3], &[0.5, 0.5], &MinimizeOptions::default()).unwrap();
    let b = minimize(f, &[0.3, 0.3], &[0.5, 0.5], &MinimizeOptions::default()).unwrap();
    assert_eq!(a.best_params, b.best_params);
    assert_eq!(a.evaluations, b.evaluations);
}
