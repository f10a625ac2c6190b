use std::collections::BTreeMap;

use proptest::prelude::*;
use sta_core::ansatz::{fit_constrained_polynomial, fit_constrained_polynomial_in, make_tanh_tan, Basis, BoundaryCondition};

fn rest_to_rest(span: f64, d: f64) -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::new(0, 0.0, 0.0),
        BoundaryCondition::new(1, 0.0, 0.0),
        BoundaryCondition::new(2, 0.0, 0.0),
        BoundaryCondition::new(0, span, d),
        BoundaryCondition::new(1, span, 0.0),
        BoundaryCondition::new(2, span, 0.0),
    ]
}

proptest! {
    #[test]
    fn conditions_hold_after_fit(
        span in 0.5f64..5.0,
        d in -2.0f64..2.0,
        free in prop::collection::vec(-50.0f64..50.0, 0..3),
    ) {
        let degree = 5 + free.len();
        let map: BTreeMap<usize, f64> = free.iter().enumerate().map(|(i, &v)| (i + 3, v)).collect();
        let conds = rest_to_rest(span, d);
        let s = fit_constrained_polynomial(degree, &conds, &map, span).unwrap();
        for c in &conds {
            let e = s.evaluate(c.time).unwrap();
            let got = [e.value, e.d1, e.d2][c.order as usize] * span.powi(c.order as i32);
            let scale = 1.0 + d.abs() + free.iter().map(|v| v.abs()).sum::<f64>();
            prop_assert!((got - c.value * span.powi(c.order as i32)).abs() <= 1e-12 * scale, "{c:?}: {got}");
        }
    }

    #[test]
    fn legendre_fit_holds_conditions_at_high_degree(
        free in prop::collection::vec(-0.2f64..0.2, 14),
        span in 0.01f64..1.0,
    ) {
        let map: BTreeMap<usize, f64> = free.iter().enumerate().map(|(i, &v)| (i + 6, v)).collect();
        let conds = rest_to_rest(span, 1.0);
        let s = fit_constrained_polynomial_in(Basis::Legendre, 19, &conds, &map, span).unwrap();
        for c in &conds {
            let e = s.evaluate(c.time).unwrap();
            let got = [e.value, e.d1, e.d2][c.order as usize] * span.powi(c.order as i32);
            // endpoint derivatives of P_k grow like k^2 per order
            let scale = 1.0 + free.iter().enumerate().map(|(i, v)| v.abs() * ((i + 6) as f64).powi(2 * c.order as i32)).sum::<f64>();
            prop_assert!((got - c.value).abs() <= 1e-12 * scale, "{c:?}: {}", got - c.value);
        }
    }

    #[test]
    fn derivatives_match_finite_differences(
        free in prop::collection::vec(-20.0f64..20.0, 2),
        tau in 0.05f64..0.95,
        a1 in 0.3f64..4.0,
        width in 1.05f64..3.0,
    ) {
        let span = 2.0;
        let map: BTreeMap<usize, f64> = free.iter().enumerate().map(|(i, &v)| (i + 3, v)).collect();
        let poly = fit_constrained_polynomial(7, &rest_to_rest(span, 1.0), &map, span).unwrap();
        let tanh = make_tanh_tan(0.5, 0.5, a1, width, span).unwrap();
        for s in [poly, tanh] {
            let h = 1e-6 * span;
            let t = tau * span;
            let (m, c, p) = (s.evaluate(t - h).unwrap(), s.evaluate(t).unwrap(), s.evaluate(t + h).unwrap());
            let d1 = (p.value - m.value) / (2.0 * h);
            let d2 = (p.d1 - m.d1) / (2.0 * h);
            prop_assert!((d1 - c.d1).abs() <= 1e-6 * c.d1.abs().max(1.0));
            prop_assert!((d2 - c.d2).abs() <= 1e-6 * c.d2.abs().max(1.0));
        }
    }

    #[test]
    fn tanh_tan_is_point_symmetric(
        amp in 0.1f64..2.0,
        offset in -1.0f64..1.0,
        a1 in 0.1f64..5.0,
        width in 1.01f64..4.0,
        tau in 0.0f64..1.0,
    ) {
        let span = 3.0;
        let s = make_tanh_tan(amp, offset, a1, width, span).unwrap();
        let (a, b) = (s.evaluate(tau * span).unwrap(), s.evaluate(span - tau * span).unwrap());
        prop_assert!((a.value + b.value - 2.0 * offset).abs() < 1e-12);
        prop_assert!(a.d1 >= 0.0);
    }
}
