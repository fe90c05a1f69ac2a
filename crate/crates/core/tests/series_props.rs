use fct_core::series::{compose_unimodal, fit_from_samples, scale_conjugate, AnalyticUnimodal, ChebGrid};
use proptest::prelude::*;

fn coeffs(max_len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_reproduces_low_degree_coefficients(c in coeffs(7, 1.0), extra in 0usize..3) {
        let f = AnalyticUnimodal::new(c.clone());
        let k = f.trunc_degree() + extra;
        let g = fit_from_samples(&ChebGrid::of_series(4 * (k + 1), &f), k).unwrap();
        for (j, v) in g.coeffs().iter().enumerate() {
            let want = c.get(j).copied().unwrap_or(0.0);
            prop_assert!((v - want).abs() < 1e-10, "c{j}: {v} vs {want}");
        }
    }

    #[test]
    fn scale_conjugate_inverts(c in coeffs(7, 1.0), s in 0.1f64..10.0) {
        let f = AnalyticUnimodal::new(c);
        let d = f.trunc_degree();
        let back = scale_conjugate(&scale_conjugate(&f, s, d).unwrap(), 1.0 / s, d).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn compose_matches_pointwise(cf in coeffs(4, 1.0), ch in coeffs(4, 0.25), xs in prop::collection::vec(-1.0f64..1.0, 100)) {
        let f = AnalyticUnimodal::new(cf);
        let h = AnalyticUnimodal::new(ch);
        // g_f(g_h(u)²) has degree deg_f · 2 deg_h in u
        let degree = (f.trunc_degree() * 2 * h.trunc_degree()).max(1);
        let fh = compose_unimodal(&f, &h, degree).unwrap();
        for x in xs {
            let direct = f.eval(h.eval(x).unwrap()).unwrap();
            prop_assert!((fh.eval(x).unwrap() - direct).abs() < 1e-8);
        }
    }

    #[test]
    fn eval_matches_monomial_sum(c in coeffs(12, 2.0), x in -1.0f64..1.0) {
        let f = AnalyticUnimodal::new(c.clone());
        let direct: f64 = c.iter().enumerate().map(|(j, cj)| cj * x.powi(2 * j as i32)).sum();
        let scale: f64 = c.iter().map(|v| v.abs()).sum();
        prop_assert!((f.eval(x).unwrap() - direct).abs() <= 1e-14 * scale.max(1.0));
        prop_assert_eq!(f.eval(x).unwrap(), f.eval(-x).unwrap());
    }
}
