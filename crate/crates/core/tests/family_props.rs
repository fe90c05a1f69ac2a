use fct_core::family::OneParamFamily;
use fct_core::poly::PointMap;
use proptest::prelude::*;

fn fd(fam: &OneParamFamily, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let p = fam.at(t + h).apply(x);
    let m = fam.at(t - h).apply(x);
    p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parameter_derivative_matches_differences(t in 0.0f64..1.4, x in -1.0f64..1.0, y in -0.5f64..0.5) {
        for (fam, pt) in [(OneParamFamily::logistic(), vec![0.5 * (x + 1.0)]), (OneParamFamily::henon(0.3), vec![x, y])] {
            let t = fam.window().0 + t;
            let d = fam.param_derivative(t, &pt);
            prop_assert!(max_err(&d, &fd(&fam, t, &pt, 1e-3)) < 1e-8);
        }
    }

    #[test]
    fn map_at_agrees_with_family(t in 2.5f64..4.0, x in 0.0f64..1.0) {
        let fam = OneParamFamily::logistic();
        prop_assert!((fam.map_at(t).apply(&[x])[0] - fam.at(t).apply(&[x])[0]).abs() < 1e-14);
    }

    #[test]
    fn linear_family_reproduces_its_base(t in -0.5f64..0.5, x in -1.0f64..1.0, y in -0.5f64..0.5) {
        let base = OneParamFamily::henon(0.3);
        let lin = OneParamFamily::linear(base.map_at(1.0), base.direction_at(1.0), (-1.0, 0.4)).unwrap();
        let got = lin.at(t).apply(&[x, y]);
        let want = base.at(1.0 + t).apply(&[x, y]);
        prop_assert!(max_err(&got, &want) < 1e-13);
    }
}
