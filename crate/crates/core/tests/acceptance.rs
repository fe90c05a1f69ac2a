//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use fct_core::attractor::{atom_diameters, build_atoms, scaling_ratios};
use fct_core::cascade::{find_doubling_bifurcation, lyapunov_exponent, run_cascade, CascadeResult};
use fct_core::family::OneParamFamily;
use fct_core::io::{coeffs_to_json, parse_coeffs_json, parse_config};
use fct_core::lowdisc::halton;
use fct_core::persistence::{verify_shift_property, PersistenceChart};
use fct_core::poly::{iterate, MapNd, PointMap};
use fct_core::renorm1d::{
    linearize, renormalize, residual, solve_fixed_point, FixedPointResult, NewtonOptions, DEFAULT_INITIAL,
};
use fct_core::renorm_nd::{check_renormalizable, renormalization_chain, renormalize_nd, RefitOptions, PASS_MARGIN};
use fct_core::series::{compose_unimodal, fit_from_samples, scale_conjugate, sup_norm, AnalyticUnimodal, ChebGrid};

const LAMBDA: f64 = 0.3995;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(n: usize, title: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
        .unwrap_or_else(|_| outcome(false, "panicked".into()));
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} {}: {title}: {} ({:.1}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn fixed_point(k: usize) -> FixedPointResult {
    let opts = NewtonOptions { degree: k, ..NewtonOptions::default() };
    solve_fixed_point(&AnalyticUnimodal::new(DEFAULT_INITIAL.to_vec()), &opts).unwrap()
}

fn last_delta(c: &CascadeResult) -> f64 {
    *c.delta_estimates.last().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let fp = fixed_point(40);
    let r = residual(&fp.phi0).unwrap();
    outcome(r < 1e-8 && (fp.lambda - LAMBDA).abs() <= 5e-4, format!("lambda {:.7}, residual {r:.1e}", fp.lambda))
}

fn criterion_2() -> Outcome {
    let ev = linearize(&fixed_point(40).phi0, 1e-6).unwrap().leading_eigenvalue;
    let dl = last_delta(&run_cascade(&OneParamFamily::logistic(), 10).unwrap());
    let dh = last_delta(&run_cascade(&OneParamFamily::henon(0.3), 7).unwrap());
    let worst = rel(dl, ev).max(rel(dh, ev)).max(rel(dh, dl));
    outcome(worst < 0.02, format!("eigenvalue {ev:.6}, logistic {dl:.6}, henon {dh:.6}, worst gap {:.2}%", 100.0 * worst))
}

fn criterion_3() -> Outcome {
    let fam = OneParamFamily::logistic();
    let t1 = find_doubling_bifurcation(&fam, 0, (2.8, 3.2)).unwrap().t;
    let t2 = find_doubling_bifurcation(&fam, 1, (3.2, 3.5)).unwrap().t;
    let oracle = brute_force_second_doubling();
    outcome(
        (t1 - 3.0).abs() < 1e-9 && (t2 - 3.449490).abs() <= 1e-5 && (t2 - oracle).abs() <= 1e-5,
        format!("t1 {t1:.12}, t2 {t2:.9}, scan oracle {oracle:.7}"),
    )
}

/// Parameter scan for the point where the 2-cycle multiplier `a²(1−2x)(1−2y)` passes −1.
/// The cycle comes from sign changes of `f²(x) − x` on an x-grid, refined by bisection.
fn brute_force_second_doubling() -> f64 {
    let mult = |a: f64| {
        let f = |x: f64| a * x * (1.0 - x);
        let g = |x: f64| f(f(x)) - x;
        let fixed = 1.0 - 1.0 / a;
        let n = 2000;
        for i in 0..n {
            let (mut lo, mut hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            if g(lo) * g(hi) > 0.0 {
                continue;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(lo) * g(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let x = 0.5 * (lo + hi);
            if x > 1e-9 && (x - fixed).abs() > 1e-6 {
                return a * a * (1.0 - 2.0 * x) * (1.0 - 2.0 * f(x));
            }
        }
        f64::NAN
    };
    let mut a = 3.1;
    for step in [1e-2, 1e-4, 1e-6] {
        while mult(a + step) > -1.0 {
            a += step;
        }
    }
    a + 0.5e-6
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, fam, n, g, tol) in
        [("logistic", OneParamFamily::logistic(), 10, 8, 0.15), ("henon", OneParamFamily::henon(0.3), 7, 6, 0.20)]
    {
        let t = run_cascade(&fam, n).unwrap().t_inf.unwrap();
        match build_atoms(&fam, t, g, 64 << g) {
            Ok(tree) => {
                let r = scaling_ratios(&atom_diameters(&tree)).unwrap().lambda_estimate;
                let good = tree.is_nested() && tree.is_cyclic(&fam) && rel(r, LAMBDA) <= tol;
                ok &= good;
                notes.push(format!("{name} {g} generations ratio {r:.4} nested {} cyclic {}", tree.is_nested(), tree.is_cyclic(&fam)));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(ok, notes.join("; "))
}

fn criterion_5() -> Outcome {
    let fam = OneParamFamily::logistic();
    let chart = PersistenceChart::from_family(&fam, 8).unwrap();
    let b0 = chart.b(&chart.psi0).unwrap();
    let shift = verify_shift_property(&fam, &[-0.05, 0.05], 8).unwrap();
    let d = chart.chart_gradient(std::slice::from_ref(&chart.v0), 1e-3).unwrap()[0];
    outcome(
        b0.abs() <= 1e-5 && shift < 1e-5 && (d + 1.0).abs() <= 0.05,
        format!("b(psi0) {b0:.1e}, shift deviation {shift:.1e}, derivative along v0 {d:.6}"),
    )
}

fn criterion_6() -> Outcome {
    let psi = MapNd::standard_fct(2, &fixed_point(40).phi0).unwrap();
    match renormalization_chain(&psi, 4, 2000, &RefitOptions::default()) {
        Ok(chain) => {
            let worst = chain.iter().map(|l| l.check.min_margin()).fold(f64::INFINITY, f64::min);
            outcome(
                chain.len() == 4 && chain.iter().all(|l| l.check.passes(PASS_MARGIN)),
                format!("{} levels, smallest margin {worst:.4}", chain.len()),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_7() -> Outcome {
    let fam = OneParamFamily::logistic();
    let c = run_cascade(&fam, 10).unwrap();
    let ts = c.params();
    let sinks: Vec<f64> = ts
        .windows(2)
        .take(5)
        .map(|w| lyapunov_exponent(&fam, 0.5 * (w[0] + w[1]), 20_000, 20_000, fam.start()).unwrap())
        .collect();
    let t_inf = c.t_inf.unwrap();
    let span = 0.2 * (fam.window().1 - fam.window().0);
    let positive = (1..=50)
        .filter(|i| {
            let t = t_inf + span * *i as f64 / 51.0;
            lyapunov_exponent(&fam, t, 2000, 20_000, fam.start()).is_ok_and(|l| l > 0.0)
        })
        .count();
    let worst = sinks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        sinks.iter().all(|&l| l < 0.0) && positive >= 30,
        format!("largest sink-side exponent {worst:.4}, {positive}/50 positive beyond t_inf"),
    )
}

/// Fixed-sample pass over every module's invariants; the proptest suites
/// cover the same properties with generated inputs.
fn criterion_8() -> Outcome {
    let mut failed: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok {
            failed.push(name);
        }
    };
    let pts: Vec<Vec<f64>> = (1..=100).map(|i| halton(i, 3)).collect();

    // series
    let f = AnalyticUnimodal::new(vec![1.0, -1.3, 0.2, -0.05]);
    let g = fit_from_samples(&ChebGrid::of_series(32, &f), 6).unwrap();
    check("series fit round trip", g.coeffs().iter().enumerate().all(|(j, c)| (c - f.coeffs().get(j).unwrap_or(&0.0)).abs() < 1e-10));
    let back = scale_conjugate(&scale_conjugate(&f, 3.7, 3).unwrap(), 1.0 / 3.7, 3).unwrap();
    check("series scale conjugation", back.coeffs().iter().zip(f.coeffs()).all(|(a, b)| (a - b).abs() < 1e-10));
    let h = AnalyticUnimodal::new(vec![0.3, -0.2, 0.1]);
    let fh = compose_unimodal(&f, &h, 12).unwrap();
    check(
        "series composition",
        pts.iter().all(|p| {
            let x = 2.0 * p[0] - 1.0;
            (fh.eval(x).unwrap() - f.eval(h.eval(x).unwrap()).unwrap()).abs() < 1e-8
        }),
    );
    check(
        "series evaluation",
        pts.iter().all(|p| {
            let x = 2.0 * p[0] - 1.0;
            let direct: f64 = f.coeffs().iter().enumerate().map(|(j, c)| c * x.powi(2 * j as i32)).sum();
            (f.eval(x).unwrap() - direct).abs() < 1e-15
        }),
    );

    // renorm1d
    let fp = fixed_point(40);
    check("fixed point idempotence", residual(&fp.phi0).unwrap() < 1e-8);
    check("truncation stability", (fixed_point(30).lambda - fp.lambda).abs() < 1e-6);
    let s = &fp.step_norms;
    check("quadratic Newton tail", s.len() >= 2 && (s[s.len() - 1] <= 1e3 * s[s.len() - 2].powi(2) || s[s.len() - 1] < 1e-14));
    let j = |h: f64| linearize(&fp.phi0, h).unwrap().jacobian;
    let (a, b, c) = (j(8e-5), j(4e-5), j(2e-5));
    let ratio = (&a - &b).amax() / (&b - &c).amax();
    check("second-order difference Jacobian", (3.0..5.0).contains(&ratio));
    let once = renormalize(&fp.phi0, 40).unwrap();
    check("renormalize twice", sup_norm(&renormalize(&once, 40).unwrap().sub(&once)) < 1e-7);

    // renorm_nd
    let psi = MapNd::standard_fct(2, &fp.phi0).unwrap();
    let refit = RefitOptions::default();
    let chain = renormalization_chain(&psi, 4, 2000, &refit).unwrap();
    let mut map = psi.clone();
    let mut shrink_ok = true;
    for level in &chain {
        let before = check_renormalizable(&map, &level.disk, 2000).unwrap();
        let after = check_renormalizable(&map, &level.disk.shrunk(0.9).unwrap(), 2000).unwrap();
        shrink_ok &= after.inside_margin >= before.inside_margin;
        map = renormalize_nd(&map, &level.disk, &refit).unwrap().map;
    }
    check("inside margin monotone under shrinkage", shrink_ok);
    check(
        "iterate composes",
        pts.iter().all(|p| {
            let x = [p[0] - 0.5, p[1] - 0.5];
            iterate(&psi, &x, 7).unwrap() == iterate(&psi, &iterate(&psi, &x, 3).unwrap(), 4).unwrap()
        }),
    );
    check("standard map shift", pts.iter().all(|p| psi.apply(&[p[0], p[1]])[0] == p[1]));

    // cascade
    let lc = run_cascade(&OneParamFamily::logistic(), 10).unwrap();
    let hc = run_cascade(&OneParamFamily::henon(0.3), 7).unwrap();
    for c in [&lc, &hc] {
        check("doubling parameters monotone", c.params().windows(2).all(|w| w[1] > w[0]));
        let d: Vec<f64> = c.delta_estimates[3..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        check("delta differences shrink", d.windows(2).all(|w| w[1] < w[0]));
    }
    check("first doubling at three", (lc.params()[0] - 3.0).abs() < 1e-9);

    // attractor
    for (fam, c, g) in [(OneParamFamily::logistic(), &lc, 8), (OneParamFamily::henon(0.3), &hc, 6)] {
        let tree = build_atoms(&fam, c.t_inf.unwrap(), g, 64 << g).unwrap();
        check("atoms nested", tree.is_nested());
        check("atoms cyclic", tree.is_cyclic(&fam));
        let d = atom_diameters(&tree);
        check("diameters decrease", d.windows(2).all(|w| w[1] < w[0]));
        let r = scaling_ratios(&d).unwrap().ratios;
        let rd: Vec<f64> = r[4..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        check("ratios stabilize", rd.windows(2).all(|w| w[1] < w[0]));
    }

    // persistence
    let chart = PersistenceChart::from_family(&OneParamFamily::henon(0.3), 6).unwrap();
    check("henon shift identity", verify_shift_property(&OneParamFamily::henon(0.3), &[-0.05, 0.02, 0.05], 6).unwrap() < 1e-5);
    check("henon base point", chart.b(&chart.psi0).unwrap().abs() < 1e-5);
    let probe = &chart.default_probes()[3].1;
    let chi = chart.psi0.axpy(0.01, probe).unwrap();
    let chi = chi.axpy(chart.b(&chi).unwrap(), &chart.v0).unwrap();
    let t_inf = run_cascade(&chart.family_through(&chi).unwrap(), 6).unwrap().t_inf.unwrap();
    check("membership consistency", t_inf.abs() < 1e-4);

    // io and determinism
    check("coeffs round trip", parse_coeffs_json(&coeffs_to_json(&fp.phi0)).unwrap() == fp.phi0);
    check("config parse", parse_config("nmax = 7\nfamily = henon\n").is_ok_and(|c| c.len() == 2));
    check("deterministic cascade", run_cascade(&OneParamFamily::logistic(), 10).unwrap().params() == lc.params());

    if failed.is_empty() {
        outcome(true, "all invariant checks hold".into())
    } else {
        outcome(false, format!("failed: {}", failed.join(", ")))
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        report(1, "fixed point", secs(30), criterion_1),
        report(2, "universality", secs(120), criterion_2),
        report(3, "algebraic anchors", secs(10), criterion_3),
        report(4, "attractor geometry", secs(60), criterion_4),
        report(5, "persistence identities", secs(120), criterion_5),
        report(6, "n-D renormalizability", secs(60), criterion_6),
        report(7, "route to chaos", secs(60), criterion_7),
        report(8, "invariant suite", secs(600), criterion_8),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
