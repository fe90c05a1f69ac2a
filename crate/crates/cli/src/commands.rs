use fct_core::attractor::{atom_diameters, build_atoms, scaling_ratios, verify_periodic_saddles, AtomShape, POINTS_PER_ATOM};
use fct_core::cascade::{bifurcation_diagram, run_cascade};
use fct_core::family::{OneParamFamily, DEFAULT_HENON_B};
use fct_core::io::{coeffs_to_json, csv, parse_coeffs_json, parse_disk_json};
use fct_core::persistence::{verify_shift_property, PersistenceChart, DEFAULT_GRADIENT_STEP, MIN_CHART_DEPTH};
use fct_core::poly::MapNd;
use fct_core::renorm1d::{linearize, solve_fixed_point, NewtonOptions, DEFAULT_INITIAL};
use fct_core::renorm_nd::{check_renormalizable, renormalization_chain, RefitOptions, DEFAULT_REFIT_DEGREE, MIN_SAMPLES};
use fct_core::series::{AnalyticUnimodal, DEFAULT_DEGREE, MAX_DEGREE};
use serde_json::{json, Value};

use crate::settings::{in_range, positive, Settings};
use crate::{
    read_file, AttractorArgs, BifdiagArgs, CascadeArgs, Failure, FamilyArgs, FamilyName, FixpointArgs, ManifoldArgs,
    NdcheckArgs, Output,
};

const FAMILY_KEYS: [&str; 2] = ["family", "henon_b"];
const LINEARIZE_STEP: f64 = 1e-6;

fn keys<'a>(own: &[&'a str], family: bool) -> Vec<&'a str> {
    let mut k = own.to_vec();
    if family {
        k.extend(FAMILY_KEYS);
    }
    k
}

fn family(a: &FamilyArgs, s: &Settings) -> Result<(FamilyName, OneParamFamily), Failure> {
    let name = s.get(a.family, "family", FamilyName::Logistic)?;
    let fam = match name {
        FamilyName::Logistic => OneParamFamily::logistic(),
        FamilyName::Henon => {
            let b = s.get(a.henon_b, "henon_b", DEFAULT_HENON_B)?;
            if !(b.is_finite() && b.abs() < 1.0) {
                return Err(Failure::Usage(format!("--henon-b must satisfy |b| < 1, got {b}")));
            }
            OneParamFamily::henon(b)
        }
    };
    Ok((name, fam))
}

fn family_label(name: FamilyName) -> &'static str {
    match name {
        FamilyName::Logistic => "logistic",
        FamilyName::Henon => "henon",
    }
}

fn with_files(mut v: Value, out: &Output) -> Value {
    v["reports"] = json!(out.written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    v
}

pub fn fixpoint(a: FixpointArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&["degree", "tol", "max_iters", "initial", "linearize"])?;
    let degree = in_range("degree", s.get(a.degree, "degree", DEFAULT_DEGREE)?, 1, MAX_DEGREE)?;
    let tol = positive("tol", s.get(a.tol, "tol", 1e-8)?)?;
    let max_iters = in_range("max-iters", s.get(a.max_iters, "max_iters", 50)?, 1, 10_000)?;
    let initial = match s.value(a.initial, "initial")? {
        Some(path) => parse_coeffs_json(&read_file(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => AnalyticUnimodal::new(DEFAULT_INITIAL.to_vec()),
    };
    let fp = solve_fixed_point(&initial, &NewtonOptions { degree, tol, max_iters })?;
    let mut report = json!({
        "lambda": fp.lambda,
        "residual": fp.residual,
        "newton_iters": fp.newton_iters,
        "degree": degree,
        "coeffs": fp.phi0.coeffs(),
        "step_norms": fp.step_norms,
    });
    if s.flag(a.linearize, "linearize")? {
        let lin = linearize(&fp.phi0, LINEARIZE_STEP)?;
        report["leading_eigenvalue"] = json!(lin.leading_eigenvalue);
        report["expanding_count"] = json!(lin.expanding_count);
        report["expanding_count_full"] = json!(lin.expanding_count_full);
    }
    let report = out.write_json("fixpoint.json", report)?;
    out.write("phi0.coeffs.json", &(coeffs_to_json(&fp.phi0) + "\n"))?;
    let mut summary = report;
    summary.as_object_mut().expect("object").remove("coeffs");
    Ok(with_files(summary, out))
}

pub fn cascade(a: CascadeArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&keys(&["nmax"], true))?;
    let (name, fam) = family(&a.family, s)?;
    let default_nmax = if name == FamilyName::Logistic { 10 } else { 7 };
    let nmax = in_range("nmax", s.get(a.nmax, "nmax", default_nmax)?, 0, 16)?;
    let c = run_cascade(&fam, nmax)?;
    let mut report = serde_json::to_value(&c).expect("cascade serializes");
    report["family"] = json!(family_label(name));
    let report = out.write_json("cascade.json", report)?;
    // δ_N is defined once t_{N−1} and t_{N+1} exist
    let rows = c.doubling_params.iter().map(|&(n, t)| {
        let delta = if n >= 1 { c.delta_estimates.get(n - 1).map(|d| d.to_string()).unwrap_or_default() } else { String::new() };
        vec![n.to_string(), t.to_string(), delta]
    });
    out.write("cascade.csv", &csv(&["n", "t_n", "delta_n"], rows))?;
    Ok(with_files(report, out))
}

pub fn attractor(a: AttractorArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&keys(&["generations", "points", "nmax", "t"], true))?;
    let (name, fam) = family(&a.family, s)?;
    let logistic = name == FamilyName::Logistic;
    let generations = in_range("generations", s.get(a.generations, "generations", if logistic { 8 } else { 6 })?, 1, 12)?;
    let points = s.get(a.points, "points", POINTS_PER_ATOM << generations)?;
    let nmax = in_range("nmax", s.get(a.nmax, "nmax", if logistic { 10 } else { 8 })?, 3, 16)?;
    let t = match s.value(a.t, "t")? {
        Some(t) => t,
        None => run_cascade(&fam, nmax)?.t_inf.expect("at least four doublings"),
    };
    let tree = build_atoms(&fam, t, generations, points)?;
    let diameters = atom_diameters(&tree);
    let ratios = scaling_ratios(&diameters)?;
    let saddles = verify_periodic_saddles(&fam, t, &[0, 1, 2, 3]);
    let report = json!({
        "family": family_label(name),
        "t": t,
        "points": points,
        "generations": tree.generations.iter().enumerate().map(|(m, g)| json!({
            "generation": m,
            "count": g.len(),
            "max_diameter": diameters[m],
        })).collect::<Vec<_>>(),
        "diameters": diameters,
        "ratios": ratios.ratios,
        "lambda_estimate": ratios.lambda_estimate,
        "nested": tree.is_nested(),
        "cyclic": tree.is_cyclic(&fam),
        "saddles": saddles,
    });
    let report = out.write_json("attractor.json", report)?;
    let dim = fam.dim();
    let mut header = vec!["generation".to_string(), "index".to_string()];
    header.extend((0..dim).map(|i| format!("center_{i}")));
    header.push("diameter".to_string());
    let rows = tree.generations.iter().enumerate().flat_map(|(m, g)| {
        g.iter().map(move |atom| {
            let center = match &atom.shape {
                AtomShape::Interval { lo, hi } => vec![0.5 * (lo + hi)],
                AtomShape::Box { .. } => atom.center.clone(),
            };
            let mut row = vec![m.to_string(), atom.index.to_string()];
            row.extend(center.iter().map(f64::to_string));
            row.push(atom.diameter.to_string());
            row
        })
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write("atoms.csv", &csv(&header_refs, rows))?;
    Ok(with_files(report, out))
}

pub fn ndcheck(a: NdcheckArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&["dim", "levels", "samples", "degree", "disk"])?;
    let dim = in_range("dim", s.get(a.dim, "dim", 2)?, 2, 6)?;
    let levels = in_range("levels", s.get(a.levels, "levels", 4)?, 1, 8)?;
    let samples = in_range("samples", s.get(a.samples, "samples", 2000)?, MIN_SAMPLES, 1_000_000)?;
    let degree = in_range("degree", s.get(a.degree, "degree", DEFAULT_REFIT_DEGREE)?, 1, 16)?;
    let disk = match s.value(a.disk, "disk")? {
        Some(path) => Some(parse_disk_json(&read_file(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let fp = solve_fixed_point(&AnalyticUnimodal::new(DEFAULT_INITIAL.to_vec()), &NewtonOptions::default())?;
    let psi = MapNd::standard_fct(dim, &fp.phi0)?;
    let report = match disk {
        Some(d) => {
            if d.dim() != dim {
                return Err(Failure::Usage(format!("disk has dimension {} but --dim is {dim}", d.dim())));
            }
            let check = check_renormalizable(&psi, &d, samples)?;
            json!({ "dim": dim, "samples": samples, "disk": d, "check": check, "passed": check.passes(fct_core::renorm_nd::PASS_MARGIN) })
        }
        None => {
            let chain = renormalization_chain(&psi, levels, samples, &RefitOptions { degree, samples, ..RefitOptions::default() })?;
            json!({ "dim": dim, "samples": samples, "refit_degree": degree, "levels": chain })
        }
    };
    let report = out.write_json("ndcheck.json", report)?;
    Ok(with_files(report, out))
}

pub fn manifold(a: ManifoldArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&keys(&["depth", "h", "shifts"], true))?;
    let (name, fam) = family(&a.family, s)?;
    let default_depth = if name == FamilyName::Logistic { 8 } else { 6 };
    let depth = in_range("depth", s.get(a.depth, "depth", default_depth)?, MIN_CHART_DEPTH, 14)?;
    let h = positive("h", s.get(a.h, "h", DEFAULT_GRADIENT_STEP)?)?;
    let shifts_text = s.get(a.shifts, "shifts", "-0.05,0.05".to_string())?;
    let shifts = shifts_text
        .split(',')
        .map(|v| v.trim().parse::<f64>().ok().filter(|t| t.abs() < 0.5))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Failure::Usage(format!("--shifts must be comma-separated numbers below 0.5 in size, got {shifts_text:?}")))?;
    let chart = PersistenceChart::from_family(&fam, depth)?;
    let b_value = chart.b(&chart.psi0)?;
    let probes = chart.default_probes();
    let dirs: Vec<MapNd> = probes.iter().map(|p| p.1.clone()).collect();
    let grad = chart.chart_gradient(&dirs, h)?;
    let shift_check = verify_shift_property(&fam, &shifts, depth)?;
    let radius = chart.validity_radius(&[1e-3, 1e-2, 5e-2, 1e-1]);
    let report = json!({
        "family": family_label(name),
        "b_value": b_value,
        "gradient": probes.iter().map(|p| p.0.clone()).zip(grad).collect::<Vec<_>>(),
        "shift_check": shift_check,
        "shifts": shifts,
        "depth": depth,
        "h": h,
        "validity_radius": radius,
    });
    let report = out.write_json("manifold.json", report)?;
    Ok(with_files(report, out))
}

pub fn bifdiag(a: BifdiagArgs, s: &Settings, out: &mut Output) -> Result<Value, Failure> {
    s.check_keys(&keys(&["tmin", "tmax", "steps", "transient", "samples"], true))?;
    let (name, fam) = family(&a.family, s)?;
    let (lo, hi) = fam.window();
    let tmin = s.get(a.tmin, "tmin", lo)?;
    let tmax = s.get(a.tmax, "tmax", hi)?;
    if !(tmin.is_finite() && tmax.is_finite() && tmin < tmax) {
        return Err(Failure::Usage(format!("need tmin < tmax, got {tmin} and {tmax}")));
    }
    let steps = in_range("steps", s.get(a.steps, "steps", 400)?, 2, 1_000_000)?;
    let transient = s.get(a.transient, "transient", 1000)?;
    let samples = in_range("samples", s.get(a.samples, "samples", 64)?, 1, 1_000_000)?;
    let ts: Vec<f64> = (0..steps).map(|i| tmin + (tmax - tmin) * i as f64 / (steps - 1) as f64).collect();
    let pts = bifurcation_diagram(&fam, &ts, transient, samples);
    let count = pts.len();
    out.write("bifdiag.csv", &csv(&["t", "x"], pts.into_iter().map(|(t, x)| vec![t.to_string(), x.to_string()])))?;
    Ok(with_files(json!({ "family": family_label(name), "tmin": tmin, "tmax": tmax, "steps": steps, "points": count }), out))
}
