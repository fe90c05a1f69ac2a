//! Period-doubling renormalization `Rf(x) = f(1)⁻¹ · f(f(f(1)·x))` on even
//! series, its normalized fixed point and the linearization there.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{compose_series, mul_trunc, sup_norm, AnalyticUnimodal, DEFAULT_DEGREE, MAX_DEGREE};

/// Starting guess `φ(x) = 1 − 1.4x²`.
pub const DEFAULT_INITIAL: [f64; 2] = [1.0, -1.4];

const RANGE_GRID: usize = 257;
const NEWTON_FD_STEP: f64 = 1e-7;
/// Overshoot of the inner image past the domain edge tolerated by `renormalize`;
/// the series extends analytically slightly past `[-1, 1]` and difference
/// quotients perturb `c₀` off the boundary value.
const RANGE_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    pub phi0: AnalyticUnimodal,
    pub lambda: f64,
    pub residual: f64,
    pub newton_iters: usize,
    /// Max-norm of every Newton update, in order.
    pub step_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearizationResult {
    /// Full `(K+1)×(K+1)` derivative in coefficient coordinates.
    pub jacobian: DMatrix<f64>,
    /// Dominant eigenvalue on the normalized slice (`c₀` pinned).
    pub leading_eigenvalue: f64,
    /// Eigenvalues of modulus > 1 on the normalized slice.
    pub expanding_count: usize,
    /// Eigenvalues of modulus > 1 of the full matrix.
    pub expanding_count_full: usize,
    /// Slice eigenvalues sorted by decreasing modulus, as `(re, im)`.
    pub spectrum: Vec<(f64, f64)>,
}

pub fn lambda_of(f: &AnalyticUnimodal) -> f64 {
    -f.eval_unchecked(1.0)
}

/// Even series of `x ↦ f(1)⁻¹ · f(f(f(1)·x))` truncated to `degree`.
pub fn renormalize(f: &AnalyticUnimodal, degree: usize) -> Result<AnalyticUnimodal> {
    if degree > MAX_DEGREE {
        return Err(Error::Config(format!("truncation degree {degree} exceeds maximum {MAX_DEGREE}")));
    }
    let hw = f.halfwidth();
    if hw < 1.0 {
        return Err(Error::Domain { x: 1.0, halfwidth: hw });
    }
    let s = f.eval_unchecked(1.0);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::SingularScaling(s));
    }
    if !(s.abs() <= hw * (1.0 + RANGE_SLACK)) {
        return Err(Error::Range { value: s, halfwidth: hw });
    }
    // the inner image f(s·x) must stay inside f's domain
    let reach = (0..RANGE_GRID)
        .map(|i| f.eval_unchecked(s * i as f64 / (RANGE_GRID - 1) as f64).abs())
        .fold(0.0, f64::max);
    if !(reach <= hw * (1.0 + RANGE_SLACK)) {
        return Err(Error::Range { value: reach, halfwidth: hw });
    }
    let s2 = s * s;
    let mut p = 1.0;
    let inner: Vec<f64> = f
        .coeffs()
        .iter()
        .take(degree + 1)
        .map(|&c| {
            let v = c * p;
            p *= s2;
            v
        })
        .collect();
    let squared = mul_trunc(&inner, &inner, degree);
    let mut coeffs = compose_series(f.coeffs(), &squared, degree);
    coeffs.iter_mut().for_each(|c| *c /= s);
    Ok(AnalyticUnimodal::with_halfwidth(coeffs, hw))
}

/// `sup |Rf − f|` on the domain. `Rf` is kept to its exact degree `2K²` (capped), so the
/// defect is not hidden by truncating back to the input's degree.
pub fn residual(f: &AnalyticUnimodal) -> Result<f64> {
    let k = f.trunc_degree();
    let r = renormalize(f, (2 * k * k).clamp(k, MAX_DEGREE))?;
    Ok(sup_norm(&r.sub(f)))
}

/// `F(c) = coeffs(R c) − c` restricted to indices `1..=K`.
fn slice_defect(c: &[f64]) -> Result<Vec<f64>> {
    let f = AnalyticUnimodal::new(c.to_vec());
    let r = renormalize(&f, c.len() - 1)?;
    Ok(r.coeffs()[1..].iter().zip(&c[1..]).map(|(a, b)| a - b).collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central-difference derivative of `coeffs ∘ R` with respect to the
/// coefficients listed in `cols`, rows restricted to `rows`.
fn fd_jacobian(c: &[f64], cols: &[usize], rows: std::ops::Range<usize>, h: f64) -> Result<DMatrix<f64>> {
    let degree = c.len() - 1;
    let columns: Vec<Vec<f64>> = cols
        .par_iter()
        .map(|&j| {
            let mut plus = c.to_vec();
            let mut minus = c.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let rp = renormalize(&AnalyticUnimodal::new(plus), degree)?;
            let rm = renormalize(&AnalyticUnimodal::new(minus), degree)?;
            Ok(rows.clone().map(|i| (rp.coeffs()[i] - rm.coeffs()[i]) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| columns[j][i]))
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub degree: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { degree: DEFAULT_DEGREE, tol: 1e-8, max_iters: 50 }
    }
}

/// Damped Newton on the normalized slice `c₀ = 1`.
pub fn solve_fixed_point(initial: &AnalyticUnimodal, opts: &NewtonOptions) -> Result<FixedPointResult> {
    if !initial.is_normalized() {
        return Err(Error::Config("initial guess must satisfy c0 = 1 and c1 < 0".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if opts.degree == 0 || opts.degree > MAX_DEGREE {
        return Err(Error::Config(format!("degree must be in 1..={MAX_DEGREE}")));
    }
    let mut c = initial.resized(opts.degree).into_coeffs();
    let cols: Vec<usize> = (1..=opts.degree).collect();
    let mut step_norms = Vec::new();
    let no_conv = |iters: usize, residual: f64, c: &[f64]| Error::NoConvergence {
        iters,
        residual,
        last_iterate: c.to_vec(),
    };

    let mut defect = slice_defect(&c).map_err(|_| no_conv(0, f64::INFINITY, &c))?;
    for iter in 0..=opts.max_iters {
        let f = AnalyticUnimodal::new(c.clone());
        let res = residual(&f).map_err(|_| no_conv(iter, f64::INFINITY, &c))?;
        // stop once converged and the last update is at rounding level
        if res < opts.tol && step_norms.last().is_some_and(|&s: &f64| s < 1e-10) {
            let lambda = lambda_of(&f);
            return Ok(FixedPointResult { phi0: f, lambda, residual: res, newton_iters: iter, step_norms });
        }
        if iter == opts.max_iters {
            return Err(no_conv(iter, res, &c));
        }
        let jac = fd_jacobian(&c, &cols, 1..opts.degree + 1, NEWTON_FD_STEP).map_err(|_| no_conv(iter, res, &c))?;
        let a = jac - DMatrix::identity(opts.degree, opts.degree);
        let rhs = -DVector::from_vec(defect.clone());
        let step = a.lu().solve(&rhs).ok_or_else(|| no_conv(iter, res, &c))?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(no_conv(iter, res, &c));
        }

        let current = max_abs(&defect);
        let mut damping = 1.0;
        let accepted = loop {
            let mut trial = c.clone();
            for (t, s) in trial[1..].iter_mut().zip(step.iter()) {
                *t += damping * s;
            }
            if let Ok(d) = slice_defect(&trial) {
                let next = max_abs(&d);
                if next < current || next < 1e-12 {
                    break Some((trial, d));
                }
            }
            damping *= 0.5;
            if damping < 1.0 / 1024.0 {
                break None;
            }
        };
        let Some((trial, d)) = accepted else {
            return Err(no_conv(iter + 1, res, &c));
        };
        step_norms.push(damping * step.amax());
        c = trial;
        defect = d;
    }
    unreachable!("loop returns on the final iteration")
}

/// Dominant eigenpair by power iteration with Rayleigh quotients.
fn power_iteration(m: &DMatrix<f64>, max_iters: usize, tol: f64) -> Option<f64> {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= tol * next.abs().max(1.0) {
            return Some(next);
        }
        estimate = next;
    }
    None
}

fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut eig: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    eig.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
    eig
}

/// Central-difference linearization of `R` at a solved fixed point.
pub fn linearize(phi0: &AnalyticUnimodal, h: f64) -> Result<LinearizationResult> {
    if !(h > 0.0) {
        return Err(Error::Linearization("difference step must be positive".into()));
    }
    let res = residual(phi0).map_err(|e| Error::Linearization(format!("fixed point check failed: {e}")))?;
    if !(res < 1e-6) {
        return Err(Error::Linearization(format!("input is not a fixed point (residual {res:e})")));
    }
    let c = phi0.coeffs();
    let k = c.len() - 1;
    if k == 0 {
        return Err(Error::Linearization("normalized slice is empty for degree 0".into()));
    }
    let cols: Vec<usize> = (0..=k).collect();
    let jacobian =
        fd_jacobian(c, &cols, 0..k + 1, h).map_err(|e| Error::Linearization(format!("perturbed map rejected: {e}")))?;
    let slice = jacobian.view((1, 1), (k, k)).into_owned();
    let spectrum = sorted_spectrum(&slice);
    let full = sorted_spectrum(&jacobian);
    let expanding = |s: &[(f64, f64)]| s.iter().filter(|z| z.0.hypot(z.1) > 1.0).count();

    let (top_re, top_im) = spectrum[0];
    let leading = power_iteration(&slice, 2000, 1e-13)
        .ok_or_else(|| Error::Linearization("power iteration did not converge".into()))?;
    if top_im.abs() > 1e-9 * top_re.abs().max(1.0) || (leading - top_re).abs() > 1e-6 * top_re.abs().max(1.0) {
        return Err(Error::Linearization(format!(
            "power iteration value {leading} disagrees with dominant eigenvalue {top_re} + {top_im}i"
        )));
    }
    Ok(LinearizationResult {
        jacobian,
        leading_eigenvalue: leading,
        expanding_count: expanding(&spectrum),
        expanding_count_full: expanding(&full),
        spectrum,
    })
}

/// Roots of `φ(x) = x` on `[lo, hi]`, located by sign changes on a grid and
/// refined by bisection.
pub fn fixed_points(f: &AnalyticUnimodal, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let g = |x: f64| f.eval_unchecked(x) - x;
    let n = grid.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut roots = Vec::new();
    for w in xs.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if ga * gb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm == 0.0 || (b - a) < 1e-15 {
                a = m;
                b = m;
                break;
            }
            if ga * gm < 0.0 {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}
