//! Periodic orbits, period-doubling detection and cascade accumulation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::OneParamFamily;
use crate::poly::{PointMap, ESCAPE_RADIUS};

pub const ORBIT_TOL: f64 = 1e-12;
pub const MULTIPLIER_TOL: f64 = 1e-9;
pub const MIN_SEPARATION: f64 = 1e-10;
pub const MIN_LYAPUNOV_ITERS: usize = 10_000;
const NEWTON_ITERS: usize = 60;
const SCAN_STEPS: usize = 64;
const CONTINUATION_STEPS: usize = 8;
const TRANSIENT_PERIODS: usize = 1000;
const PROVISIONAL_DELTA: f64 = 4.0;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Image of `x` under `ψ^k` together with the Jacobian product.
fn flow_with_monodromy<M: PointMap>(psi: &M, x: &[f64], k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = psi.dim();
    let mut y = x.to_vec();
    let mut next = vec![0.0; n];
    let mut m = DMatrix::identity(n, n);
    for step in 0..k {
        m = psi.jacobian(&y) * m;
        psi.apply_into(&y, &mut next);
        std::mem::swap(&mut y, &mut next);
        if !y.iter().all(|v| v.is_finite() && v.abs() < ESCAPE_RADIUS) {
            return Err(Error::Escape { step: step + 1 });
        }
    }
    Ok((y, m))
}

fn orbit_points<M: PointMap>(psi: &M, x0: &[f64], period: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(period);
    let mut x = x0.to_vec();
    for _ in 0..period {
        let y = psi.apply(&x);
        pts.push(std::mem::replace(&mut x, y));
    }
    pts
}

fn divisors(n: usize) -> Vec<usize> {
    (1..n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Newton solve of `ψ_t^period(x) = x`; returns the whole orbit starting at the solution.
pub fn periodic_orbit(fam: &OneParamFamily, t: f64, period: usize, guess: &[f64]) -> Result<Vec<Vec<f64>>> {
    if period == 0 {
        return Err(Error::Config("period must be positive".into()));
    }
    if guess.len() != fam.dim() {
        return Err(Error::Dimension(format!("guess has {} entries, family dimension is {}", guess.len(), fam.dim())));
    }
    let psi = fam.at(t);
    let n = fam.dim();
    let mut x = guess.to_vec();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..NEWTON_ITERS {
        let (y, m) = match flow_with_monodromy(&psi, &x, period) {
            Ok(v) => v,
            Err(_) => break,
        };
        let r: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        residual = inf_norm(&r);
        let scale = inf_norm(&x).max(1.0);
        let a = m - DMatrix::identity(n, n);
        let Some(step) = a.lu().solve(&DVector::from_iterator(n, r.iter().map(|v| -v))) else {
            converged = residual < ORBIT_TOL * scale;
            break;
        };
        if residual < ORBIT_TOL * scale {
            // one polishing step, kept only if it does not hurt
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi + s).collect();
            if let Ok(yt) = crate::poly::iterate(&psi, &trial, period) {
                let rt = dist(&yt, &trial);
                if rt <= residual {
                    x = trial;
                    residual = rt;
                }
            }
            converged = true;
            break;
        }
        // keep steps bounded so a bad guess does not fling the iterate to infinity
        let len = step.amax();
        let damp = if len > 0.5 * scale { 0.5 * scale / len } else { 1.0 };
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi += damp * s;
        }
        // at long periods rounding can floor the residual just above the tolerance
        if len < 1e-15 * scale && residual < 1e-9 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iters: NEWTON_ITERS, residual, last_iterate: x });
    }
    for d in divisors(period) {
        let y = crate::poly::iterate(&psi, &x, d)?;
        if dist(&y, &x) < MIN_SEPARATION.max(1e3 * residual) {
            return Err(Error::WrongPeriod { requested: period, actual: d });
        }
    }
    Ok(orbit_points(&psi, &x, period))
}

/// Eigenvalues of the Jacobian product along `orbit`, as `(re, im)` sorted by decreasing modulus.
pub fn orbit_multiplier(fam: &OneParamFamily, t: f64, orbit: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let psi = fam.at(t);
    let n = fam.dim();
    let mut m = DMatrix::identity(n, n);
    for p in orbit {
        m = psi.jacobian(p) * m;
    }
    let mut eig: Vec<(f64, f64)> = if n == 1 {
        vec![(m[(0, 0)], 0.0)]
    } else if n == 2 {
        // closed form keeps the real pair accurate when the product is badly scaled
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let big = tr / 2.0 + (tr / 2.0).signum() * disc.sqrt();
            let small = if big != 0.0 { det / big } else { 0.0 };
            vec![(big, 0.0), (small, 0.0)]
        } else {
            let im = (-disc).sqrt();
            vec![(tr / 2.0, im), (tr / 2.0, -im)]
        }
    } else {
        m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
    };
    eig.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
    eig
}

/// Largest-modulus multiplier, which must be real.
pub fn leading_multiplier(fam: &OneParamFamily, t: f64, orbit: &[Vec<f64>]) -> Result<f64> {
    let (re, im) = orbit_multiplier(fam, t, orbit)[0];
    if im.abs() > 1e-12 * re.hypot(im).max(1e-300) {
        return Err(Error::ComplexMultiplier { t, re, im: im.abs() });
    }
    Ok(re)
}

/// A periodic orbit at a parameter together with its leading multiplier.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitState {
    pub t: f64,
    pub period: usize,
    pub orbit: Vec<Vec<f64>>,
    /// Real part of the leading multiplier. A complex pair lies strictly
    /// inside the circle of radius `sqrt|det|`, so its real part still tells
    /// the stable side of a −1 crossing apart from the unstable one.
    pub multiplier: f64,
    pub complex: bool,
}

impl OrbitState {
    fn at(fam: &OneParamFamily, t: f64, period: usize, guess: &[f64]) -> Result<Self> {
        let orbit = periodic_orbit(fam, t, period, guess)?;
        let (re, im) = orbit_multiplier(fam, t, &orbit)[0];
        Ok(Self { t, period, orbit, multiplier: re, complex: im != 0.0 })
    }

    /// Orbit point nearest to `p`, used to keep continuation on a consistent branch.
    fn nearest(&self, p: &[f64]) -> &[f64] {
        self.orbit
            .iter()
            .min_by(|a, b| dist(a, p).total_cmp(&dist(b, p)))
            .expect("orbits are non-empty")
    }
}

/// Attracting orbit of the given period, reached by iterating from the family's start point.
pub fn attracting_orbit(fam: &OneParamFamily, t: f64, period: usize) -> Result<OrbitState> {
    let psi = fam.at(t);
    let x = crate::poly::iterate(&psi, fam.start(), period * TRANSIENT_PERIODS)?;
    let state = OrbitState::at(fam, t, period, &x)?;
    // anchor the orbit at the point closest to the start so runs are reproducible
    let anchor = state.nearest(fam.start()).to_vec();
    OrbitState::at(fam, t, period, &anchor).or(Ok(state))
}

/// Tangent `dx/dt` of the periodic point `x0` along the family.
fn orbit_tangent(fam: &OneParamFamily, t: f64, x0: &[f64], period: usize) -> Option<DVector<f64>> {
    let psi = fam.at(t);
    let n = fam.dim();
    let mut x = x0.to_vec();
    let mut m = DMatrix::identity(n, n);
    let mut w = DVector::zeros(n);
    for _ in 0..period {
        let j = psi.jacobian(&x);
        w = &j * w + DVector::from_vec(fam.param_derivative(t, &x));
        m = j * m;
        x = psi.apply(&x);
    }
    (m - DMatrix::identity(n, n)).lu().solve(&(-w))
}

/// Follows `from` to parameter `to`, starting with `steps` equal steps and
/// halving whenever Newton fails or lands on another branch.
pub fn continue_orbit(fam: &OneParamFamily, from: &OrbitState, to: f64, steps: usize) -> Result<OrbitState> {
    let h0 = (to - from.t) / steps.max(1) as f64;
    let min_h = h0.abs() * 1e-6;
    let mut h = h0;
    let mut state = from.clone();
    let mut last_reason = String::new();
    while state.t != to {
        if h.abs() < min_h {
            return Err(Error::Continuation { t: state.t + h, reason: last_reason });
        }
        let t = if (to - state.t).abs() <= h.abs() * (1.0 + 1e-9) { to } else { state.t + h };
        let x0 = &state.orbit[0];
        let shift: Vec<f64> = match orbit_tangent(fam, state.t, x0, state.period) {
            Some(v) => v.iter().map(|d| d * (t - state.t)).collect(),
            None => vec![0.0; x0.len()],
        };
        let guess: Vec<f64> = x0.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let allowed = (0.5 * inf_norm(&shift)).max(1e-7 * inf_norm(x0).max(1.0));
        match OrbitState::at(fam, t, state.period, &guess) {
            Ok(next) if dist(&next.orbit[0], &guess) <= allowed => {
                state = next;
                h = (h * 1.5).clamp(-h0.abs(), h0.abs());
            }
            Ok(next) => {
                last_reason = format!("jumped to another orbit (|Δx| = {:e})", dist(&next.orbit[0], &guess));
                h *= 0.5;
            }
            Err(e) => {
                last_reason = e.to_string();
                h *= 0.5;
            }
        }
    }
    Ok(state)
}

/// Parameter where the period-`2^n` orbit loses stability through multiplier −1.
pub fn find_doubling_bifurcation(fam: &OneParamFamily, n: usize, bracket: (f64, f64)) -> Result<OrbitState> {
    let period = 1usize << n;
    let lo = attracting_orbit(fam, bracket.0, period).map_err(|e| Error::Bracket {
        lo: bracket.0,
        hi: bracket.1,
        reason: format!("no attracting period-{period} orbit at the lower end: {e}"),
    })?;
    bifurcation_from(fam, lo, bracket.1)
}

/// Root of `multiplier + 1` between the state `lo` (stable) and parameter `hi` (unstable).
pub fn bifurcation_from(fam: &OneParamFamily, lo: OrbitState, hi_t: f64) -> Result<OrbitState> {
    let g = |s: &OrbitState| s.multiplier + 1.0;
    let bracket_err = |reason: String| Error::Bracket { lo: lo.t, hi: hi_t, reason };
    if !(g(&lo) > 0.0 && lo.multiplier < 1.0) {
        return Err(bracket_err(format!("orbit is not stable at the lower end (multiplier {})", lo.multiplier)));
    }
    let hi = continue_orbit(fam, &lo, hi_t, CONTINUATION_STEPS)?;
    if g(&hi) >= 0.0 {
        return Err(bracket_err(format!("multiplier + 1 does not change sign (multiplier {} at the upper end)", hi.multiplier)));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(&a), g(&b));
    let mut side = 0i8;
    for _ in 0..200 {
        if ga.abs() < MULTIPLIER_TOL * 1e-3 {
            return real_root(a);
        }
        if gb.abs() < MULTIPLIER_TOL * 1e-3 {
            return real_root(b);
        }
        let width = b.t - a.t;
        if width.abs() <= 4.0 * f64::EPSILON * a.t.abs().max(1.0) {
            break;
        }
        // Illinois false position, falling back to bisection when it stalls
        let mut t = (a.t * gb - b.t * ga) / (gb - ga);
        if !(t > a.t.min(b.t) && t < a.t.max(b.t)) || side.abs() > 2 {
            t = 0.5 * (a.t + b.t);
            side = 0;
        }
        let near = if (t - a.t).abs() < (t - b.t).abs() { &a } else { &b };
        let c = continue_orbit(fam, near, t, 1)?;
        let gc = g(&c);
        if gc > 0.0 {
            a = c;
            ga = gc;
            if side < 0 {
                gb *= 0.5;
            }
            side = if side < 0 { side - 1 } else { -1 };
        } else {
            b = c;
            gb = gc;
            if side > 0 {
                ga *= 0.5;
            }
            side = if side > 0 { side + 1 } else { 1 };
        }
    }
    // bracket collapsed to rounding level: return the better end
    real_root(if g(&a).abs() <= g(&b).abs() { a } else { b })
}

fn real_root(s: OrbitState) -> Result<OrbitState> {
    if s.complex {
        return Err(Error::ComplexMultiplier { t: s.t, re: s.multiplier, im: f64::NAN });
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeResult {
    pub doubling_params: Vec<(usize, f64)>,
    pub delta_estimates: Vec<f64>,
    pub t_inf: Option<f64>,
    pub t_inf_error: Option<f64>,
    /// `|multiplier + 1|` at each detected bifurcation.
    pub multiplier_residuals: Vec<f64>,
}

impl CascadeResult {
    pub fn params(&self) -> Vec<f64> {
        self.doubling_params.iter().map(|p| p.1).collect()
    }
}

pub fn delta_estimates(ts: &[f64]) -> Vec<f64> {
    ts.windows(3).map(|w| (w[1] - w[0]) / (w[2] - w[1])).collect()
}

/// Aitken extrapolation of a doubling sequence with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accumulation {
    pub t_inf: f64,
    pub error: f64,
}

pub fn accumulation_from_params(ts: &[f64]) -> Result<Accumulation> {
    if ts.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: ts.len() });
    }
    let k = ts.len();
    let (a, b, c) = (ts[k - 3], ts[k - 2], ts[k - 1]);
    let d2 = c - 2.0 * b + a;
    if d2 == 0.0 || !d2.is_finite() {
        // arithmetic or constant tail: nothing to extrapolate
        return Ok(Accumulation { t_inf: c, error: 0.0 });
    }
    let t_inf = c - (c - b) * (c - b) / d2;
    let delta = (b - a) / (c - b);
    let error = if delta.is_finite() && delta.abs() > 1.0 {
        let r = 1.0 / delta.abs();
        (t_inf - c).abs() * r / (1.0 - r)
    } else {
        (t_inf - c).abs()
    };
    Ok(Accumulation { t_inf, error })
}

pub fn accumulation_parameter(cascade: &CascadeResult) -> Result<Accumulation> {
    accumulation_from_params(&cascade.params())
}

fn cascade_err(failed_at: usize, params: &[OrbitState], source: Error) -> Error {
    Error::Cascade {
        failed_at,
        completed: params.iter().enumerate().map(|(i, s)| (i, s.t)).collect(),
        source: Box::new(source),
    }
}

/// First doubling of the fixed point, found by scanning the family window.
fn first_doubling(fam: &OneParamFamily) -> Result<OrbitState> {
    let (lo, hi) = fam.window();
    let mut state = attracting_orbit(fam, lo, 1)
        .map_err(|e| Error::Bracket { lo, hi, reason: format!("no attracting fixed point at window start: {e}") })?;
    let dt = (hi - lo) / SCAN_STEPS as f64;
    for k in 1..=SCAN_STEPS {
        let t = lo + dt * k as f64;
        let next = continue_orbit(fam, &state, t, 1)?;
        if next.multiplier + 1.0 < 0.0 {
            return bifurcation_from(fam, state, t);
        }
        state = next;
    }
    Err(Error::Bracket { lo, hi, reason: "fixed point never loses stability in the window".into() })
}

/// Next doubling after `prev`, with bracket widths from the expected gap.
fn next_doubling(fam: &OneParamFamily, n: usize, t_prev: f64, gap: f64) -> Result<OrbitState> {
    let period = 1usize << n;
    let (_, t_max) = fam.window();
    let mut last_err = None;
    // lower end: close enough to t_prev that the new orbit is a sink, far enough to resolve it
    for frac in [0.2, 0.1, 0.05, 0.4] {
        let lo_t = t_prev + frac * gap;
        let lo = match attracting_orbit(fam, lo_t, period) {
            Ok(s) if s.multiplier.abs() < 1.0 => s,
            Ok(s) => {
                last_err = Some(Error::Bracket { lo: lo_t, hi: lo_t, reason: format!("orbit not stable (multiplier {})", s.multiplier) });
                continue;
            }
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut state = lo;
        let mut hi_t = t_prev + 2.0 * gap;
        loop {
            let hi_t_clamped = hi_t.min(t_max);
            let hi = continue_orbit(fam, &state, hi_t_clamped, CONTINUATION_STEPS)?;
            if hi.multiplier + 1.0 < 0.0 {
                return bifurcation_from(fam, state, hi_t_clamped);
            }
            if hi_t >= t_max {
                return Err(Error::Bracket {
                    lo: lo_t,
                    hi: t_max,
                    reason: format!("period-{period} orbit stays stable up to the window end"),
                });
            }
            state = hi;
            hi_t += gap;
        }
    }
    Err(last_err.unwrap_or(Error::Bracket { lo: t_prev, hi: t_prev + gap, reason: "no bracket".into() }))
}

/// Detects doublings `t_0, …, t_{n_max}` of the period-`2^N` orbits.
pub fn run_cascade(fam: &OneParamFamily, n_max: usize) -> Result<CascadeResult> {
    let mut found: Vec<OrbitState> = Vec::with_capacity(n_max + 1);
    let first = first_doubling(fam).map_err(|e| cascade_err(0, &found, e))?;
    found.push(first);
    for n in 1..=n_max {
        let ts: Vec<f64> = found.iter().map(|s| s.t).collect();
        let gap = match ts.len() {
            1 => (fam.window().1 - ts[0]) / PROVISIONAL_DELTA,
            k => {
                let deltas = delta_estimates(&ts);
                let d = if deltas.len() >= 2 { deltas[deltas.len() - 1] } else { PROVISIONAL_DELTA };
                (ts[k - 1] - ts[k - 2]) / d
            }
        };
        let s = next_doubling(fam, n, ts[ts.len() - 1], gap).map_err(|e| cascade_err(n, &found, e))?;
        if s.t <= ts[ts.len() - 1] {
            return Err(cascade_err(
                n,
                &found,
                Error::Bracket { lo: ts[ts.len() - 1], hi: s.t, reason: "doubling parameters not increasing".into() },
            ));
        }
        found.push(s);
    }
    let ts: Vec<f64> = found.iter().map(|s| s.t).collect();
    let acc = accumulation_from_params(&ts).ok();
    Ok(CascadeResult {
        doubling_params: ts.iter().copied().enumerate().collect(),
        delta_estimates: delta_estimates(&ts),
        t_inf: acc.map(|a| a.t_inf),
        t_inf_error: acc.map(|a| a.error),
        multiplier_residuals: found.iter().map(|s| (s.multiplier + 1.0).abs()).collect(),
    })
}

/// Largest Lyapunov exponent along the orbit of `x0`.
pub fn lyapunov_exponent(fam: &OneParamFamily, t: f64, n_transient: usize, n_iter: usize, x0: &[f64]) -> Result<f64> {
    if n_iter < MIN_LYAPUNOV_ITERS {
        return Err(Error::Config(format!("need at least {MIN_LYAPUNOV_ITERS} iterations, got {n_iter}")));
    }
    let psi = fam.at(t);
    let mut x = crate::poly::iterate(&psi, x0, n_transient)?;
    let n = fam.dim();
    let mut next = vec![0.0; n];
    let mut sum = 0.0;
    if n == 1 {
        for step in 0..n_iter {
            let d = psi.jacobian(&x)[(0, 0)].abs();
            // a hit on the critical point would give -inf; floor it at the rounding scale
            sum += d.max(f64::MIN_POSITIVE).ln();
            psi.apply_into(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
            if !(x[0].is_finite() && x[0].abs() < ESCAPE_RADIUS) {
                return Err(Error::Escape { step: n_transient + step + 1 });
            }
        }
        return Ok(sum / n_iter as f64);
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for step in 0..n_iter {
        v = psi.jacobian(&x) * v;
        let norm = v.norm();
        sum += norm.max(f64::MIN_POSITIVE).ln();
        v /= norm;
        psi.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if !x.iter().all(|c| c.is_finite() && c.abs() < ESCAPE_RADIUS) {
            return Err(Error::Escape { step: n_transient + step + 1 });
        }
    }
    Ok(sum / n_iter as f64)
}

/// Lyapunov exponents at many parameters, in parallel.
pub fn lyapunov_scan(fam: &OneParamFamily, ts: &[f64], n_transient: usize, n_iter: usize) -> Vec<Result<f64>> {
    ts.par_iter().map(|&t| lyapunov_exponent(fam, t, n_transient, n_iter, fam.start())).collect()
}

/// `(t, x₀)` pairs of the attractor at each parameter, for bifurcation diagrams.
pub fn bifurcation_diagram(fam: &OneParamFamily, ts: &[f64], transient: usize, samples: usize) -> Vec<(f64, f64)> {
    ts.par_iter()
        .flat_map_iter(|&t| {
            let psi = fam.at(t);
            let mut pts = Vec::with_capacity(samples);
            if let Ok(mut x) = crate::poly::iterate(&psi, fam.start(), transient) {
                for _ in 0..samples {
                    x = psi.apply(&x);
                    if !x.iter().all(|c| c.is_finite() && c.abs() < ESCAPE_RADIUS) {
                        break;
                    }
                    pts.push((t, x[0]));
                }
            }
            pts
        })
        .collect()
}
