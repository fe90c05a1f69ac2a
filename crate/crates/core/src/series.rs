//! Truncated even power series `φ(x) = g(x²) = Σ c_j x^(2j)`.
//!
//! Every unimodal map handled by the 1D renormalization code is stored this
//! way, so `φ′(0) = 0` holds by construction and composition stays inside the
//! class. Arithmetic on the `g` coefficients happens in the variable `u = x²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of stored coefficients minus one.
pub const DEFAULT_DEGREE: usize = 40;
/// Upper bound accepted for any truncation degree.
pub const MAX_DEGREE: usize = 200;
/// Default node count for sup-norm and range sampling.
pub const DEFAULT_GRID: usize = 512;

const NORMALIZED_TOL: f64 = 1e-12;
const RANGE_SLACK: f64 = 1e-12;
const CHOP_REL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson")]
pub struct AnalyticUnimodal {
    coeffs: Vec<f64>,
    halfwidth: f64,
}

#[derive(Deserialize)]
struct SeriesJson {
    coeffs: Vec<f64>,
    #[serde(default = "unit_halfwidth")]
    halfwidth: f64,
}

fn unit_halfwidth() -> f64 {
    1.0
}

impl TryFrom<SeriesJson> for AnalyticUnimodal {
    type Error = Error;
    fn try_from(j: SeriesJson) -> Result<Self> {
        if j.coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Parse(format!("{} coefficients exceed the degree cap {MAX_DEGREE}", j.coeffs.len())));
        }
        if j.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("coefficients must be finite".into()));
        }
        if !(j.halfwidth > 0.0 && j.halfwidth.is_finite()) {
            return Err(Error::Parse(format!("half-width must be positive and finite, got {}", j.halfwidth)));
        }
        Ok(Self::with_halfwidth(j.coeffs, j.halfwidth))
    }
}

impl AnalyticUnimodal {
    /// Builds a series on `[-1, 1]`. An empty coefficient list is the zero map.
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self::with_halfwidth(coeffs, 1.0)
    }

    pub fn with_halfwidth(mut coeffs: Vec<f64>, halfwidth: f64) -> Self {
        assert!(halfwidth > 0.0, "domain half-width must be positive");
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs, halfwidth }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn trunc_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    /// `c₀ = 1` and `φ″(0) = 2c₁ < 0`.
    pub fn is_normalized(&self) -> bool {
        (self.coeffs[0] - 1.0).abs() <= NORMALIZED_TOL && self.coeffs.get(1).is_some_and(|&c| c < 0.0)
    }

    /// Coefficients padded with zeros or truncated to `degree + 1` entries.
    pub fn resized(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, 0.0);
        Self { coeffs, halfwidth: self.halfwidth }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= self.halfwidth) {
            return Err(Error::Domain { x, halfwidth: self.halfwidth });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Horner in `u = x²`, no domain check.
    #[inline]
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let u = x * x;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `φ′(x) = Σ 2j c_j x^(2j−1)`.
    pub fn deriv_unchecked(&self, x: f64) -> f64 {
        let u = x * x;
        let mut acc = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * u + 2.0 * j as f64 * c;
        }
        acc * x
    }

    /// `φ″(x) = Σ 2j(2j−1) c_j x^(2j−2)`.
    pub fn second_deriv_unchecked(&self, x: f64) -> f64 {
        let u = x * x;
        let mut acc = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            let k = 2.0 * j as f64;
            acc = acc * u + k * (k - 1.0) * c;
        }
        acc
    }

    /// Coefficient-wise difference; the result has the longer length.
    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|j| self.coeffs.get(j).copied().unwrap_or(0.0) - other.coeffs.get(j).copied().unwrap_or(0.0))
            .collect();
        Self { coeffs, halfwidth: self.halfwidth }
    }

    /// Largest coefficient difference after zero padding.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        self.sub(other).coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `u ↦ g(s·u)` truncated, i.e. `x ↦ φ(√s·x)`.
    fn rescale_u(&self, s: f64) -> Vec<f64> {
        let mut p = 1.0;
        self.coeffs
            .iter()
            .map(|&c| {
                let v = c * p;
                p *= s;
                v
            })
            .collect()
    }

    /// Uniform grid of `nodes` points on the closed domain.
    pub fn grid(&self, nodes: usize) -> impl Iterator<Item = f64> + '_ {
        let n = nodes.max(2);
        (0..n).map(move |i| self.halfwidth * (-1.0 + 2.0 * i as f64 / (n - 1) as f64))
    }
}

/// Truncated product of two `u`-series.
pub(crate) fn mul_trunc(a: &[f64], b: &[f64], degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; degree + 1];
    for (i, &ai) in a.iter().enumerate().take(degree + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(degree + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Taylor coefficients of `outer(inner(u))` up to `degree`.
pub(crate) fn compose_series(outer: &[f64], inner: &[f64], degree: usize) -> Vec<f64> {
    let mut acc = vec![0.0; degree + 1];
    for &c in outer.iter().rev() {
        acc = mul_trunc(&acc, inner, degree);
        acc[0] += c;
    }
    acc
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::Config(format!("truncation degree {degree} exceeds maximum {MAX_DEGREE}")));
    }
    Ok(())
}

/// Largest `|h(x)|` over the sampling grid of `h`'s domain.
fn sampled_range(h: &AnalyticUnimodal) -> f64 {
    h.grid(DEFAULT_GRID + 1).map(|x| h.eval_unchecked(x).abs()).fold(0.0, f64::max)
}

/// Even series of `f ∘ h`, truncated to `degree` in `u = x²`.
///
/// The result lives on `h`'s domain. Values of `h` must stay inside `f`'s
/// domain on the sampling grid.
pub fn compose_unimodal(f: &AnalyticUnimodal, h: &AnalyticUnimodal, degree: usize) -> Result<AnalyticUnimodal> {
    check_degree(degree)?;
    let reach = sampled_range(h);
    if reach > f.halfwidth * (1.0 + RANGE_SLACK) {
        return Err(Error::Range { value: reach, halfwidth: f.halfwidth });
    }
    // φ_f(φ_h(x)) = g_f(g_h(u)²)
    let inner = mul_trunc(&h.coeffs, &h.coeffs, degree);
    let coeffs = compose_series(&f.coeffs, &inner, degree);
    Ok(AnalyticUnimodal { coeffs, halfwidth: h.halfwidth })
}

/// Even series of `x ↦ s⁻¹ f(s·x)`: `c_j ↦ c_j s^(2j−1)`.
pub fn scale_conjugate(f: &AnalyticUnimodal, s: f64, degree: usize) -> Result<AnalyticUnimodal> {
    check_degree(degree)?;
    if s == 0.0 || !s.is_finite() {
        return Err(Error::SingularScaling(s));
    }
    let mut coeffs = f.rescale_u(s * s);
    coeffs.resize(degree + 1, 0.0);
    coeffs.iter_mut().for_each(|c| *c /= s);
    Ok(AnalyticUnimodal { coeffs, halfwidth: f.halfwidth })
}

/// Sample abscissae and values for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl ChebGrid {
    /// `m` Chebyshev extrema on `[-1, 1]`, increasing, with `f` sampled on them.
    pub fn sample(m: usize, f: impl Fn(f64) -> f64) -> Self {
        let nodes = chebyshev_extrema(m);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self { nodes, values }
    }

    pub fn of_series(m: usize, f: &AnalyticUnimodal) -> Self {
        Self::sample(m, |x| f.eval_unchecked(x))
    }

    /// Arbitrary nodes; they must lie in `[-1, 1]` and strictly increase.
    pub fn from_parts(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Fit(format!("{} nodes but {} values", nodes.len(), values.len())));
        }
        if nodes.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Fit("nodes must lie in [-1, 1]".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Fit("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn chebyshev_extrema(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    let n = (m - 1) as f64;
    (0..m).map(|i| -(std::f64::consts::PI * i as f64 / n).cos()).collect()
}

/// Monomial coefficients (in `u`) of the shifted Chebyshev polynomials
/// `T*_j(u) = T_j(2u − 1) = T_{2j}(x)` for `j = 0..=degree`.
fn shifted_chebyshev_monomials(degree: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    rows.push(vec![1.0]);
    if degree >= 1 {
        rows.push(vec![-1.0, 2.0]);
    }
    for j in 2..=degree {
        let prev = &rows[j - 1];
        let prev2 = &rows[j - 2];
        let mut next = vec![0.0; j + 1];
        for (k, &p) in prev.iter().enumerate() {
            next[k] -= 2.0 * p;
            next[k + 1] += 4.0 * p;
        }
        for (k, &p) in prev2.iter().enumerate() {
            next[k] -= p;
        }
        rows.push(next);
    }
    rows
}

/// Least-squares fit of a degree-`degree` even series to grid samples.
///
/// The fit runs in the Chebyshev basis `T_{2j}(x)`, trailing coefficients at
/// rounding level are dropped, and the rest is converted to monomials in `u`.
pub fn fit_from_samples(grid: &ChebGrid, degree: usize) -> Result<AnalyticUnimodal> {
    check_degree(degree)?;
    let m = grid.nodes.len();
    if m < degree + 1 {
        return Err(Error::Fit(format!("{m} nodes cannot determine {} coefficients", degree + 1)));
    }
    let cols = degree + 1;
    let a = DMatrix::from_fn(m, cols, |i, j| {
        let x = grid.nodes[i].clamp(-1.0, 1.0);
        (2.0 * j as f64 * x.acos()).cos()
    });
    let b = DVector::from_column_slice(&grid.values);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::Fit(format!("rank deficient design (singular values {smax:e} .. {smin:e})")));
    }
    let cheb = svd.solve(&b, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let mut cheb: Vec<f64> = cheb.iter().copied().collect();
    let scale = cheb.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while cheb.len() > 1 && cheb.last().is_some_and(|c| c.abs() <= CHOP_REL * scale) {
        cheb.pop();
    }
    let basis = shifted_chebyshev_monomials(cheb.len() - 1);
    let mut coeffs = vec![0.0; cols];
    for (a_j, row) in cheb.iter().zip(&basis) {
        for (k, &r) in row.iter().enumerate() {
            coeffs[k] += a_j * r;
        }
    }
    Ok(AnalyticUnimodal::new(coeffs))
}

/// Dense-grid estimate of `max |φ(x)|`, polished by Newton on `φ′`.
pub fn sup_norm(f: &AnalyticUnimodal) -> f64 {
    sup_norm_with(f, DEFAULT_GRID)
}

pub fn sup_norm_with(f: &AnalyticUnimodal, nodes: usize) -> f64 {
    let n = nodes.max(2);
    let step = 2.0 * f.halfwidth / (n - 1) as f64;
    let (best_x, best) = f
        .grid(n)
        .map(|x| (x, f.eval_unchecked(x).abs()))
        .fold((0.0, -1.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    // Newton on φ′ = 0, confined to the neighbouring grid cells
    let mut x = best_x;
    for _ in 0..8 {
        let d2 = f.second_deriv_unchecked(x);
        if d2 == 0.0 {
            break;
        }
        let next = x - f.deriv_unchecked(x) / d2;
        if (next - best_x).abs() > step || next.abs() > f.halfwidth {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    best.max(f.eval_unchecked(x).abs())
}
