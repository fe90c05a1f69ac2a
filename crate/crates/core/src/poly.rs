//! Polynomial self-maps of `Rⁿ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AnalyticUnimodal;

/// Coordinate magnitude treated as escape to infinity.
pub const ESCAPE_RADIUS: f64 = 1e10;

/// Anything that can be iterated and differentiated pointwise.
pub trait PointMap: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

impl<T: PointMap + ?Sized> PointMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

/// `k`-fold application. Coordinates beyond [`ESCAPE_RADIUS`] or non-finite
/// values stop the iteration with the index of the offending step.
pub fn iterate<M: PointMap + ?Sized>(psi: &M, x: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut cur = x.to_vec();
    let mut next = vec![0.0; psi.dim()];
    for step in 1..=k {
        psi.apply_into(&cur, &mut next);
        if next.iter().any(|v| !(v.abs() <= ESCAPE_RADIUS)) {
            return Err(Error::Escape { step });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coeff: f64,
}

/// Polynomial in `nvars` variables stored as a list of nonzero terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    nvars: usize,
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum()).max().unwrap_or(0)
    }

    /// Adds `c·x^e`, merging with an existing monomial.
    pub fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        assert_eq!(exps.len(), self.nvars, "exponent length must match variable count");
        if c == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|t| t.exps == exps) {
            Some(t) => t.coeff += c,
            None => self.terms.push(Term { exps, coeff: c }),
        }
        self.terms.retain(|t| t.coeff != 0.0);
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Poly) -> Poly {
        let mut out = self.clone();
        for t in &other.terms {
            out.add_term(t.exps.clone(), alpha * t.coeff);
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> Poly {
        Poly::zero(self.nvars).axpy(alpha, self)
    }

    fn max_exp(&self) -> u32 {
        self.terms.iter().flat_map(|t| t.exps.iter().copied()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let pw = powers(x, self.max_exp());
        self.eval_with(&pw)
    }

    fn eval_with(&self, pw: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().enumerate().fold(t.coeff, |acc, (i, &e)| acc * pw[i][e as usize]))
            .sum()
    }

    fn grad_with(&self, pw: &[Vec<f64>], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for t in &self.terms {
            for (i, &ei) in t.exps.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                let mut v = t.coeff * ei as f64;
                for (k, &ek) in t.exps.iter().enumerate() {
                    let e = if k == i { ek - 1 } else { ek };
                    v *= pw[k][e as usize];
                }
                out[i] += v;
            }
        }
    }
}

fn powers(x: &[f64], max_exp: u32) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&xi| {
            let mut row = Vec::with_capacity(max_exp as usize + 1);
            let mut p = 1.0;
            for _ in 0..=max_exp {
                row.push(p);
                p *= xi;
            }
            row
        })
        .collect()
}

/// All exponent vectors of total degree `≤ degree` in graded order.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(nvars: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == nvars - 1 {
            for last in 0..=left {
                let mut e = prefix.clone();
                e.push(last);
                out.push(e);
            }
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(nvars, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Polynomial map `Rⁿ → Rⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapNd {
    components: Vec<Poly>,
    #[serde(default)]
    pub tag: String,
}

impl MapNd {
    pub fn new(components: Vec<Poly>, tag: impl Into<String>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::Dimension("a map needs at least one component".into()));
        }
        if components.iter().any(|p| p.nvars() != n) {
            return Err(Error::Dimension("every component must use the map's dimension as variable count".into()));
        }
        Ok(Self { components, tag: tag.into() })
    }

    pub fn identity(n: usize) -> Self {
        Self { components: (0..n).map(|i| Poly::var(n, i)).collect(), tag: "identity".into() }
    }

    pub fn constant(p: &[f64]) -> Self {
        let n = p.len();
        Self { components: p.iter().map(|&c| Poly::constant(n, c)).collect(), tag: "constant".into() }
    }

    /// The standard endomorphism `(x₁,…,xₙ) ↦ (xₙ, 0, …, 0, φ₀(xₙ))`, n ≥ 2.
    pub fn standard_fct(n: usize, phi0: &AnalyticUnimodal) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("standard map needs n >= 2, got {n}")));
        }
        let mut comps = vec![Poly::zero(n); n];
        comps[0] = Poly::var(n, n - 1);
        let last = &mut comps[n - 1];
        for (j, &c) in phi0.coeffs().iter().enumerate() {
            let mut e = vec![0; n];
            e[n - 1] = 2 * j as u32;
            last.add_term(e, c);
        }
        Ok(Self { components: comps, tag: "standard-fct".into() })
    }

    /// Logistic map `x ↦ a·x − a·x²` as a 1D polynomial map.
    pub fn logistic(a: f64) -> Self {
        let mut p = Poly::zero(1);
        p.add_term(vec![1], a);
        p.add_term(vec![2], -a);
        Self { components: vec![p], tag: "logistic".into() }
    }

    /// Hénon map `(x, y) ↦ (1 − a·x² + y, b·x)`.
    pub fn henon(a: f64, b: f64) -> Self {
        let mut p = Poly::constant(2, 1.0);
        p.add_term(vec![2, 0], -a);
        p.add_term(vec![0, 1], 1.0);
        let mut q = Poly::zero(2);
        q.add_term(vec![1, 0], b);
        Self { components: vec![p, q], tag: "henon".into() }
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn total_degree(&self) -> u32 {
        self.components.iter().map(Poly::total_degree).max().unwrap_or(0)
    }

    /// `self + alpha·other`, componentwise.
    pub fn axpy(&self, alpha: f64, other: &MapNd) -> Result<MapNd> {
        if other.dim() != self.dim() {
            return Err(Error::Dimension(format!("cannot add maps of dimension {} and {}", self.dim(), other.dim())));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.axpy(alpha, b)).collect();
        Ok(MapNd { components, tag: self.tag.clone() })
    }

    pub fn scaled(&self, alpha: f64) -> MapNd {
        MapNd { components: self.components.iter().map(|p| p.scaled(alpha)).collect(), tag: self.tag.clone() }
    }

    fn max_exp(&self) -> u32 {
        self.components.iter().map(Poly::max_exp).max().unwrap_or(0)
    }

    /// Least-squares fit of every component over the monomials of total
    /// degree `≤ degree`. Returns the map and the largest absolute residual.
    pub fn fit(points: &[Vec<f64>], targets: &[Vec<f64>], degree: u32, tag: &str) -> Result<(MapNd, f64)> {
        let n = points.first().map(Vec::len).ok_or_else(|| Error::Fit("no sample points".into()))?;
        let basis = monomials(n, degree);
        if points.len() < basis.len() {
            return Err(Error::Fit(format!("{} samples for {} monomials", points.len(), basis.len())));
        }
        let design = DMatrix::from_fn(points.len(), basis.len(), |i, j| {
            basis[j].iter().zip(&points[i]).map(|(&e, &x)| x.powi(e as i32)).product()
        });
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let mut components = Vec::with_capacity(n);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let rhs = DVector::from_iterator(points.len(), targets.iter().map(|t| t[k]));
            let sol = svd.solve(&rhs, smax * 1e-13).map_err(|e| Error::Fit(e.to_string()))?;
            let resid = &design * &sol - &rhs;
            worst = worst.max(resid.amax());
            let mut p = Poly::zero(n);
            for (e, &c) in basis.iter().zip(sol.iter()) {
                p.add_term(e.clone(), c);
            }
            components.push(p);
        }
        Ok((MapNd { components, tag: tag.to_string() }, worst))
    }
}

impl PointMap for MapNd {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let pw = powers(x, self.max_exp());
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval_with(&pw);
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let pw = powers(x, self.max_exp());
        let mut jac = DMatrix::zeros(n, n);
        let mut row = vec![0.0; n];
        for (i, p) in self.components.iter().enumerate() {
            p.grad_with(&pw, &mut row);
            for j in 0..n {
                jac[(i, j)] = row[j];
            }
        }
        jac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(2, 8).len(), 45);
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(1, 3), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn henon_eval_and_jacobian() {
        let h = MapNd::henon(1.4, 0.3);
        assert_eq!(h.apply(&[0.5, 0.2]), vec![1.0 - 1.4 * 0.25 + 0.2, 0.15]);
        let j = h.jacobian(&[0.5, 0.2]);
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.4, 1.0, 0.3, 0.0]));
        assert!((j.determinant() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_differences() {
        let m = MapNd::henon(1.1, 0.3).axpy(0.2, &MapNd::identity(2)).unwrap();
        let x = [0.3, -0.4];
        let j = m.jacobian(&x);
        let h = 1e-6;
        for k in 0..2 {
            let mut p = x;
            let mut q = x;
            p[k] += h;
            q[k] -= h;
            let (fp, fq) = (m.apply(&p), m.apply(&q));
            for i in 0..2 {
                assert!(((fp[i] - fq[i]) / (2.0 * h) - j[(i, k)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn standard_map_structure() {
        let phi = AnalyticUnimodal::new(vec![1.0, -1.5]);
        let m = MapNd::standard_fct(3, &phi).unwrap();
        assert_eq!(m.apply(&[0.3, 0.2, 0.5]), vec![0.5, 0.0, 1.0 - 1.5 * 0.25]);
        assert!(matches!(MapNd::standard_fct(1, &phi), Err(Error::Dimension(_))));
    }

    #[test]
    fn iterate_escape_and_zero_steps() {
        let m = MapNd::logistic(10.0);
        assert_eq!(iterate(&m, &[0.3], 0).unwrap(), vec![0.3]);
        assert!(matches!(iterate(&m, &[0.3], 100), Err(Error::Escape { .. })));
    }

    #[test]
    fn fit_recovers_polynomial() {
        let target = MapNd::henon(1.2, 0.3);
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let vals: Vec<Vec<f64>> = pts.iter().map(|p| target.apply(p)).collect();
        let (fit, resid) = MapNd::fit(&pts, &vals, 3, "fit").unwrap();
        assert!(resid < 1e-12);
        let x = [0.1, 0.2];
        let (a, b) = (fit.apply(&x), target.apply(&x));
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
}
