//! The persistence function `a(Γ)` on families and the chart `b(χ)` on maps.
//!
//! Being "on the manifold" is approximated by cascade accumulation at a
//! finite depth: `a(Γ)` is the Aitken-extrapolated accumulation parameter of
//! the family's doubling cascade, in the family's own coordinate.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{accumulation_parameter, run_cascade};
use crate::error::{Error, Result};
use crate::family::OneParamFamily;
use crate::poly::{MapNd, PointMap};

pub const MIN_CHART_DEPTH: usize = 6;
pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-3;
pub const A_TOLERANCE: f64 = 1e-5;

/// `a(Γ)`: accumulation parameter of the depth-`depth` cascade of `fam`.
pub fn persistence_a(fam: &OneParamFamily, depth: usize) -> Result<f64> {
    let cascade = run_cascade(fam, depth)?;
    Ok(accumulation_parameter(&cascade)?.t_inf)
}

/// `(t₀)*Γ`.
pub fn shift_family(fam: &OneParamFamily, t0: f64) -> OneParamFamily {
    fam.shift(t0)
}

/// Largest deviation from `a((t₀)*Γ) = a(Γ) − t₀` over `t0s`.
pub fn verify_shift_property(fam: &OneParamFamily, t0s: &[f64], depth: usize) -> Result<f64> {
    let a = persistence_a(fam, depth)?;
    let shifted: Vec<Result<f64>> = t0s.par_iter().map(|&t0| persistence_a(&shift_family(fam, t0), depth)).collect();
    let mut worst = 0.0_f64;
    for (r, &t0) in shifted.into_iter().zip(t0s) {
        worst = worst.max((r? - (a - t0)).abs());
    }
    Ok(worst)
}

/// `b(χ) = a({χ + t·v₀})`, the linear family scanned over `window`.
pub fn manifold_chart_b(v0: &MapNd, chi: &MapNd, window: (f64, f64), start: &[f64], depth: usize) -> Result<f64> {
    let fam = OneParamFamily::linear(chi.clone(), v0.clone(), window)?.with_start(start.to_vec());
    persistence_a(&fam, depth)
}

/// Base map `ψ₀` at the accumulation of a family, with the transversal direction
/// `v₀ = ∂ψ/∂t` there.
#[derive(Debug, Clone, Serialize)]
pub struct PersistenceChart {
    pub psi0: MapNd,
    pub v0: MapNd,
    pub a_tolerance: f64,
    pub depth: usize,
    /// Scan window of the linear families, in `t` relative to `ψ₀`.
    pub window: (f64, f64),
    pub start: Vec<f64>,
}

impl PersistenceChart {
    pub fn from_family(fam: &OneParamFamily, depth: usize) -> Result<Self> {
        if depth < MIN_CHART_DEPTH {
            return Err(Error::Config(format!("chart depth must be at least {MIN_CHART_DEPTH}, got {depth}")));
        }
        let a = persistence_a(fam, depth)?;
        let (lo, hi) = fam.window();
        Ok(Self {
            psi0: fam.map_at(a),
            v0: fam.direction_at(a),
            a_tolerance: A_TOLERANCE,
            depth,
            window: (lo - a, hi - a),
            start: fam.start().to_vec(),
        })
    }

    pub fn b(&self, chi: &MapNd) -> Result<f64> {
        manifold_chart_b(&self.v0, chi, self.window, &self.start, self.depth)
    }

    /// The linear family through `chi`.
    pub fn family_through(&self, chi: &MapNd) -> Result<OneParamFamily> {
        Ok(OneParamFamily::linear(chi.clone(), self.v0.clone(), self.window)?.with_start(self.start.clone()))
    }

    /// Central differences of `b` at `ψ₀` along each probe direction.
    pub fn chart_gradient(&self, probes: &[MapNd], h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("difference step must be positive, got {h}")));
        }
        probes
            .par_iter()
            .map(|w| {
                if w.components().iter().all(|c| c.terms().iter().all(|t| t.coeff == 0.0)) {
                    return Ok(0.0);
                }
                let plus = self.b(&self.psi0.axpy(h, w)?)?;
                let minus = self.b(&self.psi0.axpy(-h, w)?)?;
                Ok((plus - minus) / (2.0 * h))
            })
            .collect()
    }

    /// Labelled probe set: `v₀`, `2v₀`, zero, and a transverse direction.
    pub fn default_probes(&self) -> Vec<(String, MapNd)> {
        let n = self.psi0.dim();
        let mut transverse = MapNd::constant(&vec![0.0; n]);
        // a small change of the curvature of the last component
        let mut comps = transverse.components().to_vec();
        let mut exps = vec![0u32; n];
        exps[0] = 2;
        comps[n - 1].add_term(exps, 0.1);
        comps[n - 1].add_term(vec![0; n], -0.05);
        transverse = MapNd::new(comps, "transverse").expect("same dimension");
        vec![
            ("v0".into(), self.v0.clone()),
            ("2v0".into(), self.v0.scaled(2.0)),
            ("zero".into(), self.v0.scaled(0.0)),
            ("transverse".into(), transverse),
        ]
    }

    /// Largest of `hs` at which the derivative along `v₀` stays within 5% of −1.
    pub fn validity_radius(&self, hs: &[f64]) -> Option<f64> {
        hs.iter()
            .copied()
            .filter(|&h| matches!(self.chart_gradient(std::slice::from_ref(&self.v0), h).as_deref(), Ok([d]) if (d + 1.0).abs() <= 0.05))
            .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.max(h))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_doubling_window_is_bracket_error() {
        let fam = OneParamFamily::logistic().with_window(1.0, 2.0);
        match persistence_a(&fam, 6) {
            Err(Error::Cascade { failed_at: 0, source, .. }) => assert!(matches!(*source, Error::Bracket { .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let f = OneParamFamily::henon(0.3);
        let g = shift_family(&f, 0.0);
        assert_eq!(f, g);
    }

    #[test]
    fn chart_depth_floor() {
        assert!(matches!(PersistenceChart::from_family(&OneParamFamily::logistic(), 4), Err(Error::Config(_))));
    }

    #[test]
    fn recentered_family_has_zero_a() {
        let fam = OneParamFamily::logistic();
        let a = persistence_a(&fam, 8).unwrap();
        assert!((a - 3.569946).abs() < 1e-5);
        let centered = shift_family(&fam, a);
        assert!(persistence_a(&centered, 8).unwrap().abs() < 1e-5);
    }
}
