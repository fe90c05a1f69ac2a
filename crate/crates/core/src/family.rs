//! One-parameter families `t ↦ ψ_t`.
//!
//! Every family carries an affine reparameterization `p = center + scale·t`
//! from its own coordinate `t` to the native parameter `p` of the formula
//! (the logistic `a`, the Hénon `a`, or the coefficient of the direction in a
//! linear family). Shifting a family only moves `center`, so the formula
//! extends past any window.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{MapNd, PointMap};

pub const DEFAULT_HENON_B: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `x ↦ p·x·(1 − x)`.
    Logistic,
    /// `(x, y) ↦ (1 − p·x² + y, b·x)`.
    Henon { b: f64 },
    /// `ψ₀ + p·v₀`.
    Linear { base: MapNd, direction: MapNd },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneParamFamily {
    kind: FamilyKind,
    center: f64,
    scale: f64,
    window: (f64, f64),
    start: Vec<f64>,
}

impl OneParamFamily {
    /// Logistic family in its native parameter (`t = a`), scanned over `[2.5, 4]`.
    pub fn logistic() -> Self {
        Self { kind: FamilyKind::Logistic, center: 0.0, scale: 1.0, window: (2.5, 4.0), start: vec![0.5] }
    }

    /// Hénon family in its native parameter (`t = a`), scanned over `[0, 1.4]`.
    pub fn henon(b: f64) -> Self {
        Self { kind: FamilyKind::Henon { b }, center: 0.0, scale: 1.0, window: (0.0, 1.4), start: vec![0.0, 0.0] }
    }

    /// `ψ₀ + t·v₀` scanned over `window`.
    pub fn linear(base: MapNd, direction: MapNd, window: (f64, f64)) -> Result<Self> {
        if base.dim() != direction.dim() {
            return Err(Error::Dimension(format!(
                "base has dimension {} but direction has {}",
                base.dim(),
                direction.dim()
            )));
        }
        let start = if base.dim() == 1 { vec![0.5] } else { vec![0.0; base.dim()] };
        Ok(Self { kind: FamilyKind::Linear { base, direction }, center: 0.0, scale: 1.0, window, start })
    }

    /// Reparameterizes so that `[-1, 1]` covers native `[lo, hi]`; the scan
    /// window becomes `[-1, 1]`.
    pub fn on_native_window(mut self, lo: f64, hi: f64) -> Self {
        self.center = 0.5 * (lo + hi);
        self.scale = 0.5 * (hi - lo);
        self.window = (-1.0, 1.0);
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        assert_eq!(start.len(), self.dim(), "start point dimension");
        self.start = start;
        self
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FamilyKind::Logistic => 1,
            FamilyKind::Henon { .. } => 2,
            FamilyKind::Linear { base, .. } => base.dim(),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn native(&self, t: f64) -> f64 {
        self.center + self.scale * t
    }

    /// Inverse of [`Self::native`].
    pub fn from_native(&self, p: f64) -> f64 {
        (p - self.center) / self.scale
    }

    /// `(t₀)*Ψ`: the family `t ↦ ψ_{t+t₀}`.
    pub fn shift(&self, t0: f64) -> Self {
        let mut out = self.clone();
        out.center += self.scale * t0;
        out.window = (self.window.0 - t0, self.window.1 - t0);
        out
    }

    /// The map `ψ_t`.
    pub fn at(&self, t: f64) -> FamilyMap<'_> {
        FamilyMap { family: self, p: self.native(t) }
    }

    /// `∂ψ_t/∂t` evaluated at `x`.
    pub fn param_derivative(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        let d = match &self.kind {
            FamilyKind::Logistic => vec![x[0] * (1.0 - x[0])],
            FamilyKind::Henon { .. } => vec![-x[0] * x[0], 0.0],
            FamilyKind::Linear { direction, .. } => direction.apply(x),
        };
        d.into_iter().map(|v| v * self.scale).collect()
    }

    /// `ψ_t` as a polynomial map.
    pub fn map_at(&self, t: f64) -> MapNd {
        let p = self.native(t);
        match &self.kind {
            FamilyKind::Logistic => MapNd::logistic(p),
            FamilyKind::Henon { b } => MapNd::henon(p, *b),
            FamilyKind::Linear { base, direction } => base.axpy(p, direction).expect("dimensions checked at construction"),
        }
    }

    /// `∂ψ_t/∂t` as a polynomial map (independent of `t` for every builtin kind).
    pub fn direction_at(&self, _t: f64) -> MapNd {
        match &self.kind {
            FamilyKind::Logistic => MapNd::logistic(1.0).scaled(self.scale),
            FamilyKind::Henon { .. } => MapNd::henon(1.0, 0.0).axpy(-1.0, &MapNd::henon(0.0, 0.0)).expect("same dimension").scaled(self.scale),
            FamilyKind::Linear { direction, .. } => direction.scaled(self.scale),
        }
    }
}

/// A family member at a fixed parameter.
#[derive(Debug, Clone, Copy)]
pub struct FamilyMap<'a> {
    family: &'a OneParamFamily,
    p: f64,
}

impl FamilyMap<'_> {
    pub fn native_param(&self) -> f64 {
        self.p
    }
}

impl PointMap for FamilyMap<'_> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.family.kind {
            FamilyKind::Logistic => out[0] = self.p * x[0] * (1.0 - x[0]),
            FamilyKind::Henon { b } => {
                out[0] = 1.0 - self.p * x[0] * x[0] + x[1];
                out[1] = b * x[0];
            }
            FamilyKind::Linear { base, direction } => {
                base.apply_into(x, out);
                let d = direction.apply(x);
                for (o, v) in out.iter_mut().zip(d) {
                    *o += self.p * v;
                }
            }
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.family.kind {
            FamilyKind::Logistic => DMatrix::from_element(1, 1, self.p * (1.0 - 2.0 * x[0])),
            FamilyKind::Henon { b } => DMatrix::from_row_slice(2, 2, &[-2.0 * self.p * x[0], 1.0, *b, 0.0]),
            FamilyKind::Linear { base, direction } => base.jacobian(x) + direction.jacobian(x) * self.p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_is_reparameterization() {
        let f = OneParamFamily::logistic();
        let g = f.shift(0.05);
        for i in 0..10 {
            let t = 3.0 + 0.05 * i as f64;
            assert_eq!(g.at(t).apply(&[0.3]), f.at(t + 0.05).apply(&[0.3]));
        }
        let back = g.shift(-0.05);
        assert!((back.native(3.3) - f.native(3.3)).abs() < 1e-15);
    }

    #[test]
    fn map_at_matches_family() {
        for fam in [OneParamFamily::logistic(), OneParamFamily::henon(0.3)] {
            let x = vec![0.3; fam.dim()];
            let (a, b) = (fam.at(1.2).apply(&x), fam.map_at(1.2).apply(&x));
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn param_derivative_matches_differences() {
        let h = 1e-6;
        for fam in [OneParamFamily::logistic().on_native_window(2.5, 4.0), OneParamFamily::henon(0.3)] {
            let x = vec![0.4; fam.dim()];
            let t = 0.3;
            let (p, m) = (fam.at(t + h).apply(&x), fam.at(t - h).apply(&x));
            let d = fam.param_derivative(t, &x);
            let dir = fam.direction_at(t).apply(&x);
            for k in 0..fam.dim() {
                let fd = (p[k] - m[k]) / (2.0 * h);
                assert!((fd - d[k]).abs() < 1e-8, "{fd} vs {}", d[k]);
                assert!((dir[k] - d[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_family_matches_logistic() {
        let lin = OneParamFamily::linear(MapNd::logistic(0.0), MapNd::logistic(1.0), (2.5, 4.0)).unwrap();
        let log = OneParamFamily::logistic();
        let (a, b) = (lin.at(3.3).apply(&[0.21]), log.at(3.3).apply(&[0.21]));
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert_eq!(lin.at(3.3).jacobian(&[0.21])[(0, 0)], log.at(3.3).jacobian(&[0.21])[(0, 0)]);
    }
}
