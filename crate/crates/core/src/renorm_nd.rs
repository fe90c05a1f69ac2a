//! Doubling renormalization of n-dimensional maps: ellipsoidal domains,
//! sampled renormalizability checks, `ξ⁻¹∘ψ∘ψ∘ξ` refits and disk search.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowdisc::{ball_samples, interior_samples};
use crate::poly::{iterate, MapNd, PointMap};

/// Minimum margin for a check to count as a pass.
pub const PASS_MARGIN: f64 = 1e-3;
pub const MIN_SAMPLES: usize = 1000;
pub const DEFAULT_REFIT_DEGREE: u32 = 8;
pub const DEFAULT_REFIT_THRESHOLD: f64 = 1e-4;

/// `{center + linear·u : ‖u‖ ≤ 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiskJson", into = "DiskJson")]
pub struct DiskNd {
    center: DVector<f64>,
    linear: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiskJson {
    center: Vec<f64>,
    linear: Vec<Vec<f64>>,
}

impl TryFrom<DiskJson> for DiskNd {
    type Error = Error;
    fn try_from(j: DiskJson) -> Result<Self> {
        let n = j.center.len();
        if j.linear.len() != n || j.linear.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("disk center has {n} entries but linear part is not {n}x{n}")));
        }
        let linear = DMatrix::from_fn(n, n, |i, k| j.linear[i][k]);
        DiskNd::new(DVector::from_vec(j.center), linear)
    }
}

impl From<DiskNd> for DiskJson {
    fn from(d: DiskNd) -> Self {
        let n = d.dim();
        DiskJson {
            center: d.center.iter().copied().collect(),
            linear: (0..n).map(|i| d.linear.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl DiskNd {
    pub fn new(center: DVector<f64>, linear: DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 || linear.nrows() != n || linear.ncols() != n {
            return Err(Error::Dimension("disk needs a nonempty center and a square linear part".into()));
        }
        if center.iter().chain(linear.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Disk { det: f64::NAN });
        }
        let det = linear.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::Disk { det });
        }
        let inverse = linear.clone().try_inverse().ok_or(Error::Disk { det })?;
        Ok(Self { center, linear, inverse })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    /// `ξ(u) = center + linear·u`.
    pub fn chart(&self, u: &[f64]) -> Vec<f64> {
        (&self.center + &self.linear * DVector::from_column_slice(u)).iter().copied().collect()
    }

    /// `ξ⁻¹(y)`.
    pub fn chart_inv(&self, y: &[f64]) -> Vec<f64> {
        (&self.inverse * (DVector::from_column_slice(y) - &self.center)).iter().copied().collect()
    }

    /// Euclidean norm of `ξ⁻¹(y)`; `≤ 1` exactly on the disk.
    pub fn chart_norm(&self, y: &[f64]) -> f64 {
        if y.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        (&self.inverse * (DVector::from_column_slice(y) - &self.center)).norm()
    }

    /// Same center, linear part multiplied by `factor`.
    pub fn shrunk(&self, factor: f64) -> Result<Self> {
        Self::new(self.center.clone(), &self.linear * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormCheck {
    pub disjoint_ok: bool,
    pub image_inside_ok: bool,
    /// `min ‖ξ⁻¹(ψ(p))‖ − 1` over samples `p ∈ D₁`.
    pub disjoint_margin: f64,
    /// `1 − max ‖ξ⁻¹(ψ²(p))‖` over samples `p ∈ D₁`.
    pub inside_margin: f64,
}

impl RenormCheck {
    fn from_margins(disjoint_margin: f64, inside_margin: f64) -> Self {
        Self {
            disjoint_ok: disjoint_margin > 0.0,
            image_inside_ok: inside_margin > 0.0,
            disjoint_margin,
            inside_margin,
        }
    }

    /// Both margins exceed `threshold`.
    pub fn passes(&self, threshold: f64) -> bool {
        self.disjoint_margin > threshold && self.inside_margin > threshold
    }

    pub fn min_margin(&self) -> f64 {
        self.disjoint_margin.min(self.inside_margin)
    }
}

/// Sampled test of `ψ(D₁) ∩ D₁ = ∅` and `ψ²(D₁) ⊂ int D₁`.
///
/// A pass is evidence at the sampled points, not a proof; the margins say
/// how robust it is.
pub fn check_renormalizable<M: PointMap + ?Sized>(psi: &M, d1: &DiskNd, samples: usize) -> Result<RenormCheck> {
    if samples < MIN_SAMPLES {
        return Err(Error::Config(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if psi.dim() != d1.dim() {
        return Err(Error::Dimension(format!("map dimension {} but disk dimension {}", psi.dim(), d1.dim())));
    }
    Ok(margins_at(psi, d1, &ball_samples(d1.dim(), samples)))
}

fn margins_at<M: PointMap + ?Sized>(psi: &M, d1: &DiskNd, pts: &[Vec<f64>]) -> RenormCheck {
    let (near, far) = pts
        .par_iter()
        .map(|u| {
            let p = d1.chart(u);
            let once = psi.apply(&p);
            let twice = if once.iter().all(|v| v.is_finite()) { psi.apply(&once) } else { once.clone() };
            (d1.chart_norm(&once), d1.chart_norm(&twice))
        })
        .reduce(|| (f64::INFINITY, 0.0f64), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    RenormCheck::from_margins(near - 1.0, 1.0 - far)
}

#[derive(Debug, Clone)]
pub struct RefitOptions {
    pub degree: u32,
    pub samples: usize,
    pub threshold: f64,
}

impl Default for RefitOptions {
    fn default() -> Self {
        Self { degree: DEFAULT_REFIT_DEGREE, samples: 2000, threshold: DEFAULT_REFIT_THRESHOLD }
    }
}

#[derive(Debug, Clone)]
pub struct Renormalized {
    pub map: MapNd,
    /// Largest deviation between the refit and `ξ⁻¹∘ψ∘ψ∘ξ` on fit and
    /// validation samples.
    pub fit_residual: f64,
}

/// Polynomial refit of `ξ⁻¹ ∘ ψ ∘ ψ ∘ ξ` on the unit ball.
pub fn renormalize_nd<M: PointMap + ?Sized>(psi: &M, xi: &DiskNd, opts: &RefitOptions) -> Result<Renormalized> {
    let n = xi.dim();
    if psi.dim() != n {
        return Err(Error::Dimension(format!("map dimension {} but chart dimension {n}", psi.dim())));
    }
    let target = |u: &Vec<f64>| xi.chart_inv(&psi.apply(&psi.apply(&xi.chart(u))));
    let pts = ball_samples(n, opts.samples);
    let vals: Vec<Vec<f64>> = pts.par_iter().map(target).collect();
    if vals.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Refit { residual: f64::INFINITY, threshold: opts.threshold });
    }
    let (map, fit_resid) = MapNd::fit(&pts, &vals, opts.degree, "renormalized")?;
    let check = interior_samples(n, opts.samples / 4, opts.samples as u64 * 3 + 11);
    let valid_resid = check
        .par_iter()
        .map(|u| {
            let want = target(u);
            let got = map.apply(u);
            want.iter().zip(&got).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .reduce(|| 0.0, f64::max);
    let fit_residual = fit_resid.max(valid_resid);
    if !(fit_residual <= opts.threshold) {
        return Err(Error::Refit { residual: fit_residual, threshold: opts.threshold });
    }
    Ok(Renormalized { map, fit_residual })
}

/// Orthonormal frame whose first column is `axis`.
fn frame(axis: &DVector<f64>) -> DMatrix<f64> {
    let n = axis.len();
    let mut cols: Vec<DVector<f64>> = vec![axis.normalize()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for c in &cols {
            v -= c * c.dot(&v);
        }
        if v.norm() > 1e-8 {
            cols.push(v.normalize());
        }
    }
    DMatrix::from_columns(&cols)
}

/// Ellipsoid along the segment `p → q`, extended past `p` by `pad_p` and
/// past `q` by `pad_q` (fractions of the half-length), with isotropic
/// transverse half-width `width` and the center moved by `offset` along the
/// first transverse direction.
pub fn segment_disk(p: &[f64], q: &[f64], pad_p: f64, pad_q: f64, width: f64, offset: f64) -> Result<DiskNd> {
    let p = DVector::from_column_slice(p);
    let q = DVector::from_column_slice(q);
    let axis = &q - &p;
    let len = axis.norm();
    if !(len > 0.0) || !(width > 0.0) {
        return Err(Error::Disk { det: 0.0 });
    }
    let f = frame(&axis);
    let n = p.len();
    let half = 0.5 * len;
    let dir = f.column(0).into_owned();
    let mut center = (&p + &q) * 0.5 + &dir * (0.5 * half * (pad_q - pad_p));
    if n > 1 {
        center += f.column(1) * offset;
    }
    let mut scales = vec![width; n];
    scales[0] = half * (1.0 + 0.5 * (pad_p + pad_q));
    let linear = &f * DMatrix::from_diagonal(&DVector::from_vec(scales));
    DiskNd::new(center, linear)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskSearch {
    pub found: bool,
    /// Passing disk with the largest smaller margin, or the best candidate seen.
    pub disk: Option<DiskNd>,
    pub check: RenormCheck,
    pub candidates: usize,
}

const PADS: [f64; 6] = [0.0, 0.05, 0.15, 0.3, 0.5, 0.8];
const OFFSETS: [f64; 5] = [0.0, -0.5, 0.5, -1.0, 1.0];
const PREFILTER_SAMPLES: usize = 192;
const RECHECKED: usize = 12;

/// Searches segment-aligned ellipsoids over `widths`, a fixed set of
/// independent end paddings and transverse offsets (in units of the width).
pub fn find_renorm_disk<M: PointMap + ?Sized>(
    psi: &M,
    seed: (&[f64], &[f64]),
    widths: &[f64],
    samples: usize,
) -> Result<DiskSearch> {
    let mut cands = Vec::new();
    for &w in widths {
        for &pad_p in &PADS {
            for &pad_q in &PADS {
                for &off in &OFFSETS {
                    if let Ok(d) = segment_disk(seed.0, seed.1, pad_p, pad_q, w, off * w) {
                        cands.push(d);
                    }
                }
            }
        }
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Config(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    // rank every candidate on a coarse sample set, then recheck the leaders
    let coarse = ball_samples(psi.dim(), PREFILTER_SAMPLES);
    let mut ranked: Vec<(f64, &DiskNd)> = cands.iter().map(|d| (margins_at(psi, d, &coarse).min_margin(), d)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let full = ball_samples(psi.dim(), samples);
    let mut best: Option<(DiskNd, RenormCheck)> = None;
    let mut best_pass: Option<(DiskNd, RenormCheck)> = None;
    for (_, d) in ranked.into_iter().take(RECHECKED) {
        let c = margins_at(psi, d, &full);
        let better = |cur: &Option<(DiskNd, RenormCheck)>| cur.as_ref().is_none_or(|b| c.min_margin() > b.1.min_margin());
        if c.passes(PASS_MARGIN) && better(&best_pass) {
            best_pass = Some((d.clone(), c));
        }
        if better(&best) {
            best = Some((d.clone(), c));
        }
    }
    let candidates = cands.len();
    Ok(match (best_pass, best) {
        (Some((d, c)), _) => DiskSearch { found: true, disk: Some(d), check: c, candidates },
        (None, Some((d, c))) => DiskSearch { found: false, disk: Some(d), check: c, candidates },
        (None, None) => DiskSearch {
            found: false,
            disk: None,
            check: RenormCheck::from_margins(f64::NEG_INFINITY, f64::NEG_INFINITY),
            candidates,
        },
    })
}

/// Segments through the two halves of the attractor (orbit points of even
/// and odd index), each along the principal axis of its point cloud.
pub fn attractor_seeds<M: PointMap + ?Sized>(
    psi: &M,
    start: &[f64],
    transient: usize,
    count: usize,
) -> Result<[(Vec<f64>, Vec<f64>); 2]> {
    let n = psi.dim();
    let mut x = iterate(psi, start, transient)?;
    let mut clusters = [Vec::new(), Vec::new()];
    for i in 0..2 * count {
        clusters[i % 2].push(DVector::from_column_slice(&x));
        x = iterate(psi, &x, 1)?;
    }
    let seed = |pts: &Vec<DVector<f64>>| {
        let mean = pts.iter().fold(DVector::zeros(n), |a, p| a + p) / pts.len() as f64;
        let cov = pts.iter().fold(DMatrix::zeros(n, n), |a, p| {
            let d = p - &mean;
            a + &d * d.transpose()
        });
        let eig = cov.symmetric_eigen();
        let k = eig.eigenvalues.imax();
        let axis = eig.eigenvectors.column(k).into_owned();
        let proj: Vec<f64> = pts.iter().map(|p| (p - &mean).dot(&axis)).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a = &mean + &axis * lo;
        let b = &mean + &axis * hi;
        (a.iter().copied().collect(), b.iter().copied().collect())
    };
    Ok([seed(&clusters[0]), seed(&clusters[1])])
}

/// Half-widths tried around a seed, as fractions of its half-length.
pub const RELATIVE_WIDTHS: [f64; 10] = [0.02, 0.05, 0.08, 0.12, 0.16, 0.2, 0.3, 0.4, 0.55, 0.7];

#[derive(Debug, Clone, Serialize)]
pub struct ChainLevel {
    pub level: usize,
    pub disk: DiskNd,
    pub check: RenormCheck,
    pub fit_residual: f64,
}

/// Repeated disk search and renormalization: level `m` certifies that the
/// `(m−1)`-times renormalized map is renormalizable on the found disk.
pub fn renormalization_chain(
    psi: &MapNd,
    levels: usize,
    samples: usize,
    refit: &RefitOptions,
) -> Result<Vec<ChainLevel>> {
    let mut current = psi.clone();
    let mut out = Vec::with_capacity(levels);
    for level in 1..=levels {
        let start = vec![0.0; current.dim()];
        let seeds = attractor_seeds(&current, &start, 4096, 512)?;
        let mut best: Option<DiskSearch> = None;
        for (p, q) in &seeds {
            let half = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let widths: Vec<f64> = RELATIVE_WIDTHS.iter().map(|w| w * half).collect();
            let s = find_renorm_disk(&current, (p, q), &widths, samples)?;
            let keep = match &best {
                None => true,
                Some(b) => (s.found && !b.found) || (s.found == b.found && s.check.min_margin() > b.check.min_margin()),
            };
            if keep {
                best = Some(s);
            }
        }
        let search = best.expect("two seeds were searched");
        let disk = search.disk.ok_or(Error::Disk { det: 0.0 })?;
        if !search.found {
            return Err(Error::Renormalization(format!(
                "no renormalization disk at level {level} (best margins {:.3e}, {:.3e})",
                search.check.disjoint_margin, search.check.inside_margin
            )));
        }
        let next = renormalize_nd(&current, &disk, refit)?;
        out.push(ChainLevel { level, disk, check: search.check, fit_residual: next.fit_residual });
        current = next.map;
    }
    Ok(out)
}
