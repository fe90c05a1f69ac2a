//! Nested atoms of the Cantor attractor at the accumulation parameter.
//!
//! The generation-`m` atom `k` is the cluster of orbit points whose index is
//! `k (mod 2^m)`. In one dimension an atom is the interval spanned by its
//! cluster; in higher dimensions it is the principal-axis bounding box.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{orbit_multiplier, periodic_orbit};
use crate::error::{Error, Result};
use crate::family::OneParamFamily;
use crate::poly::{iterate, PointMap};

pub const MAX_GENERATIONS: usize = 12;
/// Points per atom at the finest generation.
pub const POINTS_PER_ATOM: usize = 64;
const TRANSIENT: usize = 1 << 16;
const DIAMETER_DIRECTIONS: usize = 180;
const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomShape {
    Interval { lo: f64, hi: f64 },
    /// `{center + axes·s : |s_i| ≤ half[i]}`; `axes` columns are orthonormal.
    Box { axes: Vec<Vec<f64>>, half: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub index: usize,
    pub center: Vec<f64>,
    pub shape: AtomShape,
    pub diameter: f64,
    pub n_points: usize,
}

impl Atom {
    fn build(index: usize, pts: &[&[f64]]) -> Self {
        let n = pts[0].len();
        let mut center = vec![0.0; n];
        for p in pts {
            for (c, v) in center.iter_mut().zip(p.iter()) {
                *c += v;
            }
        }
        center.iter_mut().for_each(|c| *c /= pts.len() as f64);
        if n == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            return Self { index, center, shape: AtomShape::Interval { lo, hi }, diameter: hi - lo, n_points: pts.len() };
        }
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for p in pts {
            let d = DVector::from_iterator(n, p.iter().zip(&center).map(|(a, c)| a - c));
            cov += &d * d.transpose();
        }
        let axes = SymmetricEigen::new(cov).eigenvectors;
        let mut half = vec![0.0_f64; n];
        for p in pts {
            let d = DVector::from_iterator(n, p.iter().zip(&center).map(|(a, c)| a - c));
            for (h, s) in half.iter_mut().zip((axes.transpose() * d).iter()) {
                *h = h.max(s.abs());
            }
        }
        let axes_cols = (0..n).map(|j| axes.column(j).iter().copied().collect()).collect();
        Self {
            index,
            center,
            shape: AtomShape::Box { axes: axes_cols, half },
            diameter: point_cloud_diameter(pts),
            n_points: pts.len(),
        }
    }

    /// Whether `x` lies in the atom, with a small absolute and relative slack for rounding.
    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = MEMBERSHIP_TOL * (1.0 + self.diameter);
        match &self.shape {
            AtomShape::Interval { lo, hi } => x[0] >= lo - tol && x[0] <= hi + tol,
            AtomShape::Box { axes, half } => axes.iter().zip(half).all(|(a, h)| {
                let s: f64 = a.iter().zip(x).zip(&self.center).map(|((ai, xi), ci)| ai * (xi - ci)).sum();
                s.abs() <= h + tol
            }),
        }
    }

    fn aabb(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            AtomShape::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            AtomShape::Box { axes, half } => {
                let n = self.center.len();
                let mut lo = self.center.clone();
                let mut hi = self.center.clone();
                for i in 0..n {
                    let r: f64 = axes.iter().zip(half).map(|(a, h)| (a[i] * h).abs()).sum();
                    lo[i] -= r;
                    hi[i] += r;
                }
                (lo, hi)
            }
        }
    }

    /// Half-width of the atom's projection onto the unit vector `dir`.
    fn radius_along(&self, dir: &[f64]) -> f64 {
        match &self.shape {
            AtomShape::Interval { lo, hi } => 0.5 * (hi - lo) * dir[0].abs(),
            AtomShape::Box { axes, half } => axes
                .iter()
                .zip(half)
                .map(|(a, h)| h * a.iter().zip(dir).map(|(x, y)| x * y).sum::<f64>().abs())
                .sum(),
        }
    }

    fn mid(&self) -> Vec<f64> {
        match &self.shape {
            AtomShape::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            AtomShape::Box { .. } => self.center.clone(),
        }
    }

    /// Separating-axis test; boxes touching only within rounding count as overlapping.
    fn disjoint_from(&self, other: &Atom) -> bool {
        let (a, b) = (self.mid(), other.mid());
        let gap = |dir: &[f64]| {
            let d: f64 = dir.iter().zip(a.iter().zip(&b)).map(|(u, (x, y))| u * (x - y)).sum();
            d.abs() - self.radius_along(dir) - other.radius_along(dir)
        };
        let axes_of = |atom: &Atom| -> Vec<Vec<f64>> {
            match &atom.shape {
                AtomShape::Interval { .. } => vec![vec![1.0]],
                AtomShape::Box { axes, .. } => axes.clone(),
            }
        };
        axes_of(self).iter().chain(axes_of(other).iter()).any(|dir| gap(dir) > MEMBERSHIP_TOL)
    }
}

/// Largest pairwise distance, from the extreme points along many directions.
fn point_cloud_diameter(pts: &[&[f64]]) -> f64 {
    let n = pts[0].len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    // a fan in every coordinate plane
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..DIAMETER_DIRECTIONS {
                let th = std::f64::consts::PI * k as f64 / DIAMETER_DIRECTIONS as f64;
                let mut e = vec![0.0; n];
                e[i] = th.cos();
                e[j] = th.sin();
                dirs.push(e);
            }
        }
    }
    let mut extremes: Vec<&[f64]> = Vec::with_capacity(2 * dirs.len());
    for d in &dirs {
        let proj = |p: &&[f64]| p.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
        let lo = pts.iter().min_by(|a, b| proj(a).total_cmp(&proj(b))).expect("non-empty");
        let hi = pts.iter().max_by(|a, b| proj(a).total_cmp(&proj(b))).expect("non-empty");
        extremes.push(lo);
        extremes.push(hi);
    }
    let mut best = 0.0_f64;
    for (i, p) in extremes.iter().enumerate() {
        for q in &extremes[i + 1..] {
            let d = p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.max(d);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomTree {
    pub t: f64,
    pub generations: Vec<Vec<Atom>>,
    #[serde(skip)]
    points: Vec<Vec<f64>>,
}

impl AtomTree {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Every generation-`m+1` atom lies inside its generation-`m` parent
    /// (checked on the child's sample points and, in 1D, as intervals).
    pub fn is_nested(&self) -> bool {
        (1..self.generations.len()).all(|m| {
            let parents = &self.generations[m - 1];
            let stride = 1usize << m;
            self.generations[m].par_iter().all(|child| {
                let parent = &parents[child.index % parents.len()];
                let interval_ok = match (&child.shape, &parent.shape) {
                    (AtomShape::Interval { lo, hi }, AtomShape::Interval { lo: plo, hi: phi }) => lo >= plo && hi <= phi,
                    _ => true,
                };
                interval_ok && self.points.iter().skip(child.index).step_by(stride).all(|p| parent.contains(p))
            })
        })
    }

    /// `ψ_t` maps the sample points of atom `k` into atom `k+1 (mod 2^m)` at every generation.
    pub fn is_cyclic(&self, fam: &OneParamFamily) -> bool {
        let psi = fam.at(self.t);
        self.generations.iter().enumerate().all(|(m, atoms)| {
            let stride = 1usize << m;
            atoms.par_iter().all(|atom| {
                let target = &atoms[(atom.index + 1) % stride];
                self.points.iter().skip(atom.index).step_by(stride).all(|p| target.contains(&psi.apply(p)))
            })
        })
    }

    /// Atoms within every generation are pairwise disjoint.
    pub fn first_overlap(&self) -> Option<usize> {
        self.generations.iter().position(|atoms| !pairwise_disjoint(atoms))
    }
}

/// Sweep along the first coordinate, testing only pairs whose bounding boxes meet.
fn pairwise_disjoint(atoms: &[Atom]) -> bool {
    let mut order: Vec<(Vec<f64>, Vec<f64>, usize)> = atoms.iter().enumerate().map(|(i, a)| {
        let (lo, hi) = a.aabb();
        (lo, hi, i)
    }).collect();
    order.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    (0..order.len()).into_par_iter().all(|i| {
        let (_, hi_i, ai) = &order[i];
        order[i + 1..]
            .iter()
            .take_while(|(lo_j, _, _)| lo_j[0] <= hi_i[0] + MEMBERSHIP_TOL)
            .all(|(lo_j, hi_j, aj)| {
                let boxes_meet = lo_j.iter().zip(hi_j).zip(order[i].0.iter().zip(hi_i)).all(|((l1, h1), (l2, h2))| l1 <= h2 && l2 <= h1);
                !boxes_meet || atoms[*ai].disjoint_from(&atoms[*aj])
            })
    })
}

/// Builds generations `0..=generations` of atoms from the orbit of the family's start point.
pub fn build_atoms(fam: &OneParamFamily, t: f64, generations: usize, n_points: usize) -> Result<AtomTree> {
    if generations > MAX_GENERATIONS {
        return Err(Error::Config(format!("at most {MAX_GENERATIONS} generations, got {generations}")));
    }
    let needed = POINTS_PER_ATOM << generations;
    if n_points < needed {
        return Err(Error::Config(format!("{generations} generations need at least {needed} points, got {n_points}")));
    }
    let psi = fam.at(t);
    let mut x = iterate(&psi, fam.start(), TRANSIENT)?;
    let mut points = Vec::with_capacity(n_points);
    for step in 0..n_points {
        points.push(x.clone());
        x = psi.apply(&x);
        if !x.iter().all(|v| v.is_finite() && v.abs() < crate::poly::ESCAPE_RADIUS) {
            return Err(Error::Escape { step: TRANSIENT + step + 1 });
        }
    }
    let gens: Vec<Vec<Atom>> = (0..=generations)
        .map(|m| {
            let stride = 1usize << m;
            (0..stride)
                .into_par_iter()
                .map(|k| {
                    let cluster: Vec<&[f64]> = points.iter().skip(k).step_by(stride).map(Vec::as_slice).collect();
                    Atom::build(k, &cluster)
                })
                .collect()
        })
        .collect();
    let tree = AtomTree { t, generations: gens, points };
    if let Some(generation) = tree.first_overlap() {
        return Err(Error::Resolution { generation });
    }
    Ok(tree)
}

/// Largest atom diameter per generation.
pub fn atom_diameters(tree: &AtomTree) -> Vec<f64> {
    tree.generations.iter().map(|g| g.iter().map(|a| a.diameter).fold(0.0, f64::max)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRatios {
    pub ratios: Vec<f64>,
    pub lambda_estimate: f64,
}

pub fn scaling_ratios(diameters: &[f64]) -> Result<ScalingRatios> {
    if diameters.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: diameters.len() });
    }
    let ratios: Vec<f64> = diameters.windows(2).map(|w| w[1] / w[0]).collect();
    let lambda_estimate = *ratios.last().expect("at least two ratios");
    Ok(ScalingRatios { ratios, lambda_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Sink,
    Saddle,
    Repeller,
    NonHyperbolic,
    NotFound,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleEntry {
    pub n: usize,
    pub period: usize,
    pub kind: OrbitKind,
    pub multipliers: Vec<(f64, f64)>,
    pub point: Option<Vec<f64>>,
}

pub fn classify(multipliers: &[(f64, f64)]) -> OrbitKind {
    let mods: Vec<f64> = multipliers.iter().map(|z| z.0.hypot(z.1)).collect();
    if mods.iter().any(|m| (m - 1.0).abs() < 1e-9) {
        OrbitKind::NonHyperbolic
    } else if mods.iter().all(|&m| m < 1.0) {
        OrbitKind::Sink
    } else if mods.iter().all(|&m| m > 1.0) {
        OrbitKind::Repeller
    } else {
        OrbitKind::Saddle
    }
}

/// Locates and classifies the period-`2^N` orbit for each `N` in `ns`.
pub fn verify_periodic_saddles(fam: &OneParamFamily, t: f64, ns: &[usize]) -> Vec<SaddleEntry> {
    let psi = fam.at(t);
    // Newton guesses: points on the attractor, plus a grid across its hull in 1D
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    if let Ok(mut x) = iterate(&psi, fam.start(), 4096) {
        for _ in 0..256 {
            guesses.push(x.clone());
            x = psi.apply(&x);
        }
    }
    if fam.dim() == 1 && !guesses.is_empty() {
        let lo = guesses.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = guesses.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        guesses.extend((0..=64).map(|i| vec![lo + (hi - lo) * i as f64 / 64.0]));
    }
    ns.par_iter()
        .map(|&n| {
            let period = 1usize << n;
            let found = guesses.iter().find_map(|g| periodic_orbit(fam, t, period, g).ok());
            match found {
                Some(orbit) => {
                    let multipliers = orbit_multiplier(fam, t, &orbit);
                    SaddleEntry { n, period, kind: classify(&multipliers), multipliers, point: Some(orbit[0].clone()) }
                }
                None => SaddleEntry { n, period, kind: OrbitKind::NotFound, multipliers: Vec::new(), point: None },
            }
        })
        .collect()
}
