//! Atomic invariant measures, recurrence searches and semi-conjugacy defects.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{FiniteDynSystem, SystemOracle};
use crate::error::{usage, Result};
use crate::isometry::{c0_defect, delta_constant, IsometryDefect, PointMap};
use crate::metric::Metric;
use crate::point::{torus_distance, Point, POINT_MERGE_TOLERANCE};

/// Tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// How atoms are identified when measures are merged or compared.
pub trait Atom: Clone {
    fn coincides(&self, other: &Self) -> bool;

    /// Exact identity key, when coincidence is equality.
    fn key(&self) -> Option<u64> {
        None
    }
}

/// Finite-system points compare by index.
impl Atom for usize {
    fn coincides(&self, other: &Self) -> bool {
        self == other
    }

    fn key(&self) -> Option<u64> {
        Some(*self as u64)
    }
}

/// Ambient points coincide within [`POINT_MERGE_TOLERANCE`].
impl Atom for Point {
    fn coincides(&self, other: &Self) -> bool {
        torus_distance(self, other) <= POINT_MERGE_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicMeasure<A> {
    atoms: Vec<A>,
    weights: Vec<f64>,
}

/// Adds up the weights of coincident atoms, keeping first-occurrence order.
fn merge<A: Atom>(atoms: Vec<A>, weights: Vec<f64>) -> (Vec<A>, Vec<f64>) {
    let mut out_a: Vec<A> = Vec::with_capacity(atoms.len());
    let mut out_w: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut by_key: HashMap<u64, usize> = HashMap::new();
    for (a, w) in atoms.into_iter().zip(weights) {
        let slot = match a.key() {
            Some(k) => by_key.get(&k).copied(),
            None => out_a.iter().position(|b| b.coincides(&a)),
        };
        match slot {
            Some(s) => out_w[s] += w,
            None => {
                if let Some(k) = a.key() {
                    by_key.insert(k, out_a.len());
                }
                out_a.push(a);
                out_w.push(w);
            }
        }
    }
    (out_a, out_w)
}

impl<A: Atom> AtomicMeasure<A> {
    /// Validated: positive weights summing to 1 and pairwise distinct atoms.
    pub fn new(atoms: Vec<A>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(usage(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(usage("weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(usage(format!("weights sum to {total}, not 1")));
        }
        let n = atoms.len();
        let (merged, _) = merge(atoms.clone(), weights.clone());
        if merged.len() != n {
            return Err(usage("atoms must be distinct"));
        }
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn dirac(atom: A) -> Self {
        AtomicMeasure {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weight carried by the atom coinciding with `a`, or 0.
    pub fn mass_at(&self, a: &A) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(b, _)| b.coincides(a))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Uniform measure on the orbit of `p`.
pub fn periodic_orbit_measure(fd: &FiniteDynSystem, p: usize) -> Result<AtomicMeasure<usize>> {
    if p >= fd.n() {
        return Err(usage(format!("point {p} outside a system of {} points", fd.n())));
    }
    let mut orbit = vec![p];
    let mut x = fd.apply(p);
    while x != p {
        orbit.push(x);
        x = fd.apply(x);
    }
    let w = 1.0 / orbit.len() as f64;
    let weights = vec![w; orbit.len()];
    Ok(AtomicMeasure { atoms: orbit, weights })
}

/// `sum_{n=1}^{K} 2^-n mu_n / (1 - 2^-K)` with coincident atoms merged.
pub fn mixture_measure<A: Atom>(parts: &[AtomicMeasure<A>]) -> Result<AtomicMeasure<A>> {
    if parts.is_empty() {
        return Err(usage("a mixture needs at least one part"));
    }
    let k = parts.len() as i32;
    let norm = 1.0 - 0.5f64.powi(k);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (n, part) in parts.iter().enumerate() {
        let c = 0.5f64.powi(n as i32 + 1) / norm;
        atoms.extend(part.atoms.iter().cloned());
        weights.extend(part.weights.iter().map(|w| w * c));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(usage(format!("{k} parts: the last weights underflow to zero")));
    }
    let (atoms, weights) = merge(atoms, weights);
    Ok(AtomicMeasure { atoms, weights })
}

/// Image measure `map_* mu`; coincident images are merged.
pub fn pushforward<A: Atom>(mu: &AtomicMeasure<A>, map: impl Fn(&A) -> A) -> AtomicMeasure<A> {
    let atoms = mu.atoms.iter().map(map).collect();
    let (atoms, weights) = merge(atoms, mu.weights.clone());
    AtomicMeasure { atoms, weights }
}

/// Total variation distance between two atomic measures.
pub fn total_variation<A: Atom>(a: &AtomicMeasure<A>, b: &AtomicMeasure<A>) -> f64 {
    let atoms: Vec<A> = a.atoms.iter().chain(&b.atoms).cloned().collect();
    let weights: Vec<f64> = a.weights.iter().copied().chain(b.weights.iter().map(|w| -w)).collect();
    let (_, diff) = merge(atoms, weights);
    diff.iter().map(|d| d.abs()).sum::<f64>() / 2.0
}

/// `TV(mu, map_* mu)`.
pub fn invariance_defect<A: Atom>(mu: &AtomicMeasure<A>, map: impl Fn(&A) -> A) -> f64 {
    total_variation(mu, &pushforward(mu, map))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coverage {
    pub covered: bool,
    pub worst_gap: f64,
}

/// Whether every sample point lies within `eps` of an atom (strictly), and the
/// largest distance from a sample point to its nearest atom.
pub fn support_covers<A, S>(
    mu: &AtomicMeasure<A>,
    sample: &[S],
    eps: f64,
    metric: impl Fn(&S, &A) -> f64,
) -> Result<Coverage> {
    if !(eps > 0.0) {
        return Err(usage("eps must be positive"));
    }
    let worst_gap = sample
        .iter()
        .map(|s| mu.atoms.iter().map(|a| metric(s, a)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(Coverage {
        covered: worst_gap < eps,
        worst_gap,
    })
}

/// First `k <= cap` with `d(f^k(x), center) < radius`.
pub fn birkhoff_hitting(system: &dyn SystemOracle, x: Point, center: Point, radius: f64, cap: u64) -> Result<Option<u64>> {
    if !(radius > 0.0) {
        return Err(usage("radius must be positive"));
    }
    let mut p = x;
    for k in 0..=cap {
        if system.distance(&p, &center) < radius {
            return Ok(Some(k));
        }
        p = system.forward(&p);
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiconjugacyDefect {
    /// `sup_y d(f(h(y)), h(g(y)))`.
    pub c0: f64,
    pub iso: IsometryDefect,
}

/// Defects of `h: Y -> X` as a semi-conjugacy from `g` on `Y` to `f` on `X`.
pub fn semiconjugacy_defect<X>(h: &PointMap<'_, X, X>, g: &[usize], f: &[usize]) -> Result<SemiconjugacyDefect>
where
    X: Metric + Sync + ?Sized,
{
    Ok(SemiconjugacyDefect {
        c0: c0_defect(h, g, f)?,
        iso: delta_constant(h),
    })
}

/// Points `y` for which `f^m(h(y)) != h(y)`, `m` the period of `y` under `g`.
pub fn periodic_image_violations(h: &[usize], g: &FiniteDynSystem, f: &FiniteDynSystem) -> Vec<usize> {
    let periods = crate::approx::all_periods(g);
    (0..g.n())
        .filter(|&y| f.iterate(h[y], periods[y]) != h[y])
        .collect()
}
