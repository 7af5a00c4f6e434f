//! Distortion, surjectivity defect and C⁰ conjugacy defects of maps between
//! finite metric spaces.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::metric::Metric;

/// An arbitrary (not necessarily continuous) map between two finite spaces,
/// stored as the image index of every domain point.
#[derive(Clone, Debug)]
pub struct PointMap<'a, X: Metric + ?Sized, Y: Metric + ?Sized> {
    pub domain: &'a X,
    pub codomain: &'a Y,
    assign: Vec<usize>,
}

impl<'a, X: Metric + ?Sized, Y: Metric + ?Sized> PointMap<'a, X, Y> {
    pub fn new(domain: &'a X, codomain: &'a Y, assign: Vec<usize>) -> Result<Self> {
        if assign.len() != domain.len() {
            return Err(usage(format!(
                "map assigns {} points but the domain has {}",
                assign.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = assign.iter().find(|&&a| a >= codomain.len()) {
            return Err(usage(format!("image index {bad} outside codomain of size {}", codomain.len())));
        }
        Ok(PointMap { domain, codomain, assign })
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    #[inline]
    pub fn image(&self, x: usize) -> usize {
        self.assign[x]
    }
}

impl<'a, X: Metric + ?Sized> PointMap<'a, X, X> {
    pub fn identity(space: &'a X) -> Self {
        PointMap {
            domain: space,
            codomain: space,
            assign: (0..space.len()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryDefect {
    pub distortion: f64,
    pub surjectivity_defect: f64,
    pub delta_constant: f64,
}

impl IsometryDefect {
    pub fn new(distortion: f64, surjectivity_defect: f64) -> Self {
        IsometryDefect {
            distortion,
            surjectivity_defect,
            delta_constant: distortion.max(surjectivity_defect),
        }
    }

    /// Strict: a map is a Δ-isometry only when its constant is below Δ.
    pub fn is_delta_isometry(&self, delta: f64) -> bool {
        self.delta_constant < delta
    }
}

/// `max_{k < n} value(k)`, spread across threads for large `n`. Returns 0 for `n = 0`.
pub fn par_max<F>(n: usize, value: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const CHUNK: usize = 16;
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get());
    if threads == 1 || n < 4 * CHUNK {
        return (0..n).map(&value).fold(0.0, f64::max);
    }
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut best = 0.0f64;
                    loop {
                        let start = next.fetch_add(CHUNK, Ordering::Relaxed);
                        if start >= n {
                            break best;
                        }
                        for k in start..(start + CHUNK).min(n) {
                            best = best.max(value(k));
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold(0.0, f64::max)
    })
}

/// `sup_{x, x'} |d_Y(m(x), m(x')) - d_X(x, x')|` over all domain pairs.
pub fn distortion<X, Y>(m: &PointMap<'_, X, Y>) -> f64
where
    X: Metric + Sync + ?Sized,
    Y: Metric + Sync + ?Sized,
{
    let n = m.domain.len();
    par_max(n, |i| {
        let ai = m.assign[i];
        let mut worst = 0.0f64;
        for j in i + 1..n {
            let d = (m.codomain.dist(ai, m.assign[j]) - m.domain.dist(i, j)).abs();
            worst = worst.max(d);
        }
        worst
    })
}

/// Hausdorff distance between the image and the whole codomain, which reduces
/// to the farthest codomain point from the image.
pub fn surjectivity_defect<X, Y>(m: &PointMap<'_, X, Y>) -> f64
where
    X: Metric + ?Sized,
    Y: Metric + Sync + ?Sized,
{
    let mut image: Vec<usize> = m.assign.clone();
    image.sort_unstable();
    image.dedup();
    if image.is_empty() {
        return if m.codomain.len() == 0 { 0.0 } else { f64::INFINITY };
    }
    par_max(m.codomain.len(), |y| {
        image
            .iter()
            .map(|&v| m.codomain.dist(y, v))
            .fold(f64::INFINITY, f64::min)
    })
}

pub fn delta_constant<X, Y>(m: &PointMap<'_, X, Y>) -> IsometryDefect
where
    X: Metric + Sync + ?Sized,
    Y: Metric + Sync + ?Sized,
{
    IsometryDefect::new(distortion(m), surjectivity_defect(m))
}

fn check_dynamics(map: &[usize], n: usize, which: &str) -> Result<()> {
    if map.len() != n {
        return Err(usage(format!("{which} has {} entries for a space of {n} points", map.len())));
    }
    if let Some(&bad) = map.iter().find(|&&a| a >= n) {
        return Err(usage(format!("{which} leaves its space: image {bad} with only {n} points")));
    }
    Ok(())
}

/// `sup_z d_Y(g(m(z)), m(f(z)))` where `f` acts on the domain and `g` on the codomain.
pub fn c0_defect<X, Y>(m: &PointMap<'_, X, Y>, f: &[usize], g: &[usize]) -> Result<f64>
where
    X: Metric + Sync + ?Sized,
    Y: Metric + Sync + ?Sized,
{
    check_dynamics(f, m.domain.len(), "domain dynamics")?;
    check_dynamics(g, m.codomain.len(), "codomain dynamics")?;
    Ok(par_max(m.domain.len(), |z| {
        m.codomain.dist(g[m.assign[z]], m.assign[f[z]])
    }))
}

/// The smallest Δ-candidate witnessed by `(i, j)`: the max of both isometry
/// constants and both conjugacy defects. Any Δ above it bounds `d_GH⁰(f, g)`.
pub fn gh0_witness_bound<X, Y>(
    i: &PointMap<'_, X, Y>,
    j: &PointMap<'_, Y, X>,
    f: &[usize],
    g: &[usize],
) -> Result<f64>
where
    X: Metric + Sync + ?Sized,
    Y: Metric + Sync + ?Sized,
{
    let a = delta_constant(i).delta_constant;
    let b = delta_constant(j).delta_constant;
    let c = c0_defect(i, f, g)?;
    let d = c0_defect(j, g, f)?;
    Ok(a.max(b).max(c).max(d))
}

/// Exchange form of a map: its assignment plus free-text names of both spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMapDoc {
    pub assign: Vec<usize>,
    pub domain: String,
    pub codomain: String,
}
