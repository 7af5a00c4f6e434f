//! Gromov-Hausdorff and C⁰-Gromov-Hausdorff distances between finite
//! (dynamical) metric spaces, defined through Δ-isometries.
//!
//! The exact solvers range over every pair of maps `i: X -> Y`, `j: Y -> X`.
//! The objective `max(A(i), B(j))` separates, so the optimal pair is found from
//! the two per-map minima without visiting the product; the budget still refers
//! to the number of pairs so that refusals do not depend on that shortcut.

use serde::{Deserialize, Serialize};

use crate::dynamics::FiniteDynSystem;
use crate::error::{Error, Result};
use crate::isometry::{c0_defect, delta_constant, gh0_witness_bound, PointMap};
use crate::metric::{FiniteMetricSpace, Metric};

/// Default cap on `|Y|^|X| * |X|^|Y|`.
pub const DEFAULT_GH_BUDGET: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GHMethod {
    Exact,
    Bounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GHResult {
    pub method: GHMethod,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_i: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_j: Option<Vec<usize>>,
}

/// Number of map pairs an exhaustive search between spaces of sizes `nx`, `ny` visits.
pub fn pair_count(nx: usize, ny: usize) -> u128 {
    let pow = |b: usize, e: usize| -> u128 {
        u32::try_from(e)
            .ok()
            .and_then(|e| (b as u128).checked_pow(e))
            .unwrap_or(u128::MAX)
    };
    pow(ny, nx).saturating_mul(pow(nx, ny))
}

fn check_budget(nx: usize, ny: usize, budget: u128) -> Result<()> {
    if nx == 0 || ny == 0 {
        return Err(Error::Usage("spaces must be nonempty".into()));
    }
    let required = pair_count(nx, ny);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Visits every assignment `{0..n} -> {0..m}` in lexicographic order.
fn for_each_map(n: usize, m: usize, mut visit: impl FnMut(&[usize])) {
    let mut a = vec![0usize; n];
    loop {
        visit(&a);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            a[k] += 1;
            if a[k] < m {
                break;
            }
            a[k] = 0;
        }
    }
}

/// Lexicographically first map whose score is at most `cap`.
fn first_at_most(scores: &[(Vec<usize>, f64)], cap: f64) -> Vec<usize> {
    scores
        .iter()
        .find(|(_, s)| *s <= cap)
        .map(|(a, _)| a.clone())
        .expect("the minimum is attained")
}

fn min_score(scores: &[(Vec<usize>, f64)]) -> f64 {
    scores.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min)
}

fn separable_optimum(forward: Vec<(Vec<usize>, f64)>, backward: Vec<(Vec<usize>, f64)>) -> GHResult {
    let opt = min_score(&forward).max(min_score(&backward));
    GHResult {
        method: GHMethod::Exact,
        lower: opt,
        upper: opt,
        witness_i: Some(first_at_most(&forward, opt)),
        witness_j: Some(first_at_most(&backward, opt)),
    }
}

fn map_scores<X, Y>(x: &X, y: &Y, extra: impl Fn(&PointMap<'_, X, Y>) -> f64) -> Vec<(Vec<usize>, f64)>
where
    X: Metric + Sync,
    Y: Metric + Sync,
{
    let mut out = Vec::new();
    for_each_map(x.len(), y.len(), |a| {
        let m = PointMap::new(x, y, a.to_vec()).expect("enumerated maps are in range");
        let s = delta_constant(&m).delta_constant.max(extra(&m));
        out.push((a.to_vec(), s));
    });
    out
}

pub fn gh_exact_small(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<GHResult> {
    gh_exact_small_with_budget(x, y, DEFAULT_GH_BUDGET)
}

/// `d_GH(X, Y)`: the min over map pairs of the larger Δ-isometry constant.
/// Ties go to the lexicographically first pair `(i, j)`.
pub fn gh_exact_small_with_budget(x: &FiniteMetricSpace, y: &FiniteMetricSpace, budget: u128) -> Result<GHResult> {
    check_budget(x.n(), y.n(), budget)?;
    Ok(separable_optimum(map_scores(x, y, |_| 0.0), map_scores(y, x, |_| 0.0)))
}

pub fn gh0_exact_small(f: &FiniteDynSystem, g: &FiniteDynSystem) -> Result<GHResult> {
    gh0_exact_small_with_budget(f, g, DEFAULT_GH_BUDGET)
}

/// `d_GH⁰(f, g)`: as [`gh_exact_small`] with both conjugacy defects added to each map's score.
pub fn gh0_exact_small_with_budget(f: &FiniteDynSystem, g: &FiniteDynSystem, budget: u128) -> Result<GHResult> {
    let (x, y) = (f.space(), g.space());
    check_budget(x.n(), y.n(), budget)?;
    let forward = map_scores(x, y, |m| c0_defect(m, f.perm(), g.perm()).expect("valid systems"));
    let backward = map_scores(y, x, |m| c0_defect(m, g.perm(), f.perm()).expect("valid systems"));
    Ok(separable_optimum(forward, backward))
}

/// `|diam X - diam Y| / 3`. A Δ-isometry moves the diameter by less than `3Δ`.
pub fn gh_lower_bound<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y) -> f64 {
    (x.diameter() - y.diameter()).abs() / 3.0
}

/// Certified upper bound for `d_GH⁰(f, g)` from explicit witnesses.
pub fn gh0_upper_via_witness(f: &FiniteDynSystem, g: &FiniteDynSystem, i: &[usize], j: &[usize]) -> Result<f64> {
    let pi = PointMap::new(f.space(), g.space(), i.to_vec())?;
    let pj = PointMap::new(g.space(), f.space(), j.to_vec())?;
    gh0_witness_bound(&pi, &pj, f.perm(), g.perm())
}

/// Eccentricity of every point: its largest distance to another point.
fn eccentricities<M: Metric + ?Sized>(m: &M) -> Vec<f64> {
    (0..m.len())
        .map(|i| (0..m.len()).map(|j| m.dist(i, j)).fold(0.0, f64::max))
        .collect()
}

/// Sends each point to the target point of closest eccentricity, lowest index on ties.
fn eccentricity_map<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y) -> Vec<usize> {
    let (ex, ey) = (eccentricities(x), eccentricities(y));
    ex.iter()
        .map(|e| {
            let mut best = 0;
            for (k, v) in ey.iter().enumerate() {
                if (v - e).abs() < (ey[best] - e).abs() {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Lower bound from diameters, upper bound from an eccentricity-matching witness pair.
pub fn gh_bounds(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<GHResult> {
    if x.n() == 0 || y.n() == 0 {
        return Err(Error::Usage("spaces must be nonempty".into()));
    }
    let i = eccentricity_map(x, y);
    let j = eccentricity_map(y, x);
    let a = delta_constant(&PointMap::new(x, y, i.clone())?).delta_constant;
    let b = delta_constant(&PointMap::new(y, x, j.clone())?).delta_constant;
    Ok(GHResult {
        method: GHMethod::Bounds,
        lower: gh_lower_bound(x, y),
        upper: a.max(b),
        witness_i: Some(i),
        witness_j: Some(j),
    })
}

/// As [`gh_bounds`], with the witness pair also charged its conjugacy defects.
pub fn gh0_bounds(f: &FiniteDynSystem, g: &FiniteDynSystem) -> Result<GHResult> {
    let base = gh_bounds(f.space(), g.space())?;
    let (i, j) = (base.witness_i.clone().unwrap(), base.witness_j.clone().unwrap());
    let upper = gh0_upper_via_witness(f, g, &i, &j)?;
    Ok(GHResult { upper, ..base })
}
