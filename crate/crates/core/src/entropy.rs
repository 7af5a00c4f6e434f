//! Separated-set counts `s_n(f, δ)` and their exponential growth.
//!
//! Two points are `(n, δ)`-separated when their orbits are at least `δ` apart
//! at some time `0 <= j < n`. The pairs that are not separated form a conflict
//! graph, and `s_n` is the size of its largest independent set. Edges only
//! disappear as `n` grows, so a sweep over `n` filters one edge list.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::dynamics::{FiniteDynSystem, SystemOracle};
use crate::error::{usage, Error, Result};
use crate::metric::{FiniteMetricSpace, Metric};
use crate::mis::{greedy_independent_set, maximum_independent_set_ordered, Graph};
use crate::point::{torus_distance, Point};

/// Precomputed orbits of a finite point set, long enough for `horizon` iterates.
#[derive(Clone, Debug)]
pub enum OrbitTable<'a> {
    /// `iterates[j][u]` is the index of `g^j(u)`.
    Finite {
        space: &'a FiniteMetricSpace,
        iterates: Vec<Vec<u32>>,
    },
    /// `orbits[u][j]` is `f^j(x_u)`.
    Sampled { orbits: Vec<Vec<Point>> },
}

impl<'a> OrbitTable<'a> {
    pub fn finite(fd: &'a FiniteDynSystem, horizon: usize) -> Self {
        let mut iterates = Vec::with_capacity(horizon);
        let mut row: Vec<u32> = (0..fd.n() as u32).collect();
        for _ in 0..horizon {
            let next = row.iter().map(|&u| fd.apply(u as usize) as u32).collect();
            iterates.push(std::mem::replace(&mut row, next));
        }
        OrbitTable::Finite {
            space: fd.space(),
            iterates,
        }
    }

    /// Orbit segments `[x, f(x), ..., f^{horizon-1}(x)]` of every point.
    pub fn sampled(system: &dyn SystemOracle, points: &[Point], horizon: usize) -> OrbitTable<'static> {
        let orbits = points
            .iter()
            .map(|&p| {
                let mut orbit = Vec::with_capacity(horizon);
                let mut x = p;
                for _ in 0..horizon {
                    orbit.push(x);
                    x = system.forward(&x);
                }
                orbit
            })
            .collect();
        OrbitTable::Sampled { orbits }
    }

    pub fn len(&self) -> usize {
        match self {
            OrbitTable::Finite { space, .. } => space.n(),
            OrbitTable::Sampled { orbits } => orbits.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn horizon(&self) -> usize {
        match self {
            OrbitTable::Finite { iterates, .. } => iterates.len(),
            OrbitTable::Sampled { orbits } => orbits.first().map_or(usize::MAX, Vec::len),
        }
    }

    /// `d(f^j(u), f^j(v))`.
    #[inline]
    pub fn dist_at(&self, u: usize, v: usize, j: usize) -> f64 {
        match self {
            OrbitTable::Finite { space, iterates } => {
                let row = &iterates[j];
                space.dist(row[u] as usize, row[v] as usize)
            }
            OrbitTable::Sampled { orbits } => torus_distance(&orbits[u][j], &orbits[v][j]),
        }
    }

    /// `max_{0 <= j < n} d(f^j(u), f^j(v))`.
    pub fn orbit_distance(&self, u: usize, v: usize, n: usize) -> f64 {
        (0..n).map(|j| self.dist_at(u, v, j)).fold(0.0, f64::max)
    }

    /// Rank of every point in coordinate order, when the points have coordinates.
    pub fn position_rank(&self) -> Option<Vec<usize>> {
        let coords: Vec<&[f64]> = match self {
            OrbitTable::Finite { space, .. } => {
                let (cloud, _) = space.embedding()?;
                cloud.points.iter().map(|p| p.coords()).collect()
            }
            OrbitTable::Sampled { orbits } => orbits.iter().map(|o| o[0].coords()).collect(),
        };
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| coords[a].partial_cmp(coords[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        Some(rank)
    }

    fn check_horizon(&self, n: usize) -> Result<()> {
        if n > self.horizon() {
            return Err(usage(format!("orbit table covers {} iterates, {n} requested", self.horizon())));
        }
        Ok(())
    }
}

/// Whether every pair of distinct points of `set` is `(n, δ)`-separated (`>= δ`).
pub fn is_separated(table: &OrbitTable<'_>, set: &[usize], n: usize, delta: f64) -> Result<bool> {
    table.check_horizon(n)?;
    for (a, &u) in set.iter().enumerate() {
        for &v in &set[a + 1..] {
            if table.orbit_distance(u, v, n) < delta {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Limits on exact separated-set searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactBudget {
    /// Largest number of distinct orbits accepted by [`max_separated_exact`].
    pub max_points: usize,
    /// Branch-and-bound nodes before the search gives up.
    pub max_nodes: u64,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget {
            max_points: 64,
            max_nodes: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    GreedyLowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatedSet {
    pub points: Vec<usize>,
    pub exactness: Exactness,
}

impl SeparatedSet {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

fn conflict_graph(table: &OrbitTable<'_>, n: usize, delta: f64) -> Graph {
    let m = table.len();
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if table.orbit_distance(u, v, n) < delta {
                edges.push((u as u32, v as u32));
            }
        }
    }
    Graph::from_edges(m, &edges)
}

/// Points whose orbits coincide with an earlier point's for the first `n` steps.
fn distinct_orbits(table: &OrbitTable<'_>, n: usize) -> usize {
    let mut reps: Vec<usize> = Vec::new();
    for u in 0..table.len() {
        if !reps.iter().any(|&r| table.orbit_distance(r, u, n) == 0.0) {
            reps.push(u);
        }
    }
    reps.len()
}

/// Largest `(n, δ)`-separated subset of the table's points, found exactly.
pub fn max_separated_exact(table: &OrbitTable<'_>, n: usize, delta: f64, budget: ExactBudget) -> Result<SeparatedSet> {
    table.check_horizon(n)?;
    let distinct = if delta > 0.0 { distinct_orbits(table, n) } else { table.len() };
    if distinct > budget.max_points {
        return Err(Error::BudgetExceeded {
            required: distinct as u128,
            budget: budget.max_points as u128,
        });
    }
    let rank = table.position_rank();
    let r = maximum_independent_set_ordered(&conflict_graph(table, n, delta), rank.as_deref(), budget.max_nodes);
    if !r.exact {
        return Err(Error::BudgetExceeded {
            required: r.nodes as u128,
            budget: budget.max_nodes as u128,
        });
    }
    Ok(SeparatedSet {
        points: r.set,
        exactness: Exactness::Exact,
    })
}

/// Maximal `(n, δ)`-separated set built in point-index order; a lower bound for `s_n`.
pub fn max_separated_greedy(table: &OrbitTable<'_>, n: usize, delta: f64) -> Result<SeparatedSet> {
    table.check_horizon(n)?;
    Ok(SeparatedSet {
        points: greedy_independent_set(&conflict_graph(table, n, delta)),
        exactness: Exactness::GreedyLowerBound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationRow {
    pub n: usize,
    pub count: usize,
    pub exactness: Exactness,
}

/// Counts for `n = 1..=n_max`, exact where the node budget allows.
///
/// A row whose search runs out of budget keeps the best set found, which is
/// never smaller than the previous row's set (still separated at larger `n`).
pub fn separation_sweep(table: &OrbitTable<'_>, delta: f64, n_max: usize, max_nodes: u64) -> Result<Vec<SeparationRow>> {
    table.check_horizon(n_max)?;
    let m = table.len();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    if n_max > 0 {
        for u in 0..m {
            for v in u + 1..m {
                if table.dist_at(u, v, 0) < delta {
                    edges.push((u as u32, v as u32));
                }
            }
        }
    }
    let rank = table.position_rank();
    let mut rows: Vec<SeparationRow> = Vec::with_capacity(n_max);
    let mut previous: Option<(Vec<usize>, Exactness)> = None;
    for n in 1..=n_max {
        let before = edges.len();
        if n > 1 {
            edges.retain(|&(u, v)| table.dist_at(u as usize, v as usize, n - 1) < delta);
        }
        let unchanged = n > 1 && edges.len() == before;
        let (set, exactness) = match previous.take() {
            Some(prev) if unchanged => prev,
            prev => {
                let g = Graph::from_edges(m, &edges);
                let r = maximum_independent_set_ordered(&g, rank.as_deref(), max_nodes);
                if r.exact {
                    (r.set, Exactness::Exact)
                } else {
                    match prev {
                        Some((p, _)) if p.len() > r.set.len() => (p, Exactness::GreedyLowerBound),
                        _ => (r.set, Exactness::GreedyLowerBound),
                    }
                }
            }
        };
        rows.push(SeparationRow {
            n,
            count: set.len(),
            exactness,
        });
        previous = Some((set, exactness));
    }
    Ok(rows)
}

/// Least-squares slope of `ln(count)` against `n` over the rows with `n` in `window`.
pub fn entropy_slope(rows: &[SeparationRow], window: RangeInclusive<usize>) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| window.contains(&r.n))
        .map(|r| (r.n as f64, (r.count as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(usage(format!("slope needs at least 2 rows in {window:?}, found {}", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationReport {
    pub system: String,
    pub delta: f64,
    /// Number of points whose orbits were compared.
    pub resolution: usize,
    pub rows: Vec<SeparationRow>,
    pub window: [usize; 2],
    pub slope: f64,
    /// For finite systems: the lcm of the cycle lengths, after which counts cannot change.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturates_at: Option<u64>,
}

impl SeparationReport {
    pub fn all_exact(&self) -> bool {
        self.rows.iter().all(|r| r.exactness == Exactness::Exact)
    }

    /// Counts never decrease with `n` (exact rows only carry this guarantee
    /// for the true `s_n`; bounded rows carry it by construction).
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].count <= w[1].count)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of the cycle lengths, `None` past `u64`.
pub fn cycle_lcm(fd: &FiniteDynSystem) -> Option<u64> {
    fd.cycles().iter().try_fold(1u64, |acc, c| {
        let len = c.len() as u64;
        (acc / gcd(acc, len)).checked_mul(len)
    })
}

/// Default per-row node budget for exact separated-set searches.
pub const DEFAULT_ENTROPY_NODES: u64 = 500_000;

/// Separated-set counts of a permutation system for `n = 1..=n_max`.
///
/// Since `g^L` is the identity for `L` the lcm of the cycle lengths, the
/// conflict graph is the same for every `n >= L`; the slope is taken over that
/// tail when it has at least two rows, otherwise over the upper half.
pub fn finite_system_entropy(fd: &FiniteDynSystem, delta: f64, n_max: usize) -> Result<SeparationReport> {
    finite_system_entropy_with_budget(fd, delta, n_max, None, DEFAULT_ENTROPY_NODES)
}

/// As [`finite_system_entropy`], with an optional explicit slope window.
pub fn finite_system_entropy_with_budget(
    fd: &FiniteDynSystem,
    delta: f64,
    n_max: usize,
    window: Option<RangeInclusive<usize>>,
    max_nodes: u64,
) -> Result<SeparationReport> {
    if n_max < 2 {
        return Err(usage("n_max must be at least 2"));
    }
    let table = OrbitTable::finite(fd, n_max);
    let rows = separation_sweep(&table, delta, n_max, max_nodes)?;
    for r in &rows {
        assert!(r.count <= fd.n(), "separated set larger than the space");
    }
    let lcm = cycle_lcm(fd);
    let window = window.unwrap_or_else(|| match lcm {
        Some(l) if (l as usize) < n_max => l as usize..=n_max,
        _ => n_max / 2 + 1..=n_max,
    });
    let slope = entropy_slope(&rows, window.clone())?;
    Ok(SeparationReport {
        system: "finite".into(),
        delta,
        resolution: fd.n(),
        rows,
        window: [*window.start(), *window.end()],
        slope,
        saturates_at: lcm,
    })
}

/// Separated-set counts of a sampled oracle over `points`, slope over `window`.
pub fn sampled_system_entropy(
    system: &dyn SystemOracle,
    points: &[Point],
    delta: f64,
    n_max: usize,
    window: RangeInclusive<usize>,
    max_nodes: u64,
) -> Result<SeparationReport> {
    let table = OrbitTable::sampled(system, points, n_max);
    let rows = separation_sweep(&table, delta, n_max, max_nodes)?;
    let slope = entropy_slope(&rows, window.clone())?;
    Ok(SeparationReport {
        system: system.name(),
        delta,
        resolution: points.len(),
        rows,
        window: [*window.start(), *window.end()],
        slope,
        saturates_at: None,
    })
}
