//! Homeomorphism oracles on flat tori and exact finite dynamical systems.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::metric::{check_permutation, EmbeddingDoc, FiniteMetricSpace, MetricSpaceDoc};
use crate::point::{torus_distance, wrap_unit, Point, PointCloud};

/// `(sqrt(5) - 1) / 2`, the default irrational rotation number.
pub fn golden_theta() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Operator norm of the cat matrix `[[2, 1], [1, 1]]`, its largest eigenvalue.
pub fn cat_expansion() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// A homeomorphism of a compact metric space, accessed through its forward and
/// inverse maps, ambient metric and a deterministic sampler.
pub trait SystemOracle: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn forward(&self, p: &Point) -> Point;

    fn inverse(&self, p: &Point) -> Point;

    fn distance(&self, a: &Point, b: &Point) -> f64 {
        torus_distance(a, b)
    }

    /// Deterministic in `(count, seed)`.
    fn sample(&self, count: usize, seed: u64) -> Vec<Point>;

    /// A declared Lipschitz constant for `forward`, if one is known.
    fn lipschitz(&self) -> Option<f64>;

    fn descriptor(&self) -> SystemDescriptor;
}

impl fmt::Debug for dyn SystemOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `x -> x + theta (mod 1)` on the circle with the arc metric.
#[derive(Clone, Debug)]
pub struct CircleRotation {
    pub theta: f64,
    anchor_seed: Option<Point>,
}

pub fn circle_rotation(theta: f64) -> CircleRotation {
    CircleRotation {
        theta: wrap_unit(theta),
        anchor_seed: None,
    }
}

impl SystemOracle for CircleRotation {
    fn name(&self) -> String {
        format!("rotation:{}", self.theta)
    }

    fn dim(&self) -> usize {
        1
    }

    fn forward(&self, p: &Point) -> Point {
        Point::circle(p.x() + self.theta)
    }

    fn inverse(&self, p: &Point) -> Point {
        Point::circle(p.x() - self.theta)
    }

    /// Uniform grid `(k + u) / count` with a seeded offset `u`.
    fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let offset: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
        (0..count)
            .map(|k| Point::circle((k as f64 + offset) / count as f64))
            .collect()
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }

    fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::Rotation {
            theta: self.theta,
            anchor_seed: self.anchor_seed,
        }
    }
}

/// Arnold's cat map `(x, y) -> (2x + y, x + y) (mod 1)` on the flat two-torus.
#[derive(Clone, Debug, Default)]
pub struct CatMap {
    anchor_seed: Option<Point>,
}

pub fn torus_cat_map() -> CatMap {
    CatMap::default()
}

impl SystemOracle for CatMap {
    fn name(&self) -> String {
        "cat".to_string()
    }

    fn dim(&self) -> usize {
        2
    }

    fn forward(&self, p: &Point) -> Point {
        Point::torus(2.0 * p.x() + p.y(), p.x() + p.y())
    }

    fn inverse(&self, p: &Point) -> Point {
        Point::torus(p.x() - p.y(), 2.0 * p.y() - p.x())
    }

    /// Additive recurrence with the plastic-number increments and a seeded offset.
    fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let g = plastic_number();
        let (a1, a2) = (1.0 / g, 1.0 / (g * g));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        (0..count)
            .map(|k| Point::torus(u + a1 * k as f64, v + a2 * k as f64))
            .collect()
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(cat_expansion())
    }

    fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::Cat {
            anchor_seed: self.anchor_seed,
        }
    }
}

fn plastic_number() -> f64 {
    // real root of x^3 = x + 1
    let mut x = 1.3f64;
    for _ in 0..50 {
        x -= (x * x * x - x - 1.0) / (3.0 * x * x - 1.0);
    }
    x
}

/// The cat map restricted to the grid `(1/N) Z^2`, used as an oracle whose
/// space is the grid itself. Grid arithmetic is done on integer indices.
#[derive(Clone, Debug)]
pub struct GridCatOracle {
    pub n: usize,
    anchor_seed: Option<Point>,
}

pub fn grid_cat_oracle(n: usize) -> Result<GridCatOracle> {
    if n == 0 {
        return Err(usage("grid size must be positive"));
    }
    Ok(GridCatOracle { n, anchor_seed: None })
}

impl GridCatOracle {
    fn grid_index(&self, p: &Point) -> Option<(usize, usize)> {
        let n = self.n as f64;
        let (a, b) = ((p.x() * n).round(), (p.y() * n).round());
        let on_grid = (p.x() * n - a).abs() < 1e-9 && (p.y() * n - b).abs() < 1e-9;
        on_grid.then(|| ((a as usize) % self.n, (b as usize) % self.n))
    }

    fn grid_point(&self, a: usize, b: usize) -> Point {
        Point::torus(a as f64 / self.n as f64, b as f64 / self.n as f64)
    }
}

impl SystemOracle for GridCatOracle {
    fn name(&self) -> String {
        format!("grid-cat:{}", self.n)
    }

    fn dim(&self) -> usize {
        2
    }

    fn forward(&self, p: &Point) -> Point {
        match self.grid_index(p) {
            Some((a, b)) => self.grid_point((2 * a + b) % self.n, (a + b) % self.n),
            None => CatMap::default().forward(p),
        }
    }

    fn inverse(&self, p: &Point) -> Point {
        match self.grid_index(p) {
            Some((a, b)) => self.grid_point((a + self.n - b) % self.n, (2 * b + self.n - a) % self.n),
            None => CatMap::default().inverse(p),
        }
    }

    /// The whole grid in row-major order, whatever `count` and `seed` are.
    fn sample(&self, _count: usize, _seed: u64) -> Vec<Point> {
        (0..self.n * self.n)
            .map(|k| self.grid_point(k / self.n, k % self.n))
            .collect()
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(cat_expansion())
    }

    fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::GridCat {
            n: self.n,
            anchor_seed: self.anchor_seed,
        }
    }
}

/// `[x, f(x), ..., f^n(x)]`.
pub fn orbit_segment(system: &dyn SystemOracle, x: Point, n: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = x;
    out.push(p);
    for _ in 0..n {
        p = system.forward(&p);
        out.push(p);
    }
    out
}

/// Largest `d(f^-1(f(x)), x)` and `d(f(f^-1(x)), x)` over the given points.
pub fn inverse_defect(system: &dyn SystemOracle, points: &[Point]) -> f64 {
    points
        .iter()
        .map(|p| {
            let a = system.distance(&system.inverse(&system.forward(p)), p);
            let b = system.distance(&system.forward(&system.inverse(p)), p);
            a.max(b)
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Finite systems

/// A finite metric space together with a permutation of its points.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDynSystem {
    space: FiniteMetricSpace,
    perm: Vec<usize>,
}

impl FiniteDynSystem {
    pub fn new(space: FiniteMetricSpace, perm: Vec<usize>) -> Result<Self> {
        check_permutation(&perm, space.n())?;
        Ok(FiniteDynSystem { space, perm })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn iterate(&self, mut i: usize, k: usize) -> usize {
        for _ in 0..k {
            i = self.perm[i];
        }
        i
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    /// Cycle decomposition; each cycle starts at its smallest index, cycles in
    /// order of their first element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = self.perm[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Relabeled copy: new point `k` is old point `order[k]`.
    pub fn relabeled(&self, order: &[usize]) -> Result<Self> {
        let space = self.space.permuted(order)?;
        let mut new_index = vec![0; order.len()];
        for (k, &o) in order.iter().enumerate() {
            new_index[o] = k;
        }
        let perm = order.iter().map(|&o| new_index[self.perm[o]]).collect();
        FiniteDynSystem::new(space, perm)
    }
}

/// A seeded uniformly random order of `0..n`, for [`FiniteDynSystem::relabeled`].
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Cat map on the `N x N` grid: point `a * N + b` is `(a / N, b / N)`.
pub fn grid_cat_system(n: usize) -> Result<FiniteDynSystem> {
    if n == 0 {
        return Err(usage("grid size must be positive"));
    }
    let points = (0..n * n)
        .map(|k| Point::torus((k / n) as f64 / n as f64, (k % n) as f64 / n as f64))
        .collect();
    let space = FiniteMetricSpace::embedded(PointCloud::new(points), 0.0)?;
    let perm = (0..n * n)
        .map(|k| {
            let (a, b) = (k / n, k % n);
            ((2 * a + b) % n) * n + (a + b) % n
        })
        .collect();
    FiniteDynSystem::new(space, perm)
}

/// Exchange document for finite systems: a metric space document plus `perm`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSystemDoc {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub perm: Vec<usize>,
}

impl Serialize for FiniteDynSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let MetricSpaceDoc { n, dist, embedding, labels } = MetricSpaceDoc::from(&self.space);
        FiniteSystemDoc {
            n,
            dist,
            embedding,
            labels,
            perm: self.perm.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteDynSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let FiniteSystemDoc { n, dist, embedding, labels, perm } = FiniteSystemDoc::deserialize(d)?;
        let space = FiniteMetricSpace::try_from(MetricSpaceDoc { n, dist, embedding, labels })
            .map_err(serde::de::Error::custom)?;
        FiniteDynSystem::new(space, perm).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Descriptors

/// Structured description of a built-in system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDescriptor {
    Rotation {
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor_seed: Option<Point>,
    },
    Cat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor_seed: Option<Point>,
    },
    GridCat {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor_seed: Option<Point>,
    },
}

impl SystemDescriptor {
    /// Parses the short forms `rotation`, `rotation:<theta>`, `golden`, `cat`,
    /// `cat-fixed-seed` and `grid-cat:<N>`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let bad = || usage(format!("unknown system {s:?}; try rotation, rotation:<theta>, cat, cat-fixed-seed, grid-cat:<N>"));
        match (head, arg) {
            ("rotation" | "golden", None) => Ok(SystemDescriptor::Rotation {
                theta: golden_theta(),
                anchor_seed: None,
            }),
            ("rotation", Some(t)) => {
                let theta: f64 = t.parse().map_err(|_| usage(format!("bad rotation number {t:?}")))?;
                if !theta.is_finite() {
                    return Err(bad());
                }
                Ok(SystemDescriptor::Rotation {
                    theta: wrap_unit(theta),
                    anchor_seed: None,
                })
            }
            ("cat", None) => Ok(SystemDescriptor::Cat { anchor_seed: None }),
            ("cat-fixed-seed", None) => Ok(SystemDescriptor::Cat {
                anchor_seed: Some(Point::torus(0.0, 0.0)),
            }),
            ("grid-cat" | "grid_cat", Some(n)) => {
                let n: usize = n.parse().map_err(|_| usage(format!("bad grid size {n:?}")))?;
                if n == 0 {
                    return Err(usage("grid size must be positive"));
                }
                Ok(SystemDescriptor::GridCat { n, anchor_seed: None })
            }
            _ => Err(bad()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn SystemOracle>> {
        let check_seed = |seed: &Option<Point>, dim: usize| -> Result<()> {
            match seed {
                Some(p) if p.dim() != dim => Err(Error::Data(format!("anchor seed must have {dim} coordinate(s)"))),
                _ => Ok(()),
            }
        };
        Ok(match self {
            SystemDescriptor::Rotation { theta, anchor_seed } => {
                check_seed(anchor_seed, 1)?;
                if !(theta.is_finite() && (0.0..1.0).contains(theta)) {
                    return Err(Error::Data(format!("rotation number {theta} outside [0, 1)")));
                }
                Box::new(CircleRotation {
                    theta: *theta,
                    anchor_seed: *anchor_seed,
                })
            }
            SystemDescriptor::Cat { anchor_seed } => {
                check_seed(anchor_seed, 2)?;
                Box::new(CatMap {
                    anchor_seed: *anchor_seed,
                })
            }
            SystemDescriptor::GridCat { n, anchor_seed } => {
                check_seed(anchor_seed, 2)?;
                let mut g = grid_cat_oracle(*n).map_err(|e| Error::Data(e.to_string()))?;
                g.anchor_seed = *anchor_seed;
                Box::new(g)
            }
        })
    }

    /// Fixed orbit seed for anchor searches, disabling the fallback to net points.
    pub fn anchor_seed(&self) -> Option<Point> {
        match self {
            SystemDescriptor::Rotation { anchor_seed, .. }
            | SystemDescriptor::Cat { anchor_seed }
            | SystemDescriptor::GridCat { anchor_seed, .. } => *anchor_seed,
        }
    }

    /// The exact finite system behind a descriptor, when there is one.
    pub fn finite_system(&self) -> Option<Result<FiniteDynSystem>> {
        match self {
            SystemDescriptor::GridCat { n, .. } => Some(grid_cat_system(*n)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_examples() {
        let id = circle_rotation(0.0);
        for p in id.sample(50, 3) {
            assert_eq!(id.forward(&p), p);
        }
        let r = circle_rotation(0.4);
        let orbit = orbit_segment(&r, Point::circle(0.0), 5);
        let expected = [0.0, 0.4, 0.8, 0.2, 0.6, 0.0];
        assert_eq!(orbit.len(), 6);
        for (p, e) in orbit.iter().zip(expected) {
            assert!(torus_distance(p, &Point::circle(e)) < 1e-12, "{p:?} vs {e}");
        }
        assert_eq!(orbit_segment(&r, Point::circle(0.3), 0), vec![Point::circle(0.3)]);
    }

    #[test]
    fn cat_map_examples() {
        let cat = torus_cat_map();
        assert_eq!(cat.forward(&Point::torus(0.0, 0.0)), Point::torus(0.0, 0.0));
        assert_eq!(cat.forward(&Point::torus(0.5, 0.5)), Point::torus(0.5, 0.0));
        let orbit = orbit_segment(&cat, Point::torus(0.0, 0.0), 7);
        assert!(orbit.iter().all(|p| *p == Point::torus(0.0, 0.0)));
        assert!((cat.lipschitz().unwrap() - 2.618033988749895).abs() < 1e-12);
    }

    #[test]
    fn inverses_hold_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts1: Vec<Point> = (0..1000).map(|_| Point::circle(rng.gen())).collect();
        let pts2: Vec<Point> = (0..1000).map(|_| Point::torus(rng.gen(), rng.gen())).collect();
        assert!(inverse_defect(&circle_rotation(golden_theta()), &pts1) <= 1e-12);
        assert!(inverse_defect(&torus_cat_map(), &pts2) <= 1e-12);
        let grid = grid_cat_oracle(16).unwrap();
        assert_eq!(inverse_defect(&grid, &grid.sample(0, 0)), 0.0);
    }

    #[test]
    fn rotation_is_an_isometry_on_samples() {
        let r = circle_rotation(golden_theta());
        let pts = r.sample(200, 5);
        for a in &pts {
            for b in &pts {
                let before = torus_distance(a, b);
                let after = torus_distance(&r.forward(a), &r.forward(b));
                assert!((before - after).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let r = circle_rotation(0.3);
        assert_eq!(r.sample(100, 9), r.sample(100, 9));
        assert_ne!(r.sample(100, 9), r.sample(100, 10));
        let c = torus_cat_map();
        assert_eq!(c.sample(100, 9), c.sample(100, 9));
    }

    #[test]
    fn grid_cat_small_cases() {
        let one = grid_cat_system(1).unwrap();
        assert_eq!(one.perm(), &[0]);
        let two = grid_cat_system(2).unwrap();
        // (0,0)->(0,0), (0,1/2)->(1/2,1/2), (1/2,0)->(0,1/2), (1/2,1/2)->(1/2,0)
        assert_eq!(two.perm(), &[0, 3, 1, 2]);
        assert!(grid_cat_system(0).is_err());
    }

    #[test]
    fn grid_cat_inverse_matrix_undoes_perm() {
        for n in 2..=16 {
            let sys = grid_cat_system(n).unwrap();
            let inv: Vec<usize> = (0..n * n)
                .map(|k| {
                    let (a, b) = (k / n, k % n);
                    ((a + n - b) % n) * n + (2 * b + n - a) % n
                })
                .collect();
            for k in 0..n * n {
                assert_eq!(inv[sys.apply(k)], k);
            }
        }
    }

    #[test]
    fn grid_oracle_matches_grid_system() {
        let oracle = grid_cat_oracle(8).unwrap();
        let sys = grid_cat_system(8).unwrap();
        let pts = oracle.sample(0, 0);
        let (cloud, _) = sys.space().embedding().unwrap();
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(oracle.forward(p), cloud.points[sys.apply(k)]);
        }
    }

    #[test]
    fn cycles_and_relabel() {
        let sys = grid_cat_system(4).unwrap();
        let total: usize = sys.cycles().iter().map(Vec::len).sum();
        assert_eq!(total, 16);
        let order: Vec<usize> = (0..16).rev().collect();
        let re = sys.relabeled(&order).unwrap();
        for k in 0..16 {
            // new k is old order[k]; its image is the new label of the old image
            assert_eq!(order[re.apply(k)], sys.apply(order[k]));
        }
    }

    #[test]
    fn descriptor_parsing_and_serde() {
        assert_eq!(
            SystemDescriptor::parse_short("rotation:0.4").unwrap(),
            SystemDescriptor::Rotation { theta: 0.4, anchor_seed: None }
        );
        assert_eq!(
            SystemDescriptor::parse_short("cat-fixed-seed").unwrap().anchor_seed(),
            Some(Point::torus(0.0, 0.0))
        );
        assert!(SystemDescriptor::parse_short("henon").is_err());
        assert!(SystemDescriptor::parse_short("grid-cat:0").is_err());
        let d: SystemDescriptor = serde_json::from_str(r#"{"kind":"grid_cat","n":32}"#).unwrap();
        assert_eq!(d, SystemDescriptor::GridCat { n: 32, anchor_seed: None });
        assert!(serde_json::from_str::<SystemDescriptor>(r#"{"kind":"cat","bogus":1}"#).is_err());
        let text = serde_json::to_string(&SystemDescriptor::parse_short("cat-fixed-seed").unwrap()).unwrap();
        assert_eq!(text, r#"{"kind":"cat","anchor_seed":[0.0,0.0]}"#);
    }

    #[test]
    fn finite_system_document() {
        let sys = grid_cat_system(3).unwrap();
        let text = serde_json::to_string(&sys).unwrap();
        let back: FiniteDynSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(sys, back);
        let bad = r#"{"n":2,"dist":[0,1,1,0],"perm":[0,0]}"#;
        assert!(serde_json::from_str::<FiniteDynSystem>(bad).is_err());
        let ok = r#"{"n":2,"dist":[0,1,1,0],"perm":[1,0]}"#;
        assert_eq!(serde_json::from_str::<FiniteDynSystem>(ok).unwrap().perm(), &[1, 0]);
    }
}
