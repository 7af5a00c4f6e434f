//! Finite periodic models of a homeomorphism: orbit blocks around a covering
//! net, glued into a permutation of a finite metric space.

use serde::{Deserialize, Serialize};

use crate::certificate::{
    empirical_modulus, measure, BetaSource, BlockRecord, Certificate, Check, ConfigRecord, FiniteSystemRecord,
    MeasureInput, CERTIFICATE_FORMAT,
};
use crate::dynamics::{FiniteDynSystem, SystemOracle};
use crate::error::{usage, Error, Result};
use crate::metric::covering_net;
use crate::point::{torus_distance, Point, PointCloud};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximationConfig {
    pub delta: f64,
    pub sample_size: usize,
    pub seed: u64,
    pub max_orbit_search: u64,
    pub beta_safety: f64,
    pub alpha_fraction: f64,
    /// Fixed orbit seed for every anchor search; disables the net-point fallback.
    #[serde(default)]
    pub anchor_seed: Option<Point>,
}

impl ApproximationConfig {
    pub fn new(delta: f64) -> Self {
        ApproximationConfig {
            delta,
            sample_size: 2000,
            seed: 1,
            max_orbit_search: 1_000_000,
            beta_safety: 0.9,
            alpha_fraction: 0.5,
            anchor_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(usage(format!("delta must be a positive real, got {}", self.delta)));
        }
        if self.sample_size == 0 || self.max_orbit_search == 0 {
            return Err(usage("sample size and orbit search cap must be positive"));
        }
        for (name, v) in [("beta_safety", self.beta_safety), ("alpha_fraction", self.alpha_fraction)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(usage(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    fn record(&self) -> ConfigRecord {
        ConfigRecord {
            sample_size: self.sample_size,
            seed: self.seed,
            max_orbit_search: self.max_orbit_search,
            beta_safety: self.beta_safety,
            alpha_fraction: self.alpha_fraction,
        }
    }
}

/// Smallest grid exponent tried by the empirical modulus search, `2^(-k/4)`.
const BETA_GRID_STEPS: u32 = 200;

/// A scale `beta` such that sampled pairs closer than `beta` have images closer
/// than `delta / 3`, already multiplied by `beta_safety`.
pub fn continuity_beta(
    system: &dyn SystemOracle,
    delta: f64,
    sample: &[Point],
    beta_safety: f64,
) -> Result<(f64, BetaSource)> {
    if sample.is_empty() || !(delta > 0.0) {
        return Err(usage("continuity modulus needs a nonempty sample and delta > 0"));
    }
    if let Some(l) = system.lipschitz() {
        return Ok((beta_safety * (delta / 3.0) / l, BetaSource::Lipschitz));
    }
    // Closest pair whose images are already delta/3 apart; every grid value at or
    // below it is admissible.
    let images: Vec<Point> = sample.iter().map(|x| system.forward(x)).collect();
    let mut limit = f64::INFINITY;
    for a in 0..sample.len() {
        for b in a + 1..sample.len() {
            if system.distance(&images[a], &images[b]) >= delta / 3.0 {
                limit = limit.min(system.distance(&sample[a], &sample[b]));
            }
        }
    }
    for k in 0..=BETA_GRID_STEPS {
        let beta = 2f64.powf(-(k as f64) / 4.0);
        if beta <= limit && beta > 0.0 {
            let beta = beta * beta_safety;
            debug_assert!(empirical_modulus(system, sample, &images, beta) < delta / 3.0);
            return Ok((beta, BetaSource::Empirical));
        }
    }
    Err(Error::CertificationFailure {
        check: "beta_modulus".into(),
        tag: "d(x, y) < beta implies d(f(x), f(y)) < delta/3 on the sample".into(),
        achieved: limit,
        threshold: 2f64.powf(-(BETA_GRID_STEPS as f64) / 4.0),
    })
}

pub fn choose_alpha(delta: f64, beta: f64, alpha_fraction: f64) -> f64 {
    alpha_fraction * (delta / 9.0).min(beta / 2.0)
}

fn no_recurrence(target: Point, what: &'static str, cap: u64) -> Error {
    Error::NoRecurrence {
        net_index: 0,
        target,
        what,
        cap,
    }
}

/// Lazily extended forward orbit of one seed.
struct OrbitCache<'a> {
    system: &'a dyn SystemOracle,
    points: Vec<Point>,
    /// Set once the orbit returns exactly to its seed; nothing new can appear.
    period: Option<usize>,
}

impl<'a> OrbitCache<'a> {
    fn new(system: &'a dyn SystemOracle, seed: Point) -> Self {
        OrbitCache {
            system,
            points: vec![seed],
            period: None,
        }
    }

    /// First time `t <= cap` with `f^t(seed)` in the open ball `B(x, alpha)`.
    fn hit(&mut self, x: &Point, alpha: f64, cap: u64) -> Option<(Point, u64)> {
        let mut t = 0usize;
        loop {
            if t as u64 > cap || self.period.is_some_and(|p| t >= p) {
                return None;
            }
            if t == self.points.len() {
                let next = self.system.forward(&self.points[t - 1]);
                if next == self.points[0] {
                    self.period = Some(t);
                    return None;
                }
                self.points.push(next);
            }
            let p = self.points[t];
            if self.system.distance(&p, x) < alpha {
                return Some((p, t as u64));
            }
            t += 1;
        }
    }
}

/// Iterates forward from `seed` until the orbit enters `B(x_i, alpha)`.
pub fn find_block_anchor(
    system: &dyn SystemOracle,
    x_i: &Point,
    alpha: f64,
    seed: &Point,
    cap: u64,
) -> Result<(Point, u64)> {
    OrbitCache::new(system, *seed)
        .hit(x_i, alpha, cap)
        .ok_or_else(|| no_recurrence(*x_i, "anchor hit", cap))
}

/// Smallest `n <= cap` with `d(f^n(a), f^-1(a)) < beta`.
pub fn find_return_time(system: &dyn SystemOracle, a: &Point, beta: f64, cap: u64) -> Result<u64> {
    let target = system.inverse(a);
    let mut p = *a;
    for n in 0..=cap {
        if system.distance(&p, &target) < beta {
            return Ok(n);
        }
        p = system.forward(&p);
    }
    Err(no_recurrence(*a, "return to the preimage", cap))
}

/// One orbit block `a, f(a), ..., f^N(a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitBlock {
    pub net_index: usize,
    pub hit_time: u64,
    pub points: Vec<Point>,
    pub closing_gap: f64,
}

impl OrbitBlock {
    pub fn from_anchor(system: &dyn SystemOracle, net_index: usize, anchor: Point, hit_time: u64, length: usize) -> Self {
        let mut points = Vec::with_capacity(length + 1);
        points.push(anchor);
        for k in 0..length {
            points.push(system.forward(&points[k]));
        }
        let closing_gap = system.distance(&system.forward(&points[length]), &anchor);
        OrbitBlock {
            net_index,
            hit_time,
            points,
            closing_gap,
        }
    }

    pub fn anchor(&self) -> &Point {
        &self.points[0]
    }

    /// `N`, one less than the number of points.
    pub fn length(&self) -> usize {
        self.points.len() - 1
    }

    fn record(&self) -> BlockRecord {
        BlockRecord {
            net_index: self.net_index,
            anchor: *self.anchor(),
            hit_time: self.hit_time,
            length: self.length(),
            closing_gap: self.closing_gap,
        }
    }
}

/// `Y` as the disjoint union of the blocks with `rho = d(q, q) + alpha` off the
/// diagonal, `g` shifting each block cyclically, and `q` the orbit points.
pub fn build_finite_system(blocks: &[OrbitBlock], alpha: f64) -> Result<(FiniteDynSystem, Vec<Point>)> {
    if blocks.is_empty() {
        return Err(usage("no orbit blocks"));
    }
    let q: Vec<Point> = blocks.iter().flat_map(|b| b.points.iter().copied()).collect();
    let mut perm = Vec::with_capacity(q.len());
    let mut start = 0;
    for b in blocks {
        let len = b.points.len();
        perm.extend((1..len).map(|k| start + k));
        perm.push(start);
        start += len;
    }
    let space = crate::metric::FiniteMetricSpace::embedded(PointCloud::new(q.clone()), alpha)?;
    Ok((FiniteDynSystem::new(space, perm)?, q))
}

/// `j(x)`: the `Y` point whose `q`-image is nearest to `x`, lowest index on ties.
/// Every point must land strictly within `2 alpha`.
pub fn build_backward_map(points: &[Point], q_image: &[Point], alpha: f64) -> Result<Vec<usize>> {
    let cloud = PointCloud::new(q_image.to_vec());
    points
        .iter()
        .map(|x| {
            let (u, d) = cloud.nearest(x).ok_or_else(|| usage("empty q image"))?;
            if d < 2.0 * alpha {
                Ok(u)
            } else {
                Err(Error::CoverageGap {
                    point: *x,
                    distance: d,
                    bound: 2.0 * alpha,
                })
            }
        })
        .collect()
}

/// Period of every point under the permutation.
pub fn all_periods(fd: &FiniteDynSystem) -> Vec<usize> {
    let mut period = vec![0; fd.n()];
    for cycle in fd.cycles() {
        for &u in &cycle {
            period[u] = cycle.len();
        }
    }
    period
}

#[derive(Clone, Debug)]
pub struct ApproximationResult {
    pub system: FiniteDynSystem,
    pub blocks: Vec<OrbitBlock>,
    pub certificate: Certificate,
}

impl ApproximationResult {
    pub fn q(&self) -> &[Point] {
        &self.certificate.q
    }

    pub fn j(&self) -> &[usize] {
        &self.certificate.j
    }
}

/// Fails with the first failing check of a measured certificate.
pub fn certify(cert: &Certificate) -> Result<()> {
    match cert.first_failure() {
        Some(c) => Err(c.to_error()),
        None => Ok(()),
    }
}

pub fn approximate(system: &dyn SystemOracle, cfg: &ApproximationConfig) -> Result<ApproximationResult> {
    cfg.validate()?;
    let sample = system.sample(cfg.sample_size, cfg.seed);
    approximate_with_sample(system, cfg, sample)
}

/// Runs the construction on a caller-supplied sample.
pub fn approximate_with_sample(
    system: &dyn SystemOracle,
    cfg: &ApproximationConfig,
    sample: Vec<Point>,
) -> Result<ApproximationResult> {
    let result = construct(system, cfg, sample)?;
    certify(&result.certificate)?;
    Ok(result)
}

/// The construction with its measured checks, whether or not they pass.
pub fn construct(system: &dyn SystemOracle, cfg: &ApproximationConfig, sample: Vec<Point>) -> Result<ApproximationResult> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(usage("empty sample"));
    }
    if let Some(p) = sample.iter().find(|p| p.dim() != system.dim()) {
        return Err(usage(format!("sample point {p:?} does not live on a {}-torus", system.dim())));
    }
    let delta = cfg.delta;
    let (beta, beta_source) = continuity_beta(system, delta, &sample, cfg.beta_safety)?;
    let alpha = choose_alpha(delta, beta, cfg.alpha_fraction);

    let cloud = PointCloud::new(sample.clone());
    let net: Vec<usize> = covering_net(&cloud, alpha)?.net.indices().to_vec();

    let fixed_seed = cfg.anchor_seed.or_else(|| system.descriptor().anchor_seed());
    let mut orbit = OrbitCache::new(system, fixed_seed.unwrap_or(sample[0]));
    let cap = cfg.max_orbit_search;
    let mut blocks = Vec::with_capacity(net.len());
    for (i, &x) in net.iter().enumerate() {
        let x_i = sample[x];
        let tag = |e: Error| match e {
            Error::NoRecurrence { target, what, cap, .. } => Error::NoRecurrence {
                net_index: i,
                target,
                what,
                cap,
            },
            e => e,
        };
        let (anchor, hit_time) = match orbit.hit(&x_i, alpha, cap) {
            Some(hit) => hit,
            None if fixed_seed.is_none() => (x_i, 0),
            None => return Err(tag(no_recurrence(x_i, "anchor hit", cap))),
        };
        let n = find_return_time(system, &anchor, beta, cap).map_err(tag)?;
        blocks.push(OrbitBlock::from_anchor(system, i, anchor, hit_time, n as usize));
    }

    let (fd, q) = build_finite_system(&blocks, alpha)?;
    let images: Vec<Point> = sample.iter().map(|x| system.forward(x)).collect();
    let j = build_backward_map(&sample, &q, alpha)?;
    let j_of_f = build_backward_map(&images, &q, alpha)?;

    let periods = all_periods(&fd);
    let mut start = 0;
    for b in &blocks {
        if periods[start..start + b.points.len()].iter().any(|&p| p != b.points.len()) {
            return Err(usage("block permutation is not a single cycle"));
        }
        start += b.points.len();
    }

    let y = FiniteSystemRecord {
        rho_points: q.clone(),
        separation: alpha,
        perm: fd.perm().to_vec(),
    };
    let block_records: Vec<BlockRecord> = blocks.iter().map(OrbitBlock::record).collect();
    let checks: Vec<Check> = measure(&MeasureInput {
        system,
        delta,
        beta,
        alpha,
        sample: &sample,
        net: &net,
        blocks: &block_records,
        y: &y,
        q: &q,
        j: &j,
        j_of_f: &j_of_f,
    });
    let gh0_bound = checks.iter().find(|c| c.name == "gh0_bound").map_or(f64::INFINITY, |c| c.achieved);
    let certificate = Certificate {
        format: CERTIFICATE_FORMAT.to_string(),
        system: system.descriptor(),
        config: cfg.record(),
        delta,
        beta,
        beta_source,
        alpha,
        sample,
        net,
        blocks: block_records,
        y,
        q,
        j,
        j_of_f,
        checks,
        gh0_bound,
    };
    Ok(ApproximationResult {
        system: fd,
        blocks,
        certificate,
    })
}

/// Largest distance between a point and its nearest neighbour in `points`.
pub fn sample_resolution(points: &[Point]) -> f64 {
    let cloud = PointCloud::new(points.to_vec());
    crate::isometry::par_max(points.len(), |a| {
        (0..points.len())
            .filter(|&b| b != a)
            .map(|b| torus_distance(&cloud.points[a], &cloud.points[b]))
            .fold(f64::INFINITY, f64::min)
    })
}
