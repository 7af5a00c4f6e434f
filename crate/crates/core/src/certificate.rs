//! Approximation certificates: the serialized construction and an independent
//! re-measurement of every inequality it has to satisfy.
//!
//! The measurement routine [`measure`] only looks at the serialized pieces
//! (sample, net, blocks, `Y` with its metric and permutation, `q`, `j`) and at
//! the oracle rebuilt from the system descriptor. Certification at construction
//! time and offline verification both call it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{SystemDescriptor, SystemOracle};
use crate::error::{Error, Result};
use crate::isometry::{distortion, par_max, surjectivity_defect, PointMap};
use crate::metric::{directed_hausdorff, FiniteMetricSpace, Metric};
use crate::point::{torus_distance, Point, PointCloud};

pub const CERTIFICATE_FORMAT: &str = "ghdyn-certificate/1";

/// Rounding allowance on the one non-strict inequality, `|rho - d(q, q)| <= alpha`.
pub const DISTORTION_SLACK: f64 = 1e-12;

/// Allowance when comparing recomputed orbit points with serialized ones.
pub const ORBIT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Less,
    AtMost,
}

/// One named inequality with its achieved value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    /// The inequality in words, e.g. `d_H(q(Y), X) < 2 alpha`.
    pub bound: String,
    pub achieved: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, bound: &str, achieved: f64, threshold: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::Less => achieved < threshold,
            Comparison::AtMost => achieved <= threshold,
        };
        Check {
            name: name.to_string(),
            bound: bound.to_string(),
            achieved,
            threshold,
            comparison,
            passed,
        }
    }

    pub fn to_error(&self) -> Error {
        Error::CertificationFailure {
            check: self.name.clone(),
            tag: self.bound.clone(),
            achieved: self.achieved,
            threshold: self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparison {
            Comparison::Less => "<",
            Comparison::AtMost => "<=",
        };
        write!(
            f,
            "{:<5} {:<14} {:.6e} {op} {:.6e}   ({})",
            if self.passed { "ok" } else { "FAIL" },
            self.name,
            self.achieved,
            self.threshold,
            self.bound
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSource {
    Lipschitz,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRecord {
    pub sample_size: usize,
    pub seed: u64,
    pub max_orbit_search: u64,
    pub beta_safety: f64,
    pub alpha_fraction: f64,
}

/// One closed orbit segment `a, f(a), ..., f^N(a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockRecord {
    /// Position in the net list.
    pub net_index: usize,
    pub anchor: Point,
    /// Iterations from the orbit seed to the anchor.
    pub hit_time: u64,
    /// `N`; the block has `N + 1` points.
    pub length: usize,
    /// `d(f^{N+1}(a), a)`.
    pub closing_gap: f64,
}

/// `Y` in factored form: `rho(u, v) = d(p_u, p_v) + separation * [u != v]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSystemRecord {
    pub rho_points: Vec<Point>,
    pub separation: f64,
    pub perm: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub format: String,
    pub system: SystemDescriptor,
    pub config: ConfigRecord,
    pub delta: f64,
    pub beta: f64,
    pub beta_source: BetaSource,
    pub alpha: f64,
    pub sample: Vec<Point>,
    /// Sample indices of the net points.
    pub net: Vec<usize>,
    pub blocks: Vec<BlockRecord>,
    pub y: FiniteSystemRecord,
    /// `q(u)` for every point of `Y`.
    pub q: Vec<Point>,
    /// `j(x)` for every sample point.
    pub j: Vec<usize>,
    /// `j(f(x))` for every sample point.
    pub j_of_f: Vec<usize>,
    pub checks: Vec<Check>,
    pub gh0_bound: f64,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn y_len(&self) -> usize {
        self.y.perm.len()
    }

    /// The finite system `(Y, rho, g)`.
    pub fn finite_system(&self) -> Result<crate::dynamics::FiniteDynSystem> {
        let space = FiniteMetricSpace::embedded(PointCloud::new(self.y.rho_points.clone()), self.y.separation)?;
        crate::dynamics::FiniteDynSystem::new(space, self.y.perm.clone())
    }
}

/// Everything [`measure`] reads.
pub struct MeasureInput<'a> {
    pub system: &'a dyn SystemOracle,
    pub delta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub sample: &'a [Point],
    pub net: &'a [usize],
    pub blocks: &'a [BlockRecord],
    pub y: &'a FiniteSystemRecord,
    pub q: &'a [Point],
    pub j: &'a [usize],
    pub j_of_f: &'a [usize],
}

/// Largest `d(f(x), f(y))` over sample pairs with `d(x, y) < beta`.
pub fn empirical_modulus(system: &dyn SystemOracle, sample: &[Point], images: &[Point], beta: f64) -> f64 {
    let n = sample.len();
    par_max(n, |a| {
        let mut worst = 0.0f64;
        for b in a + 1..n {
            if system.distance(&sample[a], &sample[b]) < beta {
                worst = worst.max(system.distance(&images[a], &images[b]));
            }
        }
        worst
    })
}

/// Structural defects of `Y`: sizes, block layout and the within-block shift.
fn structure_violations(inp: &MeasureInput<'_>) -> usize {
    let y = inp.y;
    let n = y.perm.len();
    let mut bad = 0;
    if y.rho_points.len() != n || inp.q.len() != n {
        bad += 1;
    }
    if inp.j.len() != inp.sample.len() || inp.j_of_f.len() != inp.sample.len() {
        bad += 1;
    }
    bad += inp.j.iter().chain(inp.j_of_f).filter(|&&u| u >= n).count();
    bad += inp.net.iter().filter(|&&x| x >= inp.sample.len()).count();
    bad += inp.blocks.iter().filter(|b| b.net_index >= inp.net.len()).count();
    if !(y.separation > 0.0 && y.separation.is_finite()) {
        bad += 1;
    }
    let total: usize = inp.blocks.iter().map(|b| b.length + 1).sum();
    if total != n {
        return bad + 1;
    }
    let mut start = 0;
    for b in inp.blocks {
        for k in 0..=b.length {
            let expected = if k == b.length { start } else { start + k + 1 };
            if y.perm[start + k] != expected {
                bad += 1;
            }
        }
        start += b.length + 1;
    }
    bad
}

/// Index of the first `Y` point of every block.
fn block_starts(blocks: &[BlockRecord]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(blocks.len());
    let mut s = 0;
    for b in blocks {
        starts.push(s);
        s += b.length + 1;
    }
    starts
}

/// Point cloud `q(Y)` followed by the sample, for Hausdorff distances between them.
struct Joined<'a> {
    a: &'a [Point],
    b: &'a [Point],
}

impl Joined<'_> {
    fn at(&self, i: usize) -> &Point {
        if i < self.a.len() {
            &self.a[i]
        } else {
            &self.b[i - self.a.len()]
        }
    }
}

impl Metric for Joined<'_> {
    fn len(&self) -> usize {
        self.a.len() + self.b.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        torus_distance(self.at(i), self.at(j))
    }
}

/// Measures every inequality of the construction. Checks come in a fixed
/// order; when the structure of `Y` is inconsistent the list stops there.
pub fn measure(inp: &MeasureInput<'_>) -> Vec<Check> {
    use Comparison::{AtMost, Less};
    let (delta, alpha, beta) = (inp.delta, inp.alpha, inp.beta);
    let f = inp.system;
    let mut checks = Vec::new();

    let images: Vec<Point> = inp.sample.iter().map(|x| f.forward(x)).collect();
    checks.push(Check::new(
        "beta_modulus",
        "d(x, y) < beta implies d(f(x), f(y)) < delta/3 on the sample",
        empirical_modulus(f, inp.sample, &images, beta),
        delta / 3.0,
        Less,
    ));
    checks.push(Check::new(
        "alpha_choice",
        "alpha < min(delta/9, beta/2)",
        alpha,
        (delta / 9.0).min(beta / 2.0),
        Less,
    ));
    let broken = structure_violations(inp);
    checks.push(Check::new(
        "y_structure",
        "blocks tile Y and g shifts each block cyclically",
        broken as f64,
        0.0,
        AtMost,
    ));
    if broken > 0 {
        return checks;
    }

    let starts = block_starts(inp.blocks);
    let n_y = inp.q.len();
    let mut orbit_gap = 0.0f64;
    for (b, &s) in inp.blocks.iter().zip(&starts) {
        orbit_gap = orbit_gap.max(torus_distance(&inp.q[s], &b.anchor));
        for k in 0..b.length {
            orbit_gap = orbit_gap.max(torus_distance(&inp.q[s + k + 1], &f.forward(&inp.q[s + k])));
        }
    }
    checks.push(Check::new(
        "q_orbit",
        "q(i, 0) = a_i and q(i, k+1) = f(q(i, k))",
        orbit_gap,
        ORBIT_TOLERANCE,
        AtMost,
    ));

    let sample_cloud = PointCloud::new(inp.sample.to_vec());
    let all: Vec<usize> = (0..inp.sample.len()).collect();
    checks.push(Check::new(
        "net_cover",
        "d_H(net, X) < alpha",
        directed_hausdorff(&sample_cloud, &all, inp.net),
        alpha,
        Less,
    ));
    let anchor_dist = inp
        .blocks
        .iter()
        .map(|b| torus_distance(&b.anchor, &inp.sample[inp.net[b.net_index]]))
        .fold(0.0, f64::max);
    checks.push(Check::new("anchor_dist", "d(a_i, x_i) < alpha", anchor_dist, alpha, Less));
    let closing = inp
        .blocks
        .iter()
        .zip(&starts)
        .map(|(b, &s)| torus_distance(&f.forward(&inp.q[s + b.length]), &inp.q[s]))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "closing_gaps",
        "d(f^(N_i+1)(a_i), a_i) < delta/3",
        closing,
        delta / 3.0,
        Less,
    ));

    // q : Y -> X
    let joined = Joined { a: inp.q, b: inp.sample };
    let q_idx: Vec<usize> = (0..n_y).collect();
    let s_idx: Vec<usize> = (n_y..n_y + inp.sample.len()).collect();
    let q_surj = directed_hausdorff(&joined, &s_idx, &q_idx).max(directed_hausdorff(&joined, &q_idx, &s_idx));
    checks.push(Check::new("q_surj", "d_H(q(Y), X) < 2 alpha", q_surj, 2.0 * alpha, Less));

    let y_space = FiniteMetricSpace::embedded(PointCloud::new(inp.y.rho_points.clone()), inp.y.separation)
        .expect("separation checked above");
    let q_cloud = PointCloud::new(inp.q.to_vec());
    let q_map = PointMap::new(&y_space, &q_cloud, q_idx.clone()).expect("sizes checked above");
    let q_dist = distortion(&q_map);
    checks.push(Check::new(
        "q_distortion",
        "|d(q(u), q(v)) - rho(u, v)| <= alpha",
        q_dist,
        alpha + DISTORTION_SLACK,
        AtMost,
    ));
    let perm = &inp.y.perm;
    let q_c0 = par_max(n_y, |u| torus_distance(&inp.q[perm[u]], &f.forward(&inp.q[u])));
    checks.push(Check::new("q_c0", "d(q(g(u)), f(q(u))) < delta/3", q_c0, delta / 3.0, Less));

    // j : X -> Y
    let pointwise = par_max(inp.sample.len(), |x| {
        torus_distance(&inp.sample[x], &inp.q[inp.j[x]]).max(torus_distance(&images[x], &inp.q[inp.j_of_f[x]]))
    });
    checks.push(Check::new(
        "j_pointwise",
        "d(x, q(j(x))) < 2 alpha on X and f(X)",
        pointwise,
        2.0 * alpha,
        Less,
    ));
    let j_map = PointMap::new(&sample_cloud, &y_space, inp.j.to_vec()).expect("indices checked above");
    checks.push(Check::new(
        "j_distortion",
        "|rho(j(x), j(x')) - d(x, x')| < 5 alpha",
        distortion(&j_map),
        5.0 * alpha,
        Less,
    ));
    let j_surj = surjectivity_defect(&j_map);
    checks.push(Check::new("j_surj", "d_H(j(X), Y) < 3 alpha", j_surj, 3.0 * alpha, Less));
    let j_c0 = par_max(inp.sample.len(), |x| y_space.dist(inp.j_of_f[x], perm[inp.j[x]]));
    checks.push(Check::new("j_c0", "rho(j(f(x)), g(j(x))) < delta", j_c0, delta, Less));

    let gh0 = q_dist.max(q_surj).max(q_c0).max(distortion(&j_map)).max(j_surj).max(j_c0);
    checks.push(Check::new(
        "gh0_bound",
        "max of both isometry constants and both conjugacy defects < delta",
        gh0,
        delta,
        Less,
    ));
    checks
}

/// Re-measures a parsed certificate against its own system descriptor.
pub fn verify(cert: &Certificate) -> Result<Vec<Check>> {
    if cert.format != CERTIFICATE_FORMAT {
        return Err(Error::Data(format!("unsupported certificate format {:?}", cert.format)));
    }
    let system = cert.system.build()?;
    let dim = system.dim();
    let all_points = cert
        .sample
        .iter()
        .chain(&cert.y.rho_points)
        .chain(&cert.q)
        .chain(cert.blocks.iter().map(|b| &b.anchor));
    if all_points.into_iter().any(|p| p.dim() != dim) {
        return Err(Error::Data(format!("certificate points must have {dim} coordinate(s)")));
    }
    if cert.sample.is_empty() || cert.net.is_empty() || cert.blocks.is_empty() {
        return Err(Error::Data("certificate has an empty sample, net or block list".into()));
    }
    for v in [cert.delta, cert.beta, cert.alpha] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Data(format!("constants must be positive reals, found {v}")));
        }
    }
    Ok(measure(&MeasureInput {
        system: system.as_ref(),
        delta: cert.delta,
        beta: cert.beta,
        alpha: cert.alpha,
        sample: &cert.sample,
        net: &cert.net,
        blocks: &cert.blocks,
        y: &cert.y,
        q: &cert.q,
        j: &cert.j,
        j_of_f: &cert.j_of_f,
    }))
}

/// Parses and verifies; the first failing check becomes the error.
pub fn verify_str(text: &str) -> Result<Vec<Check>> {
    let cert: Certificate =
        serde_json::from_str(text).map_err(|e| Error::Data(format!("malformed certificate: {e}")))?;
    let checks = verify(&cert)?;
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(c.to_error()),
        None => Ok(checks),
    }
}
