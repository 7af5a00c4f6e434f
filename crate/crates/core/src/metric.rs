//! Finite metric spaces, metric validation, Hausdorff distance, covering nets
//! and the augmented metric `pseudo + alpha * [u != v]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::point::{Point, PointCloud};

/// Additive slack for the triangle inequality, absorbing rounding.
pub const METRIC_TOLERANCE: f64 = 1e-12;

/// Reported violations are capped; `ValidationReport::total` still counts all of them.
const MAX_REPORTED_VIOLATIONS: usize = 100_000;

/// A finite, indexed space with a distance function.
pub trait Metric {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diameter(&self) -> f64 {
        let n = self.len();
        let mut diam = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                diam = diam.max(self.dist(i, j));
            }
        }
        diam
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        (**self).dist(i, j)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major `n * n` matrix.
    Dense(Vec<f64>),
    /// `dist(u, v) = torus(p_u, p_v) + separation * [u != v]`.
    Embedded { cloud: PointCloud, separation: f64 },
}

/// Indexed point set with a full symmetric distance function.
///
/// Small spaces store the matrix densely. Spaces obtained by pulling back a torus
/// metric and adding a discrete term keep the factored form, so `dist` is
/// evaluated on demand and no `n * n` allocation is needed.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    storage: Storage,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Builds a dense space, rejecting matrices that are not metrics.
    pub fn from_matrix(n: usize, dist: Vec<f64>) -> Result<Self> {
        let space = Self::from_matrix_unchecked(n, dist)?;
        let report = space.validate();
        if !report.is_metric() {
            return Err(Error::Data(format!("matrix is not a metric: {}", report.summary())));
        }
        Ok(space)
    }

    /// Shape check only; use [`validate_metric`] to inspect the axioms.
    pub fn from_matrix_unchecked(n: usize, dist: Vec<f64>) -> Result<Self> {
        if dist.len() != n * n {
            return Err(usage(format!("distance matrix has {} entries, expected {n}x{n}", dist.len())));
        }
        Ok(FiniteMetricSpace {
            n,
            storage: Storage::Dense(dist),
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(usage("distance rows must form a square matrix"));
        }
        Self::from_matrix(n, rows.concat())
    }

    /// Torus points with `separation` added to every off-diagonal distance.
    pub fn embedded(cloud: PointCloud, separation: f64) -> Result<Self> {
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(usage(format!("separation must be a finite nonnegative real, got {separation}")));
        }
        if let Some(first) = cloud.points.first() {
            if cloud.points.iter().any(|p| p.dim() != first.dim()) {
                return Err(usage("embedded points must share one arity"));
            }
        }
        Ok(FiniteMetricSpace {
            n: cloud.points.len(),
            storage: Storage::Embedded { cloud, separation },
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(usage(format!("{} labels for {} points", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The embedding points and separation, when stored in factored form.
    pub fn embedding(&self) -> Option<(&PointCloud, f64)> {
        match &self.storage {
            Storage::Embedded { cloud, separation } => Some((cloud, *separation)),
            Storage::Dense(_) => None,
        }
    }

    pub fn dense_matrix(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(d) => Some(d),
            Storage::Embedded { .. } => None,
        }
    }

    /// Row-major matrix of all distances.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Embedded { .. } => {
                let n = self.n;
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = self.dist(i, j);
                    }
                }
                out
            }
        }
    }

    /// Relabeled copy: new point `k` is old point `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n)?;
        let storage = match &self.storage {
            Storage::Dense(d) => {
                let n = self.n;
                let mut out = vec![0.0; n * n];
                for (a, &oa) in order.iter().enumerate() {
                    for (b, &ob) in order.iter().enumerate() {
                        out[a * n + b] = d[oa * n + ob];
                    }
                }
                Storage::Dense(out)
            }
            Storage::Embedded { cloud, separation } => Storage::Embedded {
                cloud: PointCloud::new(order.iter().map(|&o| cloud.points[o]).collect()),
                separation: *separation,
            },
        };
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&o| l[o].clone()).collect());
        Ok(FiniteMetricSpace {
            n: self.n,
            storage,
            labels,
        })
    }

    /// Checks all metric axioms; see [`validate_metric`].
    pub fn validate(&self) -> ValidationReport {
        match &self.storage {
            Storage::Dense(d) => validate_matrix(self.n, d),
            Storage::Embedded { cloud, separation } => validate_embedded(cloud, *separation),
        }
    }
}

impl Metric for FiniteMetricSpace {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Embedded { cloud, separation } => {
                if i == j {
                    0.0
                } else {
                    cloud.dist(i, j) + separation
                }
            }
        }
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(usage(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for (i, &p) in perm.iter().enumerate() {
        if p >= n {
            return Err(usage(format!("permutation maps {i} to {p}, outside 0..{n}")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(usage(format!("permutation is not injective: {p} is hit twice")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    NotFinite { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize, forward: f64, backward: f64 },
    /// Off-diagonal entry that is zero or negative.
    NonPositive { i: usize, j: usize, value: f64 },
    /// `dist(i, k) > dist(i, j) + dist(j, k) + tolerance`.
    Triangle { i: usize, j: usize, k: usize, direct: f64, detour: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    /// Number of violations found; exceeds `violations.len()` only when truncated.
    pub total: usize,
}

impl ValidationReport {
    fn new(n: usize) -> Self {
        ValidationReport {
            n,
            tolerance: METRIC_TOLERANCE,
            violations: Vec::new(),
            total: 0,
        }
    }

    fn push(&mut self, v: Violation) {
        self.total += 1;
        if self.violations.len() < MAX_REPORTED_VIOLATIONS {
            self.violations.push(v);
        }
    }

    pub fn is_metric(&self) -> bool {
        self.total == 0
    }

    /// True when every violation is a zero off-diagonal entry.
    pub fn is_pseudometric(&self) -> bool {
        self.violations.len() == self.total
            && self
                .violations
                .iter()
                .all(|v| matches!(v, Violation::NonPositive { value, .. } if *value == 0.0))
    }

    pub fn summary(&self) -> String {
        match self.violations.first() {
            None => "no violations".to_string(),
            Some(v) => format!("{} violation(s), first: {v:?}", self.total),
        }
    }
}

/// Checks the four metric axioms on a finite space and reports every violation
/// with its witness. Violations are data, never errors.
pub fn validate_metric(space: &FiniteMetricSpace) -> ValidationReport {
    space.validate()
}

/// Validates a raw row-major `n * n` matrix.
pub fn validate_matrix(n: usize, d: &[f64]) -> ValidationReport {
    assert_eq!(d.len(), n * n, "matrix must be n x n");
    let mut report = ValidationReport::new(n);
    for i in 0..n {
        for j in 0..n {
            let v = d[i * n + j];
            if !v.is_finite() {
                report.push(Violation::NotFinite { i, j, value: v });
            }
        }
    }
    if !report.is_metric() {
        // Remaining checks are meaningless with non-finite entries.
        return report;
    }
    for i in 0..n {
        let v = d[i * n + i];
        if v != 0.0 {
            report.push(Violation::NonzeroDiagonal { i, value: v });
        }
    }
    let mut symmetric = true;
    for i in 0..n {
        for j in i + 1..n {
            let (f, b) = (d[i * n + j], d[j * n + i]);
            if f != b {
                symmetric = false;
                report.push(Violation::Asymmetric { i, j, forward: f, backward: b });
            }
            for (a, c, v) in [(i, j, f), (j, i, b)] {
                if v <= 0.0 && (a < c || f != b) {
                    report.push(Violation::NonPositive { i: a, j: c, value: v });
                }
            }
        }
    }
    if symmetric {
        triangle_scan_symmetric(n, d, &mut report);
    } else {
        triangle_scan_naive(n, d, &mut report);
    }
    report
}

fn triangle_scan_naive(n: usize, d: &[f64], report: &mut ValidationReport) {
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let direct = d[i * n + k];
                let detour = d[i * n + j] + d[j * n + k];
                if direct > detour + METRIC_TOLERANCE {
                    report.push(Violation::Triangle { i, j, k, direct, detour });
                }
            }
        }
    }
}

#[inline]
fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let v = (x[l] - y[l]).abs();
            acc[l] = if v > acc[l] { v } else { acc[l] };
        }
    }
    let mut m = acc.iter().fold(0.0f64, |m, &v| if v > m { v } else { m });
    for (x, y) in ra.iter().zip(rb) {
        let v = (x - y).abs();
        if v > m {
            m = v;
        }
    }
    m
}

/// For a symmetric matrix, every triangle inequality with middle vertex `j` and
/// first vertex `i` is `|d(i, k) - d(j, k)| <= d(i, j)`, so scanning unordered
/// pairs against whole rows covers all triples. Rows are processed in blocks so
/// that a block of rows stays cached while the other rows stream past it.
fn triangle_scan_symmetric(n: usize, d: &[f64], report: &mut ValidationReport) {
    const BLOCK: usize = 32;
    let row = |i: usize| &d[i * n..(i + 1) * n];
    let mut i0 = 0;
    while i0 < n {
        let i1 = (i0 + BLOCK).min(n);
        for j in i0 + 1..n {
            let rj = row(j);
            for i in i0..i1.min(j) {
                let ri = row(i);
                let dij = ri[j];
                if max_abs_diff(ri, rj) > dij + METRIC_TOLERANCE {
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        // triple (i, j, k): d(i, k) <= d(i, j) + d(j, k)
                        let detour = dij + rj[k];
                        if ri[k] > detour + METRIC_TOLERANCE && i < k {
                            report.push(Violation::Triangle { i, j, k, direct: ri[k], detour });
                        }
                        // triple (j, i, k): d(j, k) <= d(j, i) + d(i, k)
                        let detour = dij + ri[k];
                        if rj[k] > detour + METRIC_TOLERANCE && j < k {
                            report.push(Violation::Triangle { i: j, j: i, k, direct: rj[k], detour });
                        }
                    }
                }
            }
        }
        i0 = i1;
    }
}

/// Validation of the factored form. Indices sharing a torus image are at
/// distance `separation` from each other and every triangle that involves two
/// of them holds whenever `separation >= 0`, so it suffices to check the matrix
/// over distinct images; witnesses are mapped back to representative indices.
fn validate_embedded(cloud: &PointCloud, separation: f64) -> ValidationReport {
    let n = cloud.points.len();
    let mut rep_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut report = ValidationReport::new(n);
    for (u, p) in cloud.points.iter().enumerate() {
        let key: Vec<u64> = p.coords().iter().map(|c| c.to_bits()).collect();
        match rep_of.get(&key) {
            Some(&r) => {
                if separation <= 0.0 {
                    report.push(Violation::NonPositive { i: r, j: u, value: separation });
                }
            }
            None => {
                rep_of.insert(key, u);
                reps.push(u);
            }
        }
    }
    let m = reps.len();
    let mut mat = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            if a != b {
                mat[a * m + b] = cloud.dist(reps[a], reps[b]) + separation;
            }
        }
    }
    let inner = validate_matrix(m, &mat);
    let remap = |x: usize| reps[x];
    report.total += inner.total;
    for v in inner.violations {
        let v = match v {
            Violation::NotFinite { i, j, value } => Violation::NotFinite { i: remap(i), j: remap(j), value },
            Violation::NonzeroDiagonal { i, value } => Violation::NonzeroDiagonal { i: remap(i), value },
            Violation::Asymmetric { i, j, forward, backward } => Violation::Asymmetric {
                i: remap(i),
                j: remap(j),
                forward,
                backward,
            },
            Violation::NonPositive { i, j, value } => Violation::NonPositive { i: remap(i), j: remap(j), value },
            Violation::Triangle { i, j, k, direct, detour } => Violation::Triangle {
                i: remap(i),
                j: remap(j),
                k: remap(k),
                direct,
                detour,
            },
        };
        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
            report.violations.push(v);
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Subsets and Hausdorff distance

/// Nonempty set of indices into a parent space.
#[derive(Clone, Debug)]
pub struct PointSubset<'a, M: Metric + ?Sized> {
    space: &'a M,
    indices: Vec<usize>,
}

impl<'a, M: Metric + ?Sized> PointSubset<'a, M> {
    pub fn new(space: &'a M, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(usage("point subset must be nonempty"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= space.len()) {
            return Err(usage(format!("index {bad} outside a space of {} points", space.len())));
        }
        Ok(PointSubset { space, indices })
    }

    pub fn all(space: &'a M) -> Result<Self> {
        Self::new(space, (0..space.len()).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn space(&self) -> &'a M {
        self.space
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `sup_{a in from} inf_{b in to} d(a, b)`.
pub fn directed_hausdorff<M: Metric + ?Sized>(space: &M, from: &[usize], to: &[usize]) -> f64 {
    let mut sup = 0.0f64;
    for &a in from {
        let mut inf = f64::INFINITY;
        for &b in to {
            let d = space.dist(a, b);
            if d < inf {
                inf = d;
                if inf == 0.0 {
                    break;
                }
            }
        }
        sup = sup.max(inf);
    }
    sup
}

/// Hausdorff distance between two subsets of the same space.
pub fn hausdorff_distance<M: Metric + ?Sized>(a: &PointSubset<'_, M>, b: &PointSubset<'_, M>) -> Result<f64> {
    if !std::ptr::addr_eq(a.space as *const M, b.space as *const M) {
        return Err(usage("Hausdorff distance needs subsets of the same space"));
    }
    Ok(directed_hausdorff(a.space, &a.indices, &b.indices).max(directed_hausdorff(a.space, &b.indices, &a.indices)))
}

// ---------------------------------------------------------------------------
// Covering nets

#[derive(Clone, Debug)]
pub struct CoveringNet<'a, M: Metric + ?Sized> {
    pub net: PointSubset<'a, M>,
    /// Achieved `d_H(net, space)`, strictly below the requested radius.
    pub radius: f64,
}

/// Greedy farthest-point net with `d_H(net, space) < alpha`.
///
/// Starts from index 0 and repeatedly adds the point farthest from the current
/// net (lowest index on ties) until every point is strictly within `alpha`.
pub fn covering_net<M: Metric + ?Sized>(space: &M, alpha: f64) -> Result<CoveringNet<'_, M>> {
    if !(alpha > 0.0) {
        return Err(usage(format!("covering radius must be positive, got {alpha}")));
    }
    let n = space.len();
    if n == 0 {
        return Err(usage("cannot cover an empty space"));
    }
    let mut net = vec![0usize];
    let mut nearest: Vec<f64> = (0..n).map(|k| space.dist(0, k)).collect();
    loop {
        let (far, radius) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
        if radius < alpha {
            let net = PointSubset::new(space, net)?;
            let radius = directed_hausdorff(space, &(0..n).collect::<Vec<_>>(), net.indices());
            debug_assert!(radius < alpha);
            return Ok(CoveringNet { net, radius });
        }
        net.push(far);
        for (k, slot) in nearest.iter_mut().enumerate() {
            let d = space.dist(far, k);
            if d < *slot {
                *slot = d;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Augmented metric

/// `rho(u, v) = pseudo(u, v) + alpha * [u != v]` over a pseudometric matrix.
pub fn augmented_metric(n: usize, pseudo: &[f64], alpha: f64) -> Result<FiniteMetricSpace> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(usage(format!("alpha must be a positive real, got {alpha}")));
    }
    if pseudo.len() != n * n {
        return Err(usage(format!("pseudometric has {} entries, expected {n}x{n}", pseudo.len())));
    }
    let report = validate_matrix(n, pseudo);
    if !report.is_pseudometric() {
        return Err(usage(format!("input is not a pseudometric: {}", report.summary())));
    }
    let mut rho = pseudo.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rho[i * n + j] += alpha;
            }
        }
    }
    FiniteMetricSpace::from_matrix_unchecked(n, rho)
}

// ---------------------------------------------------------------------------
// Serialization

/// Exchange document for finite metric spaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpaceDoc {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingDoc {
    pub points: Vec<Point>,
    pub separation: f64,
}

impl From<&FiniteMetricSpace> for MetricSpaceDoc {
    fn from(s: &FiniteMetricSpace) -> Self {
        let (dist, embedding) = match &s.storage {
            Storage::Dense(d) => (Some(d.clone()), None),
            Storage::Embedded { cloud, separation } => (
                None,
                Some(EmbeddingDoc {
                    points: cloud.points.clone(),
                    separation: *separation,
                }),
            ),
        };
        MetricSpaceDoc {
            n: s.n,
            dist,
            embedding,
            labels: s.labels.clone(),
        }
    }
}

impl TryFrom<MetricSpaceDoc> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(doc: MetricSpaceDoc) -> Result<Self> {
        let space = match (doc.dist, doc.embedding) {
            (Some(dist), None) => {
                if dist.len() != doc.n * doc.n {
                    return Err(Error::Data(format!("\"dist\" has {} entries, expected {}", dist.len(), doc.n * doc.n)));
                }
                FiniteMetricSpace::from_matrix(doc.n, dist)?
            }
            (None, Some(e)) => {
                if e.points.len() != doc.n {
                    return Err(Error::Data(format!("embedding has {} points, expected {}", e.points.len(), doc.n)));
                }
                let s = FiniteMetricSpace::embedded(PointCloud::new(e.points), e.separation)
                    .map_err(|err| Error::Data(err.to_string()))?;
                let report = s.validate();
                if !report.is_metric() {
                    return Err(Error::Data(format!("embedding is not a metric: {}", report.summary())));
                }
                s
            }
            _ => return Err(Error::Data("exactly one of \"dist\" or \"embedding\" is required".into())),
        };
        match doc.labels {
            Some(l) => space.with_labels(l).map_err(|e| Error::Data(e.to_string())),
            None => Ok(space),
        }
    }
}

impl Serialize for FiniteMetricSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MetricSpaceDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MetricSpaceDoc::deserialize(d)?;
        FiniteMetricSpace::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_space(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::embedded(PointCloud::new(xs.iter().map(|&x| Point::circle(x)).collect()), 0.0).unwrap()
    }

    #[test]
    fn triangle_violation_is_witnessed() {
        let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        let report = validate_matrix(3, &d);
        assert_eq!(report.total, 1);
        assert!(matches!(
            report.violations[0],
            Violation::Triangle { i: 0, j: 1, k: 2, .. }
        ));
        assert!(FiniteMetricSpace::from_matrix(3, d).is_err());
    }

    #[test]
    fn discrete_metric_is_clean() {
        let n = 6;
        let d: Vec<f64> = (0..n * n).map(|e| if e / n == e % n { 0.0 } else { 1.0 }).collect();
        assert!(validate_matrix(n, &d).is_metric());
    }

    #[test]
    fn asymmetry_is_reported() {
        let d = vec![0.0, 1.0, 2.0, 0.0];
        let report = validate_matrix(2, &d);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Asymmetric { i: 0, j: 1, .. })));
    }

    #[test]
    fn zero_off_diagonal_and_diagonal_are_reported() {
        let d = vec![0.5, 0.0, 0.0, 0.0];
        let report = validate_matrix(2, &d);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NonzeroDiagonal { i: 0, .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NonPositive { i: 0, j: 1, .. })));
    }

    #[test]
    fn symmetric_scan_matches_naive_scan() {
        // random symmetric matrices, most of which violate the triangle inequality
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(3..9);
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = rng.gen_range(0.1..1.0);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
            let fast = validate_matrix(n, &d);
            let mut naive = ValidationReport::new(n);
            triangle_scan_naive(n, &d, &mut naive);
            // the naive scan reports both orientations of each inequality
            let mut expected: Vec<(usize, usize, usize)> = naive
                .violations
                .iter()
                .filter_map(|v| match v {
                    Violation::Triangle { i, j, k, .. } if i < k => Some((*i, *j, *k)),
                    _ => None,
                })
                .collect();
            let mut got: Vec<(usize, usize, usize)> = fast
                .violations
                .iter()
                .filter_map(|v| match v {
                    Violation::Triangle { i, j, k, .. } => Some((*i, *j, *k)),
                    _ => None,
                })
                .collect();
            expected.sort();
            got.sort();
            assert_eq!(expected, got);
        }
    }

    #[test]
    fn hausdorff_on_circle() {
        let space = circle_space(&[0.0, 0.4, 0.5]);
        let a = PointSubset::new(&space, vec![0]).unwrap();
        let b = PointSubset::new(&space, vec![0, 1]).unwrap();
        let c = PointSubset::new(&space, vec![2]).unwrap();
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert!((hausdorff_distance(&a, &b).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&a, &c).unwrap(), 0.5);
    }

    #[test]
    fn hausdorff_rejects_mixed_spaces() {
        let s1 = circle_space(&[0.0, 0.5]);
        let s2 = circle_space(&[0.0, 0.5]);
        let a = PointSubset::new(&s1, vec![0]).unwrap();
        let b = PointSubset::new(&s2, vec![0]).unwrap();
        assert!(matches!(hausdorff_distance(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn subsets_must_be_nonempty_and_in_range() {
        let s = circle_space(&[0.0, 0.5]);
        assert!(PointSubset::new(&s, vec![]).is_err());
        assert!(PointSubset::new(&s, vec![2]).is_err());
    }

    #[test]
    fn covering_net_cases() {
        let space = circle_space(&[0.0, 0.2, 0.4, 0.6, 0.8]);
        // a single point covers when alpha exceeds the diameter
        let big = covering_net(&space, 0.6).unwrap();
        assert_eq!(big.net.indices(), &[0]);
        // spacing 0.2 at alpha 0.25: greedy picks 0 then 0.4, which covers the circle
        let net = covering_net(&space, 0.25).unwrap();
        assert_eq!(net.net.indices(), &[0, 2]);
        let all = PointSubset::all(&space).unwrap();
        assert!(hausdorff_distance(&net.net, &all).unwrap() < 0.25);
        // below the minimum spacing nothing else covers
        let fine = covering_net(&space, 0.1).unwrap();
        assert_eq!(fine.net.len(), 5);
        assert!(covering_net(&space, 0.0).is_err());
    }

    #[test]
    fn augmented_metric_examples() {
        let rho = augmented_metric(4, &[0.0; 16], 0.1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(rho.dist(i, j), if i == j { 0.0 } else { 0.1 });
            }
        }
        assert!(rho.validate().is_metric());
        let two = augmented_metric(2, &[0.0, 0.3, 0.3, 0.0], 0.05).unwrap();
        assert!((two.dist(0, 1) - 0.35).abs() < 1e-15);
        assert!(augmented_metric(3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0], 0.1).is_err());
        assert!(augmented_metric(2, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn embedded_validation_handles_coincident_images() {
        let cloud = PointCloud::new(vec![Point::circle(0.1), Point::circle(0.1), Point::circle(0.3)]);
        assert!(FiniteMetricSpace::embedded(cloud.clone(), 0.01).unwrap().validate().is_metric());
        let report = FiniteMetricSpace::embedded(cloud, 0.0).unwrap().validate();
        assert!(matches!(report.violations[0], Violation::NonPositive { i: 0, j: 1, .. }));
    }

    #[test]
    fn permuted_relabels_points() {
        let s = circle_space(&[0.0, 0.1, 0.3]);
        let p = s.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.dist(0, 1), s.dist(2, 0));
        assert_eq!(p.dist(1, 2), s.dist(0, 1));
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let s = FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into()])
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: FiniteMetricSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert!(serde_json::from_str::<FiniteMetricSpace>(r#"{"n":2,"dist":[0,1,1,0],"extra":1}"#).is_err());
        assert!(serde_json::from_str::<FiniteMetricSpace>(r#"{"n":2,"dist":[0,1,1]}"#).is_err());
    }
}
