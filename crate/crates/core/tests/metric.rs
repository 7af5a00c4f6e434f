use ghdyn::metric::{
    augmented_metric, covering_net, directed_hausdorff, hausdorff_distance, validate_matrix, FiniteMetricSpace, Metric,
    PointSubset, Violation,
};
use ghdyn::point::{Point, PointCloud};
use proptest::prelude::*;

fn circle(xs: &[f64]) -> PointCloud {
    PointCloud::new(xs.iter().map(|&x| Point::circle(x)).collect())
}

/// Symmetric matrix of a random point set on the unit torus (a metric by construction).
fn torus_matrix(coords: &[(f64, f64)]) -> FiniteMetricSpace {
    let cloud = PointCloud::new(coords.iter().map(|&(x, y)| Point::torus(x, y)).collect());
    let n = cloud.len();
    let d = (0..n * n).map(|k| cloud.dist(k / n, k % n)).collect();
    FiniteMetricSpace::from_matrix_unchecked(n, d).unwrap()
}

// Independent oracle: directed Hausdorff written out as nested loops.
fn sup_inf(m: &dyn Fn(usize, usize) -> f64, from: &[usize], to: &[usize]) -> f64 {
    let mut sup = 0.0f64;
    for &a in from {
        let mut inf = f64::INFINITY;
        for &b in to {
            inf = inf.min(m(a, b));
        }
        sup = sup.max(inf);
    }
    sup
}

#[test]
fn hausdorff_worked_examples() {
    let pts = circle(&[0.0, 0.4, 0.5]);
    let a = PointSubset::new(&pts, vec![0]).unwrap();
    let b = PointSubset::new(&pts, vec![0, 1]).unwrap();
    let c = PointSubset::new(&pts, vec![2]).unwrap();
    assert!((hausdorff_distance(&a, &b).unwrap() - 0.4).abs() < 1e-15);
    assert!((hausdorff_distance(&a, &c).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(hausdorff_distance(&b, &b).unwrap(), 0.0);
}

#[test]
fn arc_metric_example() {
    let pts = circle(&[0.1, 0.9]);
    assert!((pts.dist(0, 1) - 0.2).abs() < 1e-15);
}

#[test]
fn five_point_net() {
    let pts = circle(&[0.0, 0.2, 0.4, 0.6, 0.8]);
    let net = covering_net(&pts, 0.25).unwrap();
    // Greedy from point 0: the farthest points sit at 0.4 and 0.6, and taking
    // 0.4 leaves every point within 0.2 of {0, 0.4}.
    assert_eq!(net.net.indices(), &[0, 2]);
    let all: Vec<usize> = (0..5).collect();
    let cover = sup_inf(&|a, b| pts.dist(a, b), &all, net.net.indices());
    assert!(cover < 0.25);
    assert_eq!(cover, net.radius);
}

#[test]
fn net_extremes() {
    let pts = circle(&[0.0, 0.1, 0.3, 0.55]);
    assert_eq!(covering_net(&pts, 0.6).unwrap().net.len(), 1);
    assert_eq!(covering_net(&pts, 0.05).unwrap().net.len(), 4);
    assert!(covering_net(&pts, 0.0).is_err());
}

#[test]
fn triangle_violation_example() {
    let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
    let report = validate_matrix(3, &d);
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Triangle { i: 0, j: 1, k: 2, .. })));
}

#[test]
fn augmented_examples() {
    let m = augmented_metric(4, &[0.0; 16], 0.1).unwrap();
    for u in 0..4 {
        for v in 0..4 {
            assert_eq!(m.dist(u, v), if u == v { 0.0 } else { 0.1 });
        }
    }
    let m = augmented_metric(2, &[0.0, 0.3, 0.3, 0.0], 0.05).unwrap();
    assert!((m.dist(0, 1) - 0.35).abs() < 1e-15);
    assert!(augmented_metric(3, &[0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0], 0.1).is_err());
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric_on_subsets(
        coords in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 2..12),
        masks in prop::collection::vec(1u16..4096, 3),
    ) {
        let m = torus_matrix(&coords);
        let n = m.n();
        let subset = |mask: u16| -> Vec<usize> {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if s.is_empty() { vec![0] } else { s }
        };
        let sets: Vec<PointSubset<'_, FiniteMetricSpace>> =
            masks.iter().map(|&k| PointSubset::new(&m, subset(k)).unwrap()).collect();
        let d = |a: usize, b: usize| hausdorff_distance(&sets[a], &sets[b]).unwrap();
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        if d(0, 1) == 0.0 {
            let (mut a, mut b) = (sets[0].indices().to_vec(), sets[1].indices().to_vec());
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
        let f = |a: usize, b: usize| m.dist(a, b);
        let oracle = sup_inf(&f, sets[0].indices(), sets[1].indices())
            .max(sup_inf(&f, sets[1].indices(), sets[0].indices()));
        prop_assert_eq!(d(0, 1), oracle);
    }

    #[test]
    fn nets_cover_strictly(
        coords in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..40),
        alpha in 0.01..0.8f64,
    ) {
        let m = torus_matrix(&coords);
        let net = covering_net(&m, alpha).unwrap();
        let all: Vec<usize> = (0..m.n()).collect();
        let cover = sup_inf(&|a, b| m.dist(a, b), &all, net.net.indices());
        prop_assert!(cover < alpha);
        prop_assert_eq!(directed_hausdorff(&m, &all, net.net.indices()), cover);
    }

    #[test]
    fn augmented_metric_sandwich(
        coords in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..10),
        collapse in prop::collection::vec(any::<bool>(), 10),
        alpha in 1e-4..0.5f64,
    ) {
        // A pseudometric: points may be collapsed onto the previous one.
        let mut pts = coords.clone();
        for i in 1..pts.len() {
            if collapse[i] {
                pts[i] = pts[i - 1];
            }
        }
        let pseudo = torus_matrix(&pts);
        let n = pseudo.n();
        let rho = augmented_metric(n, &pseudo.to_dense(), alpha).unwrap();
        prop_assert!(rho.validate().is_metric());
        for u in 0..n {
            for v in 0..n {
                let (p, r) = (pseudo.dist(u, v), rho.dist(u, v));
                prop_assert!(p <= r);
                prop_assert!(r <= p + alpha + 1e-15);
            }
        }
    }

    #[test]
    fn torus_samples_validate(coords in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 2..25)) {
        let m = torus_matrix(&coords);
        let distinct = {
            let mut c = coords.clone();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            c.dedup();
            c.len() == coords.len()
        };
        let report = m.validate();
        prop_assert!(report.is_pseudometric());
        prop_assert_eq!(report.is_metric(), distinct);
    }
}
