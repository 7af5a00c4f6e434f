use ghdyn::dynamics::{circle_rotation, grid_cat_system, FiniteDynSystem};
use ghdyn::entropy::{
    entropy_slope, finite_system_entropy, is_separated, max_separated_exact, max_separated_greedy,
    separation_sweep, ExactBudget, Exactness, OrbitTable, SeparationRow,
};
use ghdyn::metric::FiniteMetricSpace;
use ghdyn::point::{Point, PointCloud};
use proptest::prelude::*;

fn circle_system(xs: &[f64], perm: Vec<usize>) -> FiniteDynSystem {
    let cloud = PointCloud::new(xs.iter().map(|&x| Point::circle(x)).collect());
    FiniteDynSystem::new(FiniteMetricSpace::embedded(cloud, 1e-9).unwrap(), perm).unwrap()
}

fn rows(counts: &[usize]) -> Vec<SeparationRow> {
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| SeparationRow {
            n: k + 1,
            count: c,
            exactness: Exactness::Exact,
        })
        .collect()
}

// Independent oracle: largest subset, by exhaustive enumeration, whose pairs
// all reach distance >= delta within the first n iterates.
fn brute_force_sn(fd: &FiniteDynSystem, n: usize, delta: f64) -> usize {
    let m = fd.n();
    let d = fd.space().to_dense();
    let sep = |u: usize, v: usize| {
        let (mut a, mut b) = (u, v);
        for _ in 0..n {
            if d[a * m + b] >= delta {
                return true;
            }
            a = fd.apply(a);
            b = fd.apply(b);
        }
        false
    };
    let mut best = 0;
    for mask in 1u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if set.len() > best && set.iter().enumerate().all(|(k, &u)| set[k + 1..].iter().all(|&v| sep(u, v))) {
            best = set.len();
        }
    }
    best
}

#[test]
fn separation_examples() {
    let fd = circle_system(&[0.0, 0.5], vec![0, 1]);
    let t = OrbitTable::finite(&fd, 3);
    assert!(is_separated(&t, &[1], 1, 0.4).unwrap());
    assert!(is_separated(&t, &[0, 1], 1, 0.4).unwrap());
    assert!(!is_separated(&t, &[0, 1], 1, 0.6).unwrap());
    assert!(is_separated(&t, &[0, 1], 9, 0.4).is_err());
}

#[test]
fn five_points_identity() {
    let xs = [0.0, 0.2, 0.4, 0.6, 0.8];
    let id = circle_system(&xs, (0..5).collect());
    let t = OrbitTable::finite(&id, 1);
    let b = ExactBudget::default();
    assert_eq!(max_separated_exact(&t, 1, 0.21, b).unwrap().count(), 2);
    assert_eq!(brute_force_sn(&id, 1, 0.21), 2);
    assert_eq!(max_separated_exact(&t, 1, 0.6, b).unwrap().count(), 1);
    assert_eq!(max_separated_exact(&t, 1, 0.2, b).unwrap().count(), 5);
    assert_eq!(max_separated_greedy(&t, 1, 0.0).unwrap().count(), 5);
}

#[test]
fn sampled_rotation_table() {
    let r = circle_rotation(0.25);
    let pts: Vec<Point> = [0.0, 0.1].iter().map(|&x| Point::circle(x)).collect();
    let t = OrbitTable::sampled(&r, &pts, 4);
    assert_eq!(t.len(), 2);
    assert!((t.orbit_distance(0, 1, 4) - 0.1).abs() < 1e-12);
    let one = OrbitTable::sampled(&r, &pts[..1], 1);
    assert_eq!(max_separated_greedy(&one, 1, 0.5).unwrap().count(), 1);
}

#[test]
fn slope_examples() {
    assert_eq!(entropy_slope(&rows(&[3, 3, 3, 3]), 1..=4).unwrap(), 0.0);
    let pow: Vec<usize> = (1..=8).map(|n| 1 << n).collect();
    assert!((entropy_slope(&rows(&pow), 2..=8).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(entropy_slope(&rows(&[1, 2]), 2..=2).is_err());
}

#[test]
fn five_cycle_and_point() {
    let xs = [0.0, 0.2, 0.4, 0.6, 0.8];
    let cyc = circle_system(&xs, vec![1, 2, 3, 4, 0]);
    for delta in [0.05, 0.21, 0.45] {
        let r = finite_system_entropy(&cyc, delta, 20).unwrap();
        assert!(r.all_exact() && r.is_monotone());
        assert!(r.rows.iter().all(|row| row.count <= 5));
        assert!(r.slope.abs() < 1e-9);
        assert_eq!(r.saturates_at, Some(5));
    }
    let point = circle_system(&[0.3], vec![0]);
    let r = finite_system_entropy(&point, 0.1, 10).unwrap();
    assert!(r.rows.iter().all(|row| row.count == 1));
}

#[test]
fn grid_cat_grows_then_saturates() {
    let g = grid_cat_system(8).unwrap();
    let r = finite_system_entropy(&g, 0.2, 12).unwrap();
    assert!(r.all_exact() && r.is_monotone());
    assert!(r.rows[0].count < r.rows[3].count);
    assert!(r.rows.iter().all(|row| row.count <= 64));
    assert!(r.slope.abs() < 1e-9);
}

fn perm_from(keys: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by_key(|&i| (keys[i], i));
    idx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_match_oracle_and_order(
        xs in prop::collection::vec(0.0..1.0f64, 1..=10),
        keys in prop::collection::vec(any::<u32>(), 10),
        d1 in 0.01..0.5f64,
        d2 in 0.01..0.5f64,
    ) {
        let n = xs.len();
        let fd = circle_system(&xs, perm_from(&keys[..n]));
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let t = OrbitTable::finite(&fd, 6);
        let a = separation_sweep(&t, lo, 6, 1_000_000).unwrap();
        let b = separation_sweep(&t, hi, 6, 1_000_000).unwrap();
        for k in 0..6 {
            prop_assert_eq!(a[k].exactness, Exactness::Exact);
            prop_assert_eq!(a[k].count, brute_force_sn(&fd, k + 1, lo));
            prop_assert!(a[k].count >= b[k].count);
            prop_assert!(a[k].count <= n);
            if k > 0 {
                prop_assert!(a[k - 1].count <= a[k].count);
            }
            let greedy = max_separated_greedy(&t, k + 1, lo).unwrap();
            prop_assert!(greedy.count() <= a[k].count);
            prop_assert!(is_separated(&t, &greedy.points, k + 1, lo).unwrap());
        }
    }

    #[test]
    fn permutation_systems_have_zero_slope(
        xs in prop::collection::vec(0.0..1.0f64, 2..=24),
        keys in prop::collection::vec(any::<u32>(), 24),
        delta in 0.01..0.5f64,
    ) {
        let n = xs.len();
        let fd = circle_system(&xs, perm_from(&keys[..n]));
        let r = finite_system_entropy(&fd, delta, 40).unwrap();
        prop_assert!(r.rows.iter().all(|row| row.count <= n));
        prop_assert!(r.is_monotone());
        if r.saturates_at.is_some_and(|l| l < 40) {
            prop_assert!(r.slope.abs() < 1e-9);
        }
    }
}
