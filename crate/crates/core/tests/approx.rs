use ghdyn::approx::{
    all_periods, approximate, approximate_with_sample, build_backward_map, build_finite_system, choose_alpha,
    construct, continuity_beta, find_block_anchor, find_return_time, ApproximationConfig, OrbitBlock,
};
use ghdyn::certificate::{verify, BetaSource};
use ghdyn::dynamics::{
    circle_rotation, golden_theta, grid_cat_oracle, grid_cat_system, orbit_segment, torus_cat_map, SystemDescriptor,
    SystemOracle,
};
use ghdyn::metric::{validate_metric, Metric};
use ghdyn::point::{torus_distance, Point};
use ghdyn::Error;
use proptest::prelude::*;

fn xs(points: &[Point]) -> Vec<f64> {
    points.iter().map(|p| p.x()).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn orbit_segments() {
    let r = circle_rotation(0.4);
    assert_eq!(xs(&orbit_segment(&r, Point::circle(0.0), 0)), vec![0.0]);
    let seg = orbit_segment(&r, Point::circle(0.0), 5);
    for (got, want) in xs(&seg).iter().zip([0.0, 0.4, 0.8, 0.2, 0.6, 0.0]) {
        assert!(torus_distance(&Point::circle(*got), &Point::circle(want)) < 1e-12);
    }
    let cat = torus_cat_map();
    assert!(orbit_segment(&cat, Point::torus(0.0, 0.0), 17)
        .iter()
        .all(|p| *p == Point::torus(0.0, 0.0)));
}

#[test]
fn grid_cat_two() {
    let g = grid_cat_system(2).unwrap();
    assert_eq!(g.n(), 4);
    let mut seen = g.perm().to_vec();
    seen.sort_unstable();
    assert_eq!(seen, vec![0, 1, 2, 3]);
    assert_eq!(g.apply(0), 0);
    assert_eq!(grid_cat_system(1).unwrap().perm(), &[0]);
}

#[test]
fn beta_examples() {
    let golden = circle_rotation(golden_theta());
    let sample = golden.sample(50, 1);
    let (b, src) = continuity_beta(&golden, 0.3, &sample, 0.9).unwrap();
    assert!(close(b, 0.09));
    assert_eq!(src, BetaSource::Lipschitz);

    // The largest eigenvalue of [[2, 1], [1, 1]], computed directly.
    let (a, d, c) = (2.0f64, 1.0f64, 1.0f64);
    let lambda = ((a + d) + ((a - d).powi(2) + 4.0 * c * c).sqrt()) / 2.0;
    let cat = torus_cat_map();
    let (b, _) = continuity_beta(&cat, 0.3, &cat.sample(10, 1), 0.9).unwrap();
    assert!(close(b, 0.9 * 0.1 / lambda));
    assert!((b - 0.0344).abs() < 1e-4);

    let id = circle_rotation(0.0);
    let (b, _) = continuity_beta(&id, 0.42, &sample, 0.9).unwrap();
    assert!(close(b, 0.9 * 0.42 / 3.0));

    assert!(continuity_beta(&id, 0.42, &[], 0.9).is_err());
    assert!(continuity_beta(&id, 0.0, &sample, 0.9).is_err());
}

#[test]
fn alpha_examples() {
    assert!(close(choose_alpha(0.9, 0.2, 0.5), 0.05));
    assert!(close(choose_alpha(0.09, 10.0, 0.5), 0.005));
}

#[test]
fn anchors_and_return_times() {
    let r = circle_rotation(0.4);
    let zero = Point::circle(0.0);
    let (a, t) = find_block_anchor(&r, &zero, 0.05, &zero, 10).unwrap();
    assert_eq!((a, t), (zero, 0));
    let (a, t) = find_block_anchor(&r, &Point::circle(0.6), 0.05, &zero, 10).unwrap();
    assert_eq!(t, 4);
    assert!(torus_distance(&a, &Point::circle(0.6)) < 1e-12);

    assert_eq!(find_return_time(&r, &zero, 0.1, 100).unwrap(), 4);
    let block = OrbitBlock::from_anchor(&r, 0, zero, 0, 4);
    assert!(block.closing_gap < 1e-12);

    let cat = torus_cat_map();
    let origin = Point::torus(0.0, 0.0);
    assert!(matches!(
        find_block_anchor(&cat, &Point::torus(0.5, 0.5), 0.05, &origin, 1000),
        Err(Error::NoRecurrence { .. })
    ));
    assert_eq!(find_return_time(&cat, &origin, 0.01, 10).unwrap(), 0);
    assert_eq!(OrbitBlock::from_anchor(&cat, 0, origin, 0, 0).closing_gap, 0.0);

    // Golden rotation: the return time exists and the orbit closes within delta/3.
    let golden = circle_rotation(golden_theta());
    let (delta, beta) = (0.05, 0.01);
    let n = find_return_time(&golden, &zero, beta, 1_000_000).unwrap();
    assert!(n > 0);
    let block = OrbitBlock::from_anchor(&golden, 0, zero, 0, n as usize);
    assert!(block.closing_gap < delta / 3.0);
}

#[test]
fn finite_system_from_blocks() {
    let cat = torus_cat_map();
    let fixed = OrbitBlock::from_anchor(&cat, 0, Point::torus(0.0, 0.0), 0, 0);
    let (fd, q) = build_finite_system(&[fixed], 0.01).unwrap();
    assert_eq!((fd.n(), fd.perm(), q.len()), (1, &[0][..], 1));

    let r = circle_rotation(0.4);
    let alpha = 0.03;
    let five = OrbitBlock::from_anchor(&r, 0, Point::circle(0.0), 0, 4);
    let three = OrbitBlock::from_anchor(&r, 1, Point::circle(0.1), 0, 2);
    let (fd, q) = build_finite_system(&[five, three], alpha).unwrap();
    assert_eq!(fd.perm(), &[1, 2, 3, 4, 0, 6, 7, 5]);
    assert_eq!(all_periods(&fd), vec![5, 5, 5, 5, 5, 3, 3, 3]);
    assert!(validate_metric(fd.space()).is_metric());
    for u in 0..fd.n() {
        for v in 0..fd.n() {
            let want = if u == v { 0.0 } else { torus_distance(&q[u], &q[v]) + alpha };
            assert!(close(fd.space().dist(u, v), want));
        }
    }
    assert!(build_finite_system(&[], alpha).is_err());
}

#[test]
fn backward_map_nearest() {
    let q = [Point::circle(0.49), Point::circle(0.53)];
    let j = build_backward_map(&[Point::circle(0.5), Point::circle(0.53)], &q, 0.05).unwrap();
    assert_eq!(j, vec![0, 1]);
    assert!(matches!(
        build_backward_map(&[Point::circle(0.0)], &q, 0.05),
        Err(Error::CoverageGap { .. })
    ));
}

#[test]
fn rational_rotation_runs() {
    let r = circle_rotation(0.4);
    let sample = orbit_segment(&r, Point::circle(0.0), 4);
    // At 0.9 the preimage of each anchor is already within beta after one step,
    // so blocks are 2-cycles that close within delta/3 but not exactly.
    let res = approximate_with_sample(&r, &ApproximationConfig::new(0.9), sample.clone()).unwrap();
    assert!(res.certificate.passed());
    assert!(res.blocks.iter().all(|b| b.length() == 1 && b.closing_gap < 0.3));
    let res = approximate_with_sample(&r, &ApproximationConfig::new(0.6), sample).unwrap();
    assert!(res.certificate.passed());
    assert!(res.blocks.iter().all(|b| b.length() == 4 && b.closing_gap < 1e-12));
}

#[test]
fn degenerate_seed_has_no_recurrence() {
    let cat = SystemDescriptor::parse_short("cat-fixed-seed").unwrap().build().unwrap();
    let mut cfg = ApproximationConfig::new(0.1);
    cfg.sample_size = 200;
    cfg.max_orbit_search = 10_000;
    assert!(matches!(approximate(cat.as_ref(), &cfg), Err(Error::NoRecurrence { .. })));
}

#[test]
fn golden_certificate_and_tamper() {
    let golden = circle_rotation(golden_theta());
    let res = approximate(&golden, &ApproximationConfig::new(0.1)).unwrap();
    let cert = &res.certificate;
    assert!(cert.gh0_bound < 0.1);
    assert!(verify(cert).unwrap().iter().all(|c| c.passed));

    // Edit one rho entry by moving an embedded point off its orbit position.
    let mut bad = cert.clone();
    let (u, v) = (0, 1);
    let d = torus_distance(&bad.y.rho_points[u], &bad.y.rho_points[v]);
    let x = bad.y.rho_points[u].x();
    bad.y.rho_points[u] = Point::circle(x - d.max(bad.alpha * 4.0));
    let checks = verify(&bad).unwrap();
    let first = checks.iter().find(|c| !c.passed).unwrap();
    assert_eq!(first.name, "q_distortion");
}

#[test]
fn fixed_point_only_system_has_zero_defects() {
    let g = grid_cat_oracle(1).unwrap();
    let mut cfg = ApproximationConfig::new(0.3);
    cfg.sample_size = 1;
    let res = approximate(&g, &cfg).unwrap();
    assert_eq!(res.system.n(), 1);
    for c in res.certificate.checks.iter().filter(|c| c.name != "alpha_choice") {
        assert_eq!(c.achieved, 0.0, "{}", c.name);
    }
}

#[test]
fn grid_cat_eight_certifies() {
    let g = grid_cat_oracle(8).unwrap();
    let res = approximate(&g, &ApproximationConfig::new(0.4)).unwrap();
    assert!(res.certificate.gh0_bound < 0.4);
    assert!(all_periods(&res.system).iter().all(|&p| p > 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rotations_certify_with_tight_rho(theta in 0.0..1.0f64, delta in 0.15..0.5f64, seed in 0u64..1000) {
        let r = circle_rotation(theta);
        let mut cfg = ApproximationConfig::new(delta);
        cfg.sample_size = 150;
        cfg.seed = seed;
        let res = construct(&r, &cfg, r.sample(150, seed)).unwrap();
        let cert = &res.certificate;
        prop_assert!(cert.passed(), "{:?}", cert.first_failure());
        prop_assert!(cert.gh0_bound < delta);
        prop_assert!(cert.alpha < (delta / 9.0).min(cert.beta / 2.0));
        let fd = &res.system;
        prop_assert!(validate_metric(fd.space()).is_metric());
        let periods = all_periods(fd);
        let mut start = 0;
        for b in &res.blocks {
            let len = b.length() + 1;
            prop_assert!(periods[start..start + len].iter().all(|&p| p == len));
            for k in 0..len {
                let u = start + k;
                let next = if k + 1 == len { start } else { u + 1 };
                prop_assert_eq!(fd.apply(u), next);
            }
            prop_assert!(b.closing_gap < delta / 3.0);
            start += len;
        }
        let q = res.q();
        for u in 0..fd.n() {
            for v in 0..fd.n() {
                if u != v {
                    let gap = fd.space().dist(u, v) - torus_distance(&q[u], &q[v]);
                    prop_assert!((gap - cert.alpha).abs() <= 2.0 * f64::EPSILON * fd.space().dist(u, v));
                }
            }
        }
    }
}
