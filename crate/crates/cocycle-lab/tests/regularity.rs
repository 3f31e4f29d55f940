use std::f64::consts::PI;

use cocycle_lab::family::*;
use cocycle_lab::mat2::*;
use cocycle_lab::regularity::*;
use proptest::prelude::*;

fn bernoulli() -> SchrodingerFamily {
    make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5).unwrap()).unwrap()
}

fn pure_rotation() -> RotationFamily {
    make_rotation_family(Mat2::IDENTITY, Mat2::IDENTITY, 0.5, Interval::new(0.0, 1.0).unwrap()).unwrap()
}

#[test]
fn pure_rotation_constants() {
    let c = distortion_constants(&pure_rotation(), 100).unwrap();
    assert!(c.kappa < 1e-6 && c.c < 1e-6, "{c:?}");
    assert!((c.l - 1.0).abs() < 1e-9);
    assert!((c.l_p - 1.0 / PI).abs() < 1e-6);
    assert!(distortion_constants(&pure_rotation(), 99).is_err());
}

#[test]
fn constant_family_has_no_parameter_dependence() {
    let c = distortion_constants(&make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap()), 100).unwrap();
    assert_eq!((c.c, c.l_p), (0.0, 0.0));
    // f′ of diag(2, 1/2) peaks at 4 on the contracted axis.
    assert!((c.l - 4.0).abs() < 1e-12, "{c:?}");
}

#[test]
fn bernoulli_constants_are_resolved() {
    let f = bernoulli();
    let lo = distortion_constants(&f, 100).unwrap();
    let hi = distortion_constants(&f, 200).unwrap();
    for (x, y) in [(lo.kappa, hi.kappa), (lo.c, hi.c), (lo.l, hi.l), (lo.l_p, hi.l_p)] {
        assert!(x.is_finite() && x >= 0.0);
        assert!((y - x).abs() <= 0.05 * x, "{lo:?} {hi:?}");
    }
    assert!(lo.l >= 1.0 && lo.delta_hat > 0.0);
}

#[test]
fn rotation_distortion_is_zero_on_both_sides() {
    let f = pure_rotation();
    let c = distortion_constants(&f, 100).unwrap().inflated(SAFETY_FACTOR);
    let word = sample_word(&f, 1, 300);
    let r = check_distortion_bound(&f, &word, &c, (0.2, 0.3), (0.1, 0.2), 200, 1).unwrap();
    assert!(r.worst_lhs < 1e-9);
    assert!(r.worst_slack <= 1e-9);
}

#[test]
fn bernoulli_distortion_bound_holds() {
    let f = bernoulli();
    let c = distortion_constants(&f, 100).unwrap().inflated(SAFETY_FACTOR);
    for (seed, len) in [(1, 1), (2, 50), (3, 1000)] {
        let word = sample_word(&f, seed, len);
        let r = check_distortion_bound(&f, &word, &c, (0.4, 0.41), (0.3, 0.32), 1000, seed).unwrap();
        assert!(r.worst_slack <= 1e-9, "{len} {r:?}");
    }
    let word = sample_word(&f, 1, 1001);
    assert!(check_distortion_bound(&f, &word, &c, (0.4, 0.41), (0.3, 0.32), 10, 1).is_err());
}

/// Worst probe ratio of `dist^s` after `k` steps of `diag(g, 1/g)`, from the angle formula.
fn diagonal_ratio(g: f64, k: i32, s: f64) -> f64 {
    let step = |x: f64| {
        let t = (x * PI).tan() / g.powi(2 * k);
        let y = t.atan() / PI;
        // atan lands in (−1/2, 1/2); keep the same half-turn as x.
        if x > 0.5 { y + 1.0 } else { y.rem_euclid(1.0) }
    };
    probe_pairs()
        .iter()
        .map(|&(x, y)| (circle_dist(step(x), step(y)) / circle_dist(x, y)).powf(s))
        .fold(0.0, f64::max)
}

#[test]
fn strong_hyperbolic_constant_contraction_matches_two_point_iteration() {
    let f = make_constant_family(Mat2::new(10.0, 0.0, 0.0, 0.1).unwrap());
    let s_grid = [0.25, 0.5, 1.0];
    let k_grid = [1, 2, 4];
    let t = contraction_table(&f, 0.0, &s_grid, &k_grid, 10, 1).unwrap();
    for (ki, k) in k_grid.iter().enumerate() {
        for (si, s) in s_grid.iter().enumerate() {
            let oracle = diagonal_ratio(10.0, *k as i32, *s);
            assert!((t.ratio[ki][si] - oracle).abs() <= 1e-9 * oracle.max(1.0), "{k} {s} {oracle}");
        }
    }
    // One probe sits 5e-3 from the repelling direction, so a single step stretches it;
    // two steps pull every probe toward the attractor.
    assert!(diagonal_ratio(10.0, 1, 1.0) > 0.5);
    let p = estimate_contraction(&f, 0.0, &s_grid, &k_grid, 1000, 1).unwrap();
    assert!(p.valid, "{p:?}");
    assert_eq!((p.k, p.s), (2, 1.0));
}

#[test]
fn pure_rotation_never_contracts() {
    let f = pure_rotation();
    let t = contraction_table(&f, 0.3, &[0.5, 1.0], &[1, 8], 50, 1).unwrap();
    assert!(t.ratio.iter().flatten().all(|r| (r - 1.0).abs() < 1e-9));
    let p = estimate_contraction(&f, 0.3, &[0.5, 1.0], &[1, 8], 1000, 1).unwrap();
    assert!(!p.valid);
    assert!(estimate_contraction(&f, 0.3, &[1.0], &[1], 999, 1).is_err());
}

#[test]
fn ratio_is_submultiplicative_in_k() {
    let f = bernoulli();
    let ks = [2, 4, 8, 16, 32];
    let t = contraction_table(&f, 0.5, &[0.3, 0.6], &ks, 2000, 5).unwrap();
    for ki in 0..ks.len() - 1 {
        for si in 0..2 {
            let bound = t.ratio[ki][si] + 2.0 * t.stderr[ki][si].max(t.stderr[ki + 1][si]);
            assert!(t.ratio[ki + 1][si] <= bound, "{ki} {si} {t:?}");
        }
    }
}

#[test]
fn synchronization_trivial_cases() {
    let h = make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap());
    let starts: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 / 100.0, i as f64 / 100.0)).collect();
    let rows = sync_distance_from(&h, 0.0, 0.0, 40, &starts, 1).unwrap();
    assert!(rows.iter().all(|r| r.q90 == 0.0));
    let rot = pure_rotation();
    let starts = vec![(0.1, 0.35); 100];
    for r in sync_distance_from(&rot, 0.4, 0.4, 400, &starts, 2).unwrap() {
        assert!((r.q10 - 0.25).abs() < 1e-9 && (r.q90 - 0.25).abs() < 1e-9);
    }
    assert!(sync_distance(&rot, 0.4, 0.4, 400, 99, 1).is_err());
}

#[test]
fn synchronization_floor_shrinks_with_parameter_gap() {
    let f = bernoulli();
    let medians: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|d| sync_distance(&f, 0.5, 0.5 + d, 2000, 200, 3).unwrap()[2].q50)
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

proptest! {
    #[test]
    fn phi_is_symmetric(x in 0.0f64..1.0, y in 0.0f64..1.0, s in 0.05f64..1.0) {
        prop_assert_eq!(phi(x, y, s), phi(y, x, s));
        prop_assert_eq!(phi(x, x, s), 0.0);
        prop_assert!(phi(x, y, s) <= 0.5f64.powf(s) + 1e-15);
    }
}
