use std::f64::consts::LN_2;

use cocycle_lab::family::*;
use cocycle_lab::lyapunov::*;
use cocycle_lab::mat2::*;
use cocycle_lab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-block exponent of Bernoulli{0,1} at E = 0.5 from `brute_force_reference` (n = 10⁷).
const LAMBDA_E05: f64 = 0.05991;

fn bernoulli() -> SchrodingerFamily {
    make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5).unwrap()).unwrap()
}

/// Plain renormalized vector iteration with its own random source.
fn naive_exponent(e: f64, blocks: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut u, mut v) = (1.0f64, 0.0f64);
    let mut acc = 0.0;
    for _ in 0..2 * blocks {
        let pot = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let nu = (e - pot) * u - v;
        v = u;
        u = nu;
        let s = u.hypot(v);
        acc += s.ln();
        u /= s;
        v /= s;
    }
    acc / blocks as f64
}

#[test]
#[ignore]
fn brute_force_reference() {
    println!("{}", naive_exponent(0.5, 10_000_000, 17));
}

#[test]
fn constant_family_is_exact() {
    let f = make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap());
    let est = estimate_le(&f, 0.0, 10_000, 3, 1).unwrap();
    assert_eq!(est.lambda_hat, LN_2);
    assert_eq!(est.stderr, 0.0);
    let curve = le_curve(&f, &[0.0, 0.5, 1.0], 1000, 2, 1).unwrap();
    assert!(curve.iter().all(|c| (c.lambda_hat - LN_2).abs() < 1e-15));
}

#[test]
fn identity_family_is_zero() {
    let f = make_constant_family(Mat2::IDENTITY);
    assert_eq!(estimate_le(&f, 0.0, 1000, 2, 1).unwrap().lambda_hat, 0.0);
}

#[test]
fn bernoulli_exponent_matches_brute_force() {
    let est = estimate_le(&bernoulli(), 0.5, 10_000, 50, 3).unwrap();
    assert!(est.lambda_hat / est.stderr > 5.0, "{est:?}");
    assert!((est.lambda_hat - LAMBDA_E05).abs() < 4.0 * est.stderr + 5e-4, "{est:?}");
}

#[test]
fn single_node_curve_is_estimate() {
    let f = bernoulli();
    let c = le_curve(&f, &[0.2], 2000, 3, 9).unwrap();
    let e = estimate_le(&f, 0.2, 2000, 3, node_seed(9, 0)).unwrap();
    assert_eq!(c[0], e);
    assert!(le_curve(&f, &[], 2000, 3, 9).is_err());
}

#[test]
fn curve_is_continuous_within_noise() {
    let f = bernoulli();
    let grid = f.j.grid(100);
    let c = le_curve(&f, &grid, 2000, 8, 4).unwrap();
    let pooled = (c.iter().map(|e| e.stderr * e.stderr).sum::<f64>() / c.len() as f64).sqrt();
    // Midpoint deviation removes the true slope; its noise scale is sqrt(1.5) stderr.
    let dev = c.windows(3).map(|w| (w[1].lambda_hat - 0.5 * (w[0].lambda_hat + w[2].lambda_hat)).abs()).fold(0.0, f64::max);
    assert!(dev < 5.0 * 1.5f64.sqrt() * pooled, "{dev} {pooled}");
}

#[test]
fn estimator_is_nonnegative() {
    let f = bernoulli();
    for k in 0..20 {
        assert!(log_norm_of_word(&f, -1.5 + 0.15 * k as f64, 200, k) >= 0.0);
    }
}

#[test]
fn inverse_transpose_word_has_same_norm() {
    let f = bernoulli();
    let w = sample_word(&f, 5, 300);
    let mut fwd = LogMat::identity();
    let mut inv = LogMat::identity();
    for l in &w.letters {
        let m = f.matrix(0.7, l);
        fwd.push(&m);
        inv.push(&m.inverse_transpose());
    }
    assert!((fwd.log_norm() - inv.log_norm()).abs() < 1e-9 * fwd.log_norm().max(1.0));
}

#[test]
fn renormalized_matches_plain_product() {
    let f = bernoulli();
    let w = sample_word(&f, 6, 500);
    let mut plain = Mat2::IDENTITY;
    for l in &w.letters {
        plain = f.matrix(0.5, l).mul_raw(&plain);
    }
    let direct = operator_norm(&plain).ln();
    assert!(direct.is_finite());
    let renorm = product(&f, 0.5, &w.letters).log_norm();
    assert!((direct - renorm).abs() / 500.0 < 1e-9, "{direct} {renorm}");
}

#[test]
fn ld_rate_constant_family_has_no_events() {
    let f = make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap());
    match ld_rate(&f, 0.0, 0.1, &[100, 200, 400], 1000, 1) {
        Err(Error::InsufficientEvents { lower_bound }) => assert!((lower_bound - 1000f64.ln() / 400.0).abs() < 1e-15),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ld_rate_huge_epsilon_has_no_events() {
    let r = assess_assumptions(&bernoulli(), 50, 20).unwrap();
    assert!(matches!(
        ld_rate(&bernoulli(), 0.5, 10.0 * r.m_hat, &[100, 200, 400], 1000, 1),
        Err(Error::InsufficientEvents { .. })
    ));
}

#[test]
fn ld_rate_rejects_bad_input() {
    let f = bernoulli();
    assert!(ld_rate(&f, 0.5, 0.0, &[100, 200, 400], 1000, 1).is_err());
    assert!(ld_rate(&f, 0.5, 0.1, &[100, 200], 1000, 1).is_err());
    assert!(ld_rate(&f, 0.5, 0.1, &[100, 400, 200], 1000, 1).is_err());
    assert!(ld_rate(&f, 0.5, 0.1, &[100, 200, 400], 999, 1).is_err());
}

#[test]
fn upper_check_constant_family_has_no_violations() {
    let f = make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap());
    let grid = [0.0, 0.5];
    let curve = le_curve(&f, &grid, 1000, 1, 0).unwrap();
    let word = constant_word((), 300);
    for all in [false, true] {
        let r = uniform_upper_check(&f, &grid, &word, 1e-3, &curve, all).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_excess < 0.0);
    }
}

#[test]
fn upper_check_zero_slack_reports_violations() {
    let f = bernoulli();
    let grid = f.j.grid(4);
    let curve: Vec<LEEstimate> = le_curve(&f, &grid, 2000, 4, 0).unwrap();
    let word = sample_word(&f, 1, 500);
    let r = uniform_upper_check(&f, &grid, &word, 0.0, &curve, false).unwrap();
    assert!(r.violations > 0 && r.node_violations.len() == 5);
    let full = uniform_upper_check(&f, &grid, &word, 0.0, &curve, true).unwrap();
    assert_eq!(full.pairs_per_node, 500 * 501 / 2);
    assert!(full.violations >= r.violations);
}

#[test]
fn anchored_pair_count() {
    let f = make_constant_family(Mat2::IDENTITY);
    let curve = le_curve(&f, &[0.0], 100, 1, 0).unwrap();
    let r = uniform_upper_check(&f, &[0.0], &constant_word((), 8), 0.1, &curve, false).unwrap();
    // 8 prefixes, then spans 1, 2, 4 at every start m ≥ 1.
    assert_eq!(r.pairs_per_node, 8 + 7 + 6 + 4);
}
