use std::f64::consts::{LN_2, PI};

use cocycle_lab::family::*;
use cocycle_lab::lyapunov::estimate_le;
use cocycle_lab::mat2::*;
use cocycle_lab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bernoulli(j: (f64, f64)) -> SchrodingerFamily {
    make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(j.0, j.1).unwrap()).unwrap()
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    a.to_array().iter().zip(b.to_array()).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn pure_rotation_generator() {
    let f = make_rotation_family(Mat2::IDENTITY, Mat2::IDENTITY, 0.5, Interval::new(0.1, 0.2).unwrap()).unwrap();
    for alpha in [0.1, 0.15, 0.2] {
        assert!(close(&f.matrix(alpha, &true), &Mat2::rotation(alpha), 0.0));
        assert!(close(&f.matrix(alpha, &false), &Mat2::rotation(alpha), 0.0));
    }
}

#[test]
fn rotation_family_at_zero_is_the_letter() {
    let a = Mat2::diag(2.0);
    let b = Mat2::new(1.0, 1.0, 0.0, 1.0).unwrap();
    let f = make_rotation_family(a, b, 0.3, Interval::new(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(f.matrix(0.0, &true), a);
    assert_eq!(f.matrix(0.0, &false), b);
    assert!(make_rotation_family(a, b, 1.0, f.j).is_err());
}

#[test]
fn rotation_angle_derivative_is_one_over_pi() {
    let a = Mat2::diag(3.0);
    let f = make_rotation_family(a, a, 0.5, Interval::new(0.0, 1.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-6;
    for _ in 0..1000 {
        let (alpha, x): (f64, f64) = (rng.random(), rng.random());
        let fd = circle_diff(proj_apply(&f.matrix(alpha + h, &true), x), proj_apply(&f.matrix(alpha - h, &true), x)) / (2.0 * h);
        assert!((fd - 1.0 / PI).abs() < 1e-8);
        let lift_fd = (f.lift(alpha + h, &true, x) - f.lift(alpha - h, &true, x)) / (2.0 * h);
        assert!((lift_fd - 1.0 / PI).abs() < 1e-8);
    }
}

#[test]
fn schrodinger_zero_block_is_minus_identity() {
    let f = bernoulli((-1.5, 1.5));
    assert_eq!(f.matrix(0.0, &[0.0, 0.0]), Mat2::new_unchecked(-1.0, 0.0, 0.0, -1.0));
    assert_eq!(f.block_size(), 2);
}

#[test]
fn schrodinger_block_is_unimodular() {
    let f = bernoulli((-1.5, 1.5));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let e = rng.random_range(-1.5..1.5);
        let w = f.draw([rng.random(), rng.random()]);
        assert!((f.matrix(e, &w).det() - 1.0).abs() <= 1e-14);
        assert_eq!(site_matrix(e, w[0]).det(), 1.0);
    }
}

#[test]
fn degenerate_potential_is_rejected() {
    let j = Interval::new(0.0, 1.0).unwrap();
    assert!(matches!(make_schrodinger_family(Potential::point(0.3), j), Err(Error::DegenerateDistribution)));
    assert!(matches!(
        make_schrodinger_family(Potential::Uniform { low: 1.0, high: 1.0 }, j),
        Err(Error::DegenerateDistribution)
    ));
    assert!(make_schrodinger_family(Potential::Uniform { low: -1.0, high: 1.0 }, j).is_ok());
}

#[test]
fn constant_family_products() {
    let f = make_constant_family(Mat2::diag(2.0));
    let t = product(&f, 0.5, &[(); 300]);
    assert_eq!(t.log_norm(), 300.0 * LN_2);
    let e = f.matrix(0.5, &());
    assert_eq!(e, Mat2::diag(2.0));
    let id = make_constant_family(Mat2::IDENTITY);
    assert_eq!(product(&id, 0.0, &[(); 50]).log_norm(), 0.0);
}

#[test]
fn constant_family_exponent_is_log_spectral_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (p, q, r) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
        // [[r, p], [q, (1 + p q)/r]] has det 1.
        let m = Mat2::new(r, p, q, (1.0 + p * q) / r).unwrap();
        let tr = m.trace();
        if tr.abs() <= 2.05 {
            continue;
        }
        let lam = (0.5 * (tr.abs() + (tr * tr - 4.0).sqrt())).ln();
        let est = estimate_le(&make_constant_family(m), 0.0, 10_000, 1, 0).unwrap();
        assert!((est.lambda_hat - lam).abs() < 1e-3, "{} {}", est.lambda_hat, lam);
    }
}

#[test]
fn word_sampling_contract() {
    let f = make_rotation_family(Mat2::diag(2.0), Mat2::IDENTITY, 0.5, Interval::new(0.0, 1.0).unwrap()).unwrap();
    let w1 = sample_word(&f, 99, 1_000_000);
    let w2 = sample_word(&f, 99, 1_000_000);
    assert_eq!(w1, w2);
    let freq = w1.letters.iter().filter(|x| **x).count() as f64 / 1e6;
    assert!((freq - 0.5).abs() < 1.5e-3, "{freq}");
    let short = sample_word(&f, 99, 1000);
    assert_eq!(short.letters[..], w1.letters[..1000]);
    assert_ne!(sample_word(&f, 100, 1000).letters, short.letters);
}

#[test]
fn pure_rotation_assumptions() {
    let f = make_rotation_family(Mat2::IDENTITY, Mat2::IDENTITY, 0.5, Interval::new(0.1, 0.2).unwrap()).unwrap();
    let r = validate_assumptions(&f, 50, 20).unwrap();
    assert!((r.delta_hat - 1.0 / PI).abs() < 1e-6, "{r:?}");
    assert!((r.m_hat - 1.0).abs() < 1e-12);
    assert!(!r.a1_noncompact);
}

#[test]
fn constant_family_is_ineligible() {
    let f = make_constant_family(Mat2::diag(2.0));
    assert!(matches!(validate_assumptions(&f, 50, 20), Err(Error::MonotonicityViolation(_))));
}

#[test]
fn bernoulli_assumptions() {
    let f = bernoulli((-1.5, 1.5));
    let r = validate_assumptions(&f, 100, 100).unwrap();
    assert!(r.delta_hat > 0.0);
    // Two sites, each with Frobenius norm at most sqrt((E − V)² + 2), max |E − V| = 2.5.
    assert!(r.m_hat <= 2.5f64.powi(2) + 2.0);
    assert!(r.a1_noncompact && r.a1_no_invariant_lines);
    assert!(r.eligible);
}

#[test]
fn monotone_lift_random_triples() {
    let f = bernoulli((-1.5, 1.5));
    let r = assess_assumptions(&f, 100, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let a = rng.random_range(-1.5..1.4);
        let a2 = a + rng.random_range(1e-4..0.1);
        let x = rng.random_range(-3.0..3.0);
        let w = f.draw([rng.random(), rng.random()]);
        assert!(f.lift(a2, &w, x) - f.lift(a, &w, x) >= r.delta_hat * (a2 - a) / 2.0);
    }
}

#[test]
fn interval_grid_has_exact_endpoints() {
    let j = Interval::new(0.3, 0.9).unwrap();
    let g = j.grid(500);
    assert_eq!(g.len(), 501);
    assert_eq!((g[0], g[500]), (0.3, 0.9));
    assert!(g.windows(2).all(|w| w[0] < w[1]));
    assert!(Interval::new(1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn schrodinger_lift_is_degree_one_and_continuous(e in -1.5f64..1.5, x in -3.0f64..3.0, v1 in 0usize..2, v2 in 0usize..2) {
        let f = bernoulli((-1.5, 1.5));
        let w = [v1 as f64, v2 as f64];
        prop_assert!((f.lift(e, &w, x + 1.0) - f.lift(e, &w, x) - 1.0).abs() < 1e-12);
        prop_assert!(circle_dist(wrap(f.lift(e, &w, x)), proj_apply(&f.matrix(e, &w), wrap(x))) < 1e-12);
        let h = 1e-7;
        prop_assert!((f.lift(e + h, &w, x) - f.lift(e, &w, x)).abs() < 1e-4);
    }

    #[test]
    fn potential_samples_lie_in_support(u in 0.0f64..1.0) {
        let p = Potential::Discrete { values: vec![-1.0, 0.5, 2.0], weights: vec![0.2, 0.3, 0.5] };
        prop_assert!([-1.0, 0.5, 2.0].contains(&p.sample(u)));
        let q = Potential::Uniform { low: -1.0, high: 2.0 };
        let s = q.sample(u);
        prop_assert!((-1.0..=2.0).contains(&s));
    }
}
