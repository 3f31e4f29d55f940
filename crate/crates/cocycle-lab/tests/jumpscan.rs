use std::f64::consts::{LN_2, PI};

use cocycle_lab::family::*;
use cocycle_lab::jumpscan::*;
use cocycle_lab::mat2::*;
use cocycle_lab::Error;
use proptest::prelude::*;

fn bernoulli(j: (f64, f64)) -> SchrodingerFamily {
    make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(j.0, j.1).unwrap()).unwrap()
}

/// `true` letters are `diag(2, 1/2)`; `false` letters are that matrix conjugated so its
/// contracting direction sits at `a − 1/2`.
struct Synthetic;

impl Cocycle for Synthetic {
    type Letter = bool;
    fn interval(&self) -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }
    fn block_size(&self) -> usize {
        1
    }
    fn draw(&self, u: [f64; 2]) -> bool {
        u[0] < 0.5
    }
    fn matrix(&self, a: f64, w: &bool) -> Mat2 {
        let d = Mat2::new(2.0, 0.0, 0.0, 0.5).unwrap();
        if *w {
            d
        } else {
            let theta = PI * (a - 0.5) - PI / 2.0;
            Mat2::rotation(theta).mul_raw(&d).mul_raw(&Mat2::rotation(-theta))
        }
    }
    fn matrix_da(&self, _a: f64, _w: &bool) -> Mat2 {
        Mat2::new_unchecked(0.0, 0.0, 0.0, 0.0)
    }
    fn atoms(&self) -> Option<Vec<(bool, f64)>> {
        None
    }
}

#[test]
fn pure_rotation_table_columns() {
    let f = make_rotation_family(Mat2::IDENTITY, Mat2::IDENTITY, 0.5, Interval::new(0.0, 1.0).unwrap()).unwrap();
    let word = sample_word(&f, 1, 50);
    let t = trajectory_table(&f, &word, &[0.4], 0.1).unwrap();
    assert_eq!(t.cells(), 0);
    for m in 0..=50 {
        assert!((t.get(m, 0) - (0.1 + m as f64 * 0.4 / PI)).abs() < 1e-12);
    }
    assert!(trajectory_table(&f, &word, &[], 0.1).is_err());
}

#[test]
fn rows_telescope() {
    let f = bernoulli((0.3, 0.9));
    let word = sample_word(&f, 2, 2000);
    let t = trajectory_table(&f, &word, &f.j.grid(500), 0.0).unwrap();
    for m in (0..=2000).step_by(97) {
        let sum: f64 = (1..=500).map(|i| t.interval_len(m, i)).sum();
        let span = t.get(m, 500) - t.get(m, 0);
        assert!((sum - span).abs() <= 1e-9 * span.abs().max(1.0), "{m} {sum} {span}");
    }
}

#[test]
fn streaming_matches_table() {
    let f = bernoulli((0.3, 0.9));
    let word = sample_word(&f, 3, 800);
    let grid = f.j.grid(300);
    let lam: Vec<(f64, f64)> = vec![(0.3, 0.06), (0.9, 0.06)];
    let (table, full) = scan_word(&f, &word, &grid, 0.0, 0.05, &lam).unwrap();
    let stream = scan_word_streaming(&f, &word, &grid, 0.0, 0.05, &lam).unwrap();
    assert_eq!(full, stream);
    let (classes, last) = classify_streaming(&f, &word, &grid, 0.0, 0.05).unwrap();
    assert_eq!(classes, classify_intervals(&table, 0.05).unwrap());
    assert_eq!(last, table.row(800));
}

#[test]
fn classification_rejects_bad_epsilon() {
    let f = bernoulli((0.3, 0.9));
    let word = sample_word(&f, 3, 20);
    let t = trajectory_table(&f, &word, &f.j.grid(4), 0.0).unwrap();
    assert!(classify_intervals(&t, 0.0).is_err());
    assert!(classify_intervals(&t, 0.5).is_err());
}

#[test]
fn jump_then_opinion_changer_is_bad() {
    let eps = 0.05;
    let n = 400;
    let row: Vec<f64> = (0..=n).map(|m| if (100..110).contains(&m) { 0.2 } else if m > 300 { 1.02 } else { 0.0 }).collect();
    let c = classify_lengths(1, &row, eps);
    assert_eq!((c.kind, c.m0), (ClassKind::Bad, Some(100)));
}

#[test]
fn synthetic_cancellation_is_midpoint() {
    let n = 40;
    let letters: Vec<bool> = (0..n).map(|k| k < n / 2).collect();
    let word = WordStream { seed: 0, letters };
    let c = find_cancellation_param(&Synthetic, &word, (0.4, 0.6), n / 2, 0.3).unwrap();
    assert!((c.a - 0.5).abs() < 1e-6, "{c:?}");
    assert!(c.residual < 1e-6);
    // x⁺ of the first half and x⁻ of the second agree at the returned parameter.
    let t = product(&Synthetic, c.a, &word.letters[..n / 2]);
    let s = product(&Synthetic, c.a, &word.letters[n / 2..]);
    assert!(angle_residual(t.singular().1, s.singular().2) < 1e-6);
}

#[test]
fn synthetic_cancellation_outside_cell_is_no_crossing() {
    let n = 40;
    let word = WordStream { seed: 0, letters: (0..n).map(|k| k < n / 2).collect() };
    assert!(matches!(find_cancellation_param(&Synthetic, &word, (0.6, 0.7), n / 2, 0.3), Err(Error::NoCrossing)));
    assert!(matches!(find_cancellation_param(&Synthetic, &word, (0.4, 0.6), 0, 0.3), Err(Error::NoCrossing)));
}

#[test]
fn bernoulli_jump_cells_are_located() {
    let f = bernoulli((0.5, 0.6));
    let word = sample_word(&f, 4, 2000);
    let lam = vec![(0.5, 0.06), (0.6, 0.06)];
    let grid = f.j.grid(4000);
    let r = scan_word_streaming(&f, &word, &grid, 0.0, 0.05, &lam).unwrap();
    assert!(r.counts.jump >= 10, "{:?}", r.counts);
    assert!(r.records.len() as f64 >= 0.95 * r.counts.jump as f64, "{} {:?}", r.records.len(), r.no_crossing);
    for rec in &r.records {
        assert!(rec.residual < 1e-6);
        assert!(rec.a_k >= grid[rec.cell - 1] && rec.a_k <= grid[rec.cell]);
        assert!(rec.psi_dev >= 0.0);
        let m0 = r.classes[rec.cell - 1].m0.unwrap();
        assert!(rec.m_cancel >= m0 && rec.m_cancel <= rec.m_k);
    }
}

#[test]
fn psi_examples() {
    assert_eq!(psi(5, 3), 3);
    assert_eq!(psi(5, 7), 3);
    assert_eq!(psi(5, 12), 2);
    assert_eq!(psi(9, 18), 0);
    assert_eq!(psi(0, 11), 11);
}

#[test]
fn psi_deviation_of_constant_family() {
    let f = make_constant_family(Mat2::diag(2.0));
    let word = constant_word((), 100);
    let dev = verify_psi_shape(&f, &word, 0.0, 20, LN_2);
    assert!((dev - 2.0 * 20.0 * LN_2 / 100.0).abs() < 1e-12);
    assert!(verify_psi_shape(&f, &word, 0.0, 0, LN_2) < 1e-12);
}

#[test]
fn statistics_of_nothing() {
    let j = Interval::new(0.0, 1.0).unwrap();
    let s = jump_statistics(&[], 0, &[(0.0, 0.3), (1.0, 0.3)], 100, j);
    assert_eq!((s.relative_gap, s.discrepancy, s.expected), (0.0, 0.0, 0.0));
}

#[test]
fn statistics_of_quantile_records() {
    let n = 400;
    let j = Interval::new(0.0, 1.0).unwrap();
    let records: Vec<JumpRecord> = (0..400)
        .map(|k| JumpRecord {
            cell: 1,
            m_k: ((k % 20) as f64 + 0.5) as usize * n / 20 + n / 40,
            m_cancel: 0,
            a_k: ((k / 20) as f64 + 0.5) / 20.0,
            residual: 0.0,
            lambda_hat: 0.1,
            psi_dev: 0.0,
        })
        .collect();
    let s = jump_statistics(&records, 400, &[(0.0, 0.0), (1.0, 1.0)], n, j);
    assert_eq!(s.relative_gap, 0.0);
    assert!(s.discrepancy <= 1.0 / 20.0, "{}", s.discrepancy);
}

#[test]
fn cover_statistic_cases() {
    let zero = cover_statistic(&[(500, 0, 4000), (1000, 0, 8000), (2000, 0, 16000)], &[0.5, 1.0], 0.6).unwrap();
    assert!(zero.iter().all(|r| r.values.iter().all(|v| *v == 0.0) && r.log_slope.is_none()));
    let e = [(500, 40, 4000), (1000, 70, 8000), (2000, 130, 16000)];
    let d0 = cover_statistic(&e, &[0.0], 0.6).unwrap();
    assert_eq!(d0[0].values, vec![40.0, 70.0, 130.0]);
    assert!(cover_statistic(&e[..2], &[0.0], 0.6).is_err());
}

#[test]
fn exceedance_profile_is_cumulative() {
    let classes = [
        IntervalClass { cell: 1, kind: ClassKind::Small, m0: None },
        IntervalClass { cell: 2, kind: ClassKind::Jump, m0: Some(3) },
        IntervalClass { cell: 3, kind: ClassKind::Bad, m0: Some(1) },
    ];
    assert_eq!(exceedance_profile(&classes, 4), vec![0, 1, 1, 2, 2]);
}

proptest! {
    #[test]
    fn psi_is_a_one_lipschitz_tent(mp in 0usize..200, m in 0usize..600) {
        let d = psi(mp, m + 1) as i64 - psi(mp, m) as i64;
        prop_assert!(d.abs() == 1 || (m + 1 == 2 * mp && d == -1));
        prop_assert!(psi(mp, m) <= m);
    }

    #[test]
    fn classification_depends_only_on_its_row(seed in 0u64..1000, flip in 0usize..60) {
        let f = bernoulli((0.3, 0.9));
        let word = sample_word(&f, seed, 120);
        let grid = f.j.grid(60);
        let t = trajectory_table(&f, &word, &grid, 0.0).unwrap();
        let all = classify_intervals(&t, 0.05).unwrap();
        let i = flip + 1;
        let row: Vec<f64> = (0..=120).map(|m| t.interval_len(m, i)).collect();
        prop_assert_eq!(classify_lengths(i, &row, 0.05), all[flip]);
    }
}
