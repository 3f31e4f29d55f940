//! Parameter scans over one shared word: trajectory tables, interval classes,
//! cancellation parameters and jump statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::family::{lift_orbit, Cocycle, Interval, WordStream};
use crate::lyapunov::interpolate;
use crate::mat2::{circle_diff, circle_dist, wrap, LogMat};

/// Lifted orbits `x̃_{m,i}` of one base point for every grid node, `m = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub grid: Vec<f64>,
    pub n: usize,
    pub x0: f64,
    pub word_seed: u64,
    /// Row-major, `(n + 1) × grid.len()`.
    pub values: Vec<f64>,
}

impl TrajectoryTable {
    #[inline]
    pub fn get(&self, m: usize, i: usize) -> f64 {
        self.values[m * self.grid.len() + i]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[m * w..(m + 1) * w]
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    /// `|X_{m,i}| = x̃_{m,i} − x̃_{m,i−1}` for `i ≥ 1`.
    #[inline]
    pub fn interval_len(&self, m: usize, i: usize) -> f64 {
        self.get(m, i) - self.get(m, i - 1)
    }
}

/// Builds the table; fails if some row is not monotone in the node index.
pub fn trajectory_table<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    grid: &[f64],
    x0: f64,
) -> Result<TrajectoryTable> {
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    let n = word.len();
    let cols: Vec<Vec<f64>> = grid.par_iter().map(|&a| lift_orbit(family, a, &word.letters, x0)).collect();
    let w = grid.len();
    let mut values = vec![0.0; (n + 1) * w];
    for (i, col) in cols.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            values[m * w + i] = *v;
        }
    }
    for m in 1..=n {
        let row = &values[m * w..(m + 1) * w];
        if let Some(k) = (1..w).find(|&i| row[i] < row[i - 1] - 1e-9) {
            return Err(Error::MonotonicityViolation(row[k] - row[k - 1]));
        }
    }
    Ok(TrajectoryTable { grid: grid.to_vec(), n, x0, word_seed: word.seed, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Small,
    OpinionChanger,
    Jump,
    Bad,
}

/// Class of cell `[b_{cell−1}, b_cell]`, `cell ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalClass {
    pub cell: usize,
    pub kind: ClassKind,
    /// First index with `|X| > ε′`.
    pub m0: Option<usize>,
}

/// Steps after the first exceedance that are exempt from the tail conditions: `⌊ε′n⌋`.
fn tail_offset(epsilon_prime: f64, n: usize) -> usize {
    (epsilon_prime * n as f64 + 1e-9).floor() as usize
}

/// `m_k = m0 + ⌈ε′n⌉`, clamped to `n`.
pub fn jump_index(m0: usize, epsilon_prime: f64, n: usize) -> usize {
    (m0 + (epsilon_prime * n as f64 - 1e-9).ceil() as usize).min(n)
}

/// Per-cell state for classification while rows arrive in order.
#[derive(Debug, Clone, Copy)]
struct CellState {
    m0: Option<usize>,
    tail_small: bool,
    tail_jump: bool,
    last: f64,
}

impl CellState {
    fn new() -> Self {
        CellState { m0: None, tail_small: true, tail_jump: true, last: 0.0 }
    }

    #[inline]
    fn update(&mut self, m: usize, x: f64, eps: f64, offset: usize) {
        self.last = x;
        match self.m0 {
            None => {
                if x > eps {
                    self.m0 = Some(m);
                }
            }
            Some(m0) => {
                if m > m0 + offset {
                    if !(x < eps) {
                        self.tail_small = false;
                    }
                    if !(x > 1.0 && x < 1.0 + eps) {
                        self.tail_jump = false;
                    }
                }
            }
        }
    }

    fn finish(&self, cell: usize, eps: f64, offset: usize, n: usize) -> IntervalClass {
        let kind = match self.m0 {
            None => ClassKind::Small,
            Some(m0) if m0 + offset >= n => {
                // No tail left to observe: judge by the final length.
                if self.last > 1.0 && self.last < 1.0 + eps {
                    ClassKind::Jump
                } else if self.last < eps {
                    ClassKind::OpinionChanger
                } else {
                    ClassKind::Bad
                }
            }
            Some(_) if self.tail_small => ClassKind::OpinionChanger,
            Some(_) if self.tail_jump => ClassKind::Jump,
            Some(_) => ClassKind::Bad,
        };
        IntervalClass { cell, kind, m0: self.m0 }
    }
}

fn check_eps(epsilon_prime: f64) -> Result<()> {
    if !(epsilon_prime > 0.0 && epsilon_prime < 0.5) {
        return Err(invalid("epsilon_prime must lie in (0, 1/2)"));
    }
    Ok(())
}

/// Classifies one sequence of interval lengths `X_0, …, X_n`.
pub fn classify_lengths(cell: usize, lengths: &[f64], epsilon_prime: f64) -> IntervalClass {
    let n = lengths.len() - 1;
    let offset = tail_offset(epsilon_prime, n);
    let mut st = CellState::new();
    for (m, x) in lengths.iter().enumerate() {
        st.update(m, *x, epsilon_prime, offset);
    }
    st.finish(cell, epsilon_prime, offset, n)
}

/// Small, opinion-changer, jump or bad, for cells `1..=N`.
pub fn classify_intervals(table: &TrajectoryTable, epsilon_prime: f64) -> Result<Vec<IntervalClass>> {
    check_eps(epsilon_prime)?;
    let offset = tail_offset(epsilon_prime, table.n);
    Ok((1..=table.cells())
        .into_par_iter()
        .map(|i| {
            let mut st = CellState::new();
            for m in 0..=table.n {
                st.update(m, table.interval_len(m, i), epsilon_prime, offset);
            }
            st.finish(i, epsilon_prime, offset, table.n)
        })
        .collect())
}

/// Same classes as [`classify_intervals`] holding one row at a time; also returns the last row.
pub fn classify_streaming<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    grid: &[f64],
    x0: f64,
    epsilon_prime: f64,
) -> Result<(Vec<IntervalClass>, Vec<f64>)> {
    check_eps(epsilon_prime)?;
    let n = word.len();
    let offset = tail_offset(epsilon_prime, n);
    let mut row = vec![x0; grid.len()];
    let mut states = vec![CellState::new(); grid.len().saturating_sub(1)];
    for (i, st) in states.iter_mut().enumerate() {
        st.update(0, row[i + 1] - row[i], epsilon_prime, offset);
    }
    for (m, w) in word.letters.iter().enumerate() {
        row.par_iter_mut().zip(grid.par_iter()).for_each(|(x, &a)| *x = family.lift(a, w, *x));
        for (i, st) in states.iter_mut().enumerate() {
            let x = row[i + 1] - row[i];
            if x < -1e-9 {
                return Err(Error::MonotonicityViolation(x));
            }
            st.update(m + 1, x, epsilon_prime, offset);
        }
    }
    let classes = states.iter().enumerate().map(|(i, st)| st.finish(i + 1, epsilon_prime, offset, n)).collect();
    Ok((classes, row))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub small: usize,
    pub opinion_changer: usize,
    pub jump: usize,
    pub bad: usize,
}

impl ClassCounts {
    pub fn of(classes: &[IntervalClass]) -> Self {
        let mut c = ClassCounts::default();
        for k in classes {
            match k.kind {
                ClassKind::Small => c.small += 1,
                ClassKind::OpinionChanger => c.opinion_changer += 1,
                ClassKind::Jump => c.jump += 1,
                ClassKind::Bad => c.bad += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.small + self.opinion_changer + self.jump + self.bad
    }
}

/// Located cancellation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    pub a: f64,
    /// Circle distance between `x⁺(T_{m̄,a})` and `x⁻(T_{[m̄,m̄′],a})`.
    pub residual: f64,
    pub used_dense_scan: bool,
}

struct CancelProbe<'a, F: Cocycle> {
    family: &'a F,
    letters: &'a [F::Letter],
    x0: f64,
    m_bar: usize,
    m_bar2: usize,
    right_lift: f64,
}

impl<F: Cocycle> CancelProbe<'_, F> {
    /// `(lifted difference, signed circle difference)` of `x⁺` and `x⁻`.
    fn eval(&self, a: f64) -> (f64, f64) {
        let mut x = self.x0;
        let mut t = LogMat::identity();
        for w in &self.letters[..self.m_bar] {
            x = self.family.lift(a, w, x);
            t.push(&self.family.matrix(a, w));
        }
        let (_, xp, _) = t.singular();
        let mut s = LogMat::identity();
        for w in &self.letters[self.m_bar..self.m_bar2] {
            s.push(&self.family.matrix(a, w));
        }
        let (_, _, xm) = s.singular();
        let xp_lift = x + circle_diff(xp, x);
        let base = self.right_lift - 1.0;
        let xm_lift = base + wrap(xm - base);
        (xp_lift - xm_lift, circle_diff(xp, xm))
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut f_lo: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Finds `a` in the cell with `x⁺(T_{m̄,a}) = x⁻(T_{[m̄,m̄′],a})`, `m̄′ = min(2m̄, n)`.
///
/// `x⁺` is lifted next to the lifted orbit of `x0`, which follows it, and `x⁻` into the
/// window `[x̃_{m̄}(b_i) − 1, x̃_{m̄}(b_i))`. Bisection runs on the lifted difference; when
/// its endpoint signs agree or the result misses the tolerance, a 256-point scan of the
/// signed circle difference picks a bracket instead.
pub fn find_cancellation_param<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    cell: (f64, f64),
    m_bar: usize,
    x0: f64,
) -> Result<Cancellation> {
    let n = word.len();
    let m_bar2 = (2 * m_bar).min(n);
    if m_bar == 0 || m_bar2 <= m_bar {
        return Err(Error::NoCrossing);
    }
    let (lo, hi) = cell;
    let right_lift = lift_orbit(family, hi, &word.letters[..m_bar], x0)[m_bar];
    let probe = CancelProbe { family, letters: &word.letters, x0, m_bar, m_bar2, right_lift };
    let tol = 1e-6;
    let (g_lo, _) = probe.eval(lo);
    let (g_hi, _) = probe.eval(hi);
    if (g_lo < 0.0) != (g_hi < 0.0) {
        let a = bisect(lo, hi, g_lo, |a| probe.eval(a).0);
        let r = probe.eval(a).1.abs();
        if r < tol {
            return Ok(Cancellation { a, residual: r, used_dense_scan: false });
        }
    }
    let k = 256;
    let nodes: Vec<f64> = (0..=k).map(|j| lo + (hi - lo) * j as f64 / k as f64).collect();
    let d: Vec<f64> = nodes.iter().map(|&a| probe.eval(a).1).collect();
    let mut best: Option<Cancellation> = None;
    for j in 0..k {
        if (d[j] < 0.0) != (d[j + 1] < 0.0) && d[j].abs() < 0.25 && d[j + 1].abs() < 0.25 {
            let a = bisect(nodes[j], nodes[j + 1], d[j], |a| probe.eval(a).1);
            let r = probe.eval(a).1.abs();
            if r < tol && best.is_none_or(|b| r < b.residual) {
                best = Some(Cancellation { a, residual: r, used_dense_scan: true });
            }
        }
    }
    best.ok_or(Error::NoCrossing)
}

/// `ψ_{m′}(m)`: `m` below `m′`, `2m′ − m` up to `2m′`, then `m − 2m′`.
pub fn psi(m_prime: usize, m: usize) -> usize {
    if m < m_prime {
        m
    } else {
        m.abs_diff(2 * m_prime)
    }
}

/// `max_m |log ‖T_{m,a}‖ − λ̂·ψ_{m_k}(m)| / n` over `m = 1..=n`.
pub fn verify_psi_shape<F: Cocycle>(family: &F, word: &WordStream<F::Letter>, a: f64, m_k: usize, lambda_hat: f64) -> f64 {
    let n = word.len();
    let mut t = LogMat::identity();
    let mut dev: f64 = 0.0;
    for (k, w) in word.letters.iter().enumerate() {
        t.push(&family.matrix(a, w));
        let m = k + 1;
        dev = dev.max((t.log_norm() - lambda_hat * psi(m_k, m) as f64).abs());
    }
    dev / n as f64
}

/// One located jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub cell: usize,
    /// Jump index `m0 + ⌈ε′n⌉`.
    pub m_k: usize,
    /// Index where the cancellation parameter was found, in `[m0, m_k]`.
    pub m_cancel: usize,
    pub a_k: f64,
    pub residual: f64,
    pub lambda_hat: f64,
    pub psi_dev: f64,
}

/// Jump count and the distribution of `(m_k/n, a_k)` against `Leb × DOS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub jumps: usize,
    /// `(ρ̂(b₊) − ρ̂(b₋))·n`.
    pub expected: f64,
    pub relative_gap: f64,
    /// Largest rectangle discrepancy on the 20 × 20 probe lattice.
    pub discrepancy: f64,
}

/// `jumps` counts every Jump cell; the rectangle counts use the located records.
pub fn jump_statistics(records: &[JumpRecord], jumps: usize, rho: &[(f64, f64)], n: usize, j: Interval) -> StatReport {
    let rho_lo = interpolate(rho, j.lo);
    let expected = (interpolate(rho, j.hi) - rho_lo) * n as f64;
    let relative_gap = if expected.abs() > 0.0 {
        (jumps as f64 - expected).abs() / expected.abs()
    } else if jumps == 0 {
        0.0
    } else {
        f64::INFINITY
    };
    let mut discrepancy: f64 = 0.0;
    for p in 1..=20 {
        let s = p as f64 / 20.0;
        for q in 1..=20 {
            let a = if q == 20 { j.hi } else { j.lo + j.len() * q as f64 / 20.0 };
            let count = records.iter().filter(|r| r.m_k as f64 <= s * n as f64 && r.a_k <= a).count();
            let target = s * (interpolate(rho, a) - rho_lo);
            discrepancy = discrepancy.max((count as f64 / n as f64 - target).abs());
        }
    }
    StatReport { jumps, expected, relative_gap, discrepancy }
}

/// `M_n (|J|/N_n)^d` for one exponent `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverRow {
    pub d: f64,
    pub values: Vec<f64>,
    /// Least-squares slope of the log statistic in `n`, absent when some value is zero.
    pub log_slope: Option<f64>,
}

/// `entries` holds `(n, M_n, N_n)`.
pub fn cover_statistic(entries: &[(usize, usize, usize)], d_grid: &[f64], j_len: f64) -> Result<Vec<CoverRow>> {
    if entries.len() < 3 {
        return Err(invalid("cover_statistic needs at least three sizes"));
    }
    Ok(d_grid
        .iter()
        .map(|&d| {
            let values: Vec<f64> =
                entries.iter().map(|&(_, m, big_n)| m as f64 * (j_len / big_n as f64).powf(d)).collect();
            let log_slope = if values.iter().all(|v| *v > 0.0) {
                let x: Vec<f64> = entries.iter().map(|e| e.0 as f64).collect();
                let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
                Some(crate::lyapunov::linear_fit(&x, &y).0)
            } else {
                None
            };
            CoverRow { d, values, log_slope }
        })
        .collect())
}

/// Everything produced by one scan of one word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub word_seed: u64,
    pub counts: ClassCounts,
    pub classes: Vec<IntervalClass>,
    pub records: Vec<JumpRecord>,
    /// Jump cells without a cancellation parameter at any index in `[m0, m_k]`.
    pub no_crossing: Vec<usize>,
    /// `⌊x̃_{n,N} − x̃_{n,0}⌋` minus the number of jump cells.
    pub turn_excess: i64,
}

/// Table, classes, cancellation parameters and ψ deviations for one word.
///
/// `lambda` gives `λ̂(a)` as `(a, value)` pairs for the ψ comparison.
pub fn scan_word<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    grid: &[f64],
    x0: f64,
    epsilon_prime: f64,
    lambda: &[(f64, f64)],
) -> Result<(TrajectoryTable, ScanResult)> {
    let table = trajectory_table(family, word, grid, x0)?;
    let classes = classify_intervals(&table, epsilon_prime)?;
    let last = table.row(table.n).to_vec();
    let result = locate_records(family, word, grid, x0, epsilon_prime, lambda, classes, &last);
    Ok((table, result))
}

/// [`scan_word`] without keeping the table.
pub fn scan_word_streaming<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    grid: &[f64],
    x0: f64,
    epsilon_prime: f64,
    lambda: &[(f64, f64)],
) -> Result<ScanResult> {
    let (classes, last) = classify_streaming(family, word, grid, x0, epsilon_prime)?;
    Ok(locate_records(family, word, grid, x0, epsilon_prime, lambda, classes, &last))
}

#[allow(clippy::too_many_arguments)]
fn locate_records<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    grid: &[f64],
    x0: f64,
    epsilon_prime: f64,
    lambda: &[(f64, f64)],
    classes: Vec<IntervalClass>,
    last: &[f64],
) -> ScanResult {
    let n = word.len();
    let jumps: Vec<IntervalClass> = classes.iter().copied().filter(|c| c.kind == ClassKind::Jump).collect();
    let step = ((epsilon_prime * n as f64 / 10.0).ceil() as usize).max(1);
    let located: Vec<std::result::Result<JumpRecord, usize>> = jumps
        .par_iter()
        .map(|c| {
            let m0 = c.m0.unwrap_or(0);
            let m_k = jump_index(m0, epsilon_prime, n);
            // The crossing can sit anywhere in [m0, m_k]; walk back from the jump index.
            let mut m = m_k;
            loop {
                if let Ok(cp) = find_cancellation_param(family, word, (grid[c.cell - 1], grid[c.cell]), m, x0) {
                    let lambda_hat = interpolate(lambda, cp.a);
                    let psi_dev = verify_psi_shape(family, word, cp.a, m, lambda_hat);
                    return Ok(JumpRecord {
                        cell: c.cell,
                        m_k,
                        m_cancel: m,
                        a_k: cp.a,
                        residual: cp.residual,
                        lambda_hat,
                        psi_dev,
                    });
                }
                if m <= m0.max(1) {
                    return Err(c.cell);
                }
                m = m.saturating_sub(step).max(m0.max(1));
            }
        })
        .collect();
    let mut records = Vec::new();
    let mut no_crossing = Vec::new();
    for r in located {
        match r {
            Ok(rec) => records.push(rec),
            Err(cell) => no_crossing.push(cell),
        }
    }
    let counts = ClassCounts::of(&classes);
    let turns = (last[last.len() - 1] - last[0]).floor() as i64;
    ScanResult {
        word_seed: word.seed,
        counts,
        classes,
        records,
        no_crossing,
        turn_excess: turns - counts.jump as i64,
    }
}

/// Cumulative number of cells whose first exceedance happens at or before each `m`.
pub fn exceedance_profile(classes: &[IntervalClass], n: usize) -> Vec<usize> {
    let mut hist = vec![0usize; n + 1];
    for c in classes {
        if let Some(m0) = c.m0 {
            hist[m0] += 1;
        }
    }
    let mut acc = 0;
    hist.iter()
        .map(|h| {
            acc += h;
            acc
        })
        .collect()
}

/// Circle distance helper re-exported for residual checks.
pub fn angle_residual(x: f64, y: f64) -> f64 {
    circle_dist(x, y)
}
