//! Lyapunov exponents, large-deviation frequencies and the uniform upper bound scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::family::{Cocycle, WordStream};
use crate::mat2::{LogMat, LogVec};
use crate::rng::{derive_seed, UniformStream, WORD_STREAM};

/// Exponent estimate in nats per step of the family (per block for paired families).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LEEstimate {
    pub a: f64,
    pub lambda_hat: f64,
    pub stderr: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `log ‖T_n‖` along the word with the given seed, generated on the fly.
pub fn log_norm_of_word<F: Cocycle>(family: &F, a: f64, n: usize, seed: u64) -> f64 {
    let mut s = UniformStream::new(seed, WORD_STREAM);
    let mut t = LogMat::identity();
    for _ in 0..n {
        t.push(&family.matrix(a, &family.draw(s.next_pair())));
    }
    t.log_norm()
}

/// Mean of `(1/n) log ‖T_n‖` over `reps` words; replicate `r` uses `derive_seed(seed, r)`.
pub fn estimate_le<F: Cocycle>(family: &F, a: f64, n: usize, reps: usize, seed: u64) -> Result<LEEstimate> {
    if n < 100 || reps < 1 {
        return Err(invalid("estimate_le needs n >= 100 and reps >= 1"));
    }
    let rates: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| log_norm_of_word(family, a, n, derive_seed(seed, r as u64)) / n as f64)
        .collect();
    let (lambda_hat, stderr) = mean_stderr(&rates);
    Ok(LEEstimate { a, lambda_hat, stderr, n, reps, seed })
}

/// Seed used for grid node `i` by [`le_curve`].
pub fn node_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, 0x4c45_0000 + i as u64)
}

/// [`estimate_le`] at every node with independent derived seeds, in grid order.
pub fn le_curve<F: Cocycle>(family: &F, grid: &[f64], n: usize, reps: usize, seed: u64) -> Result<Vec<LEEstimate>> {
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, &a)| estimate_le(family, a, n, reps, node_seed(seed, i)))
        .collect()
}

/// Linear interpolation of a curve given as `(a, value)` pairs sorted by `a`.
pub fn interpolate(points: &[(f64, f64)], a: f64) -> f64 {
    match points.len() {
        0 => f64::NAN,
        1 => points[0].1,
        _ => {
            let k = points.partition_point(|p| p.0 <= a).clamp(1, points.len() - 1);
            let (a0, y0) = points[k - 1];
            let (a1, y1) = points[k];
            if a1 == a0 {
                return y0;
            }
            let t = ((a - a0) / (a1 - a0)).clamp(0.0, 1.0);
            y0 + t * (y1 - y0)
        }
    }
}

/// Violation frequencies of the `ε`-band and the fitted exponential rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LDRate {
    pub epsilon: f64,
    pub zeta_hat: f64,
    pub r_squared: f64,
    pub n_list: Vec<usize>,
    pub p_hat: Vec<f64>,
    /// Band center, `(1/n) log ‖T_n e₁‖` averaged at the largest `n`.
    pub lambda_ref: f64,
}

/// Least-squares slope, intercept and `R²` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Frequencies of `|(1/n) log ‖T_n e₁‖ − λ̂| > ε` along nested prefixes of one word per replicate.
pub fn ld_rate<F: Cocycle>(
    family: &F,
    a: f64,
    epsilon: f64,
    n_list: &[usize],
    reps: usize,
    seed: u64,
) -> Result<LDRate> {
    if !(epsilon > 0.0) || n_list.len() < 3 || reps < 1000 {
        return Err(invalid("ld_rate needs epsilon > 0, three sizes and reps >= 1000"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(invalid("n_list must be positive and increasing"));
    }
    let n_max = *n_list.last().unwrap();
    let logs: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut s = UniformStream::new(derive_seed(seed, r as u64), WORD_STREAM);
            let mut v = LogVec::new([1.0, 0.0]);
            let mut out = Vec::with_capacity(n_list.len());
            let mut next = 0;
            for m in 1..=n_max {
                v.push(&family.matrix(a, &family.draw(s.next_pair())));
                if m == n_list[next] {
                    out.push(v.log_len);
                    next += 1;
                }
            }
            out
        })
        .collect();
    let last = n_list.len() - 1;
    let lambda_ref = logs.iter().map(|l| l[last]).sum::<f64>() / (reps as f64 * n_max as f64);
    let p_hat: Vec<f64> = n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let bad = logs.iter().filter(|l| (l[j] / n as f64 - lambda_ref).abs() > epsilon).count();
            bad as f64 / reps as f64
        })
        .collect();
    if p_hat.iter().all(|p| *p == 0.0) {
        return Err(Error::InsufficientEvents { lower_bound: (reps as f64).ln() / n_max as f64 });
    }
    let floor = 1.0 / reps as f64;
    let x: Vec<f64> = n_list.iter().map(|n| *n as f64).collect();
    let y: Vec<f64> = p_hat.iter().map(|p| -p.max(floor).ln()).collect();
    let (zeta_hat, _, r_squared) = linear_fit(&x, &y);
    Ok(LDRate { epsilon, zeta_hat, r_squared, n_list: n_list.to_vec(), p_hat, lambda_ref })
}

/// Result of the uniform upper bound scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperCheckReport {
    pub n: usize,
    pub epsilon_prime: f64,
    pub nodes: usize,
    /// Pairs checked per node.
    pub pairs_per_node: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    /// Largest `log ‖T_[m,m′]‖ − λ̂(m′−m) − nε′` seen.
    pub worst_excess: f64,
    pub node_violations: Vec<usize>,
}

/// Checks `log ‖T_[m,m′],a‖ ≤ nε′ + λ̂(a)(m′ − m)` on all prefixes and all dyadic blocks
/// `(m, m + 2^k)`, or on every pair when `all_pairs` is set.
///
/// The band is widened by `stderr·(m′ − m)` of the supplied estimate.
pub fn uniform_upper_check<F: Cocycle>(
    family: &F,
    grid: &[f64],
    word: &WordStream<F::Letter>,
    epsilon_prime: f64,
    curve: &[LEEstimate],
    all_pairs: bool,
) -> Result<UpperCheckReport> {
    if curve.len() != grid.len() {
        return Err(invalid("curve and grid lengths differ"));
    }
    let n = word.len();
    let slack = n as f64 * epsilon_prime;
    let per_node: Vec<(usize, usize, f64)> = grid
        .par_iter()
        .zip(curve.par_iter())
        .map(|(&a, est)| {
            let lam = est.lambda_hat + est.stderr;
            let mut count = 0usize;
            let mut bad = 0usize;
            let mut worst = f64::NEG_INFINITY;
            let mut record = |len: usize, log_norm: f64| {
                let excess = log_norm - est.lambda_hat * len as f64 - slack;
                worst = worst.max(excess);
                count += 1;
                if log_norm - lam * len as f64 - slack > 0.0 {
                    bad += 1;
                }
            };
            let mats: Vec<LogMat> = word.letters.iter().map(|w| LogMat::from_mat(family.matrix(a, w))).collect();
            if all_pairs {
                for m in 0..n {
                    let mut t = LogMat::identity();
                    for (k, f) in mats[m..].iter().enumerate() {
                        t = f.mul(&t);
                        record(k + 1, t.log_norm());
                    }
                }
            } else {
                let mut t = LogMat::identity();
                for (k, f) in mats.iter().enumerate() {
                    t = f.mul(&t);
                    record(k + 1, t.log_norm());
                }
                let mut level = mats;
                let mut span = 1usize;
                // level[m] holds T_[m, m+span]; m = 0 is already a prefix.
                for t in level.iter().skip(1) {
                    record(span, t.log_norm());
                }
                while 2 * span <= n {
                    let next: Vec<LogMat> = (0..=n - 2 * span).map(|m| level[m + span].mul(&level[m])).collect();
                    span *= 2;
                    for t in next.iter().skip(1) {
                        record(span, t.log_norm());
                    }
                    level = next;
                }
            }
            (count, bad, worst)
        })
        .collect();
    let pairs_per_node = per_node.first().map(|p| p.0).unwrap_or(0);
    let violations: usize = per_node.iter().map(|p| p.1).sum();
    let checks: usize = per_node.iter().map(|p| p.0).sum();
    let worst_excess = per_node.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(UpperCheckReport {
        n,
        epsilon_prime,
        nodes: grid.len(),
        pairs_per_node,
        violations,
        violation_fraction: if checks == 0 { 0.0 } else { violations as f64 / checks as f64 },
        worst_excess,
        node_violations: per_node.iter().map(|p| p.1).collect(),
    })
}
