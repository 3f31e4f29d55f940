//! Empirical regularity constants of the circle maps and contraction diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::{Cocycle, WordStream};
use crate::mat2::{circle_dist, operator_norm, proj_apply, proj_derivative, singular_max};
use crate::rng::{derive_seed, UniformStream, PROBE_STREAM, WORD_STREAM};

/// Sampled suprema; multiply by [`SAFETY_FACTOR`] before using them as bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionConstants {
    /// `sup |∂_x log f̃′|`.
    pub kappa: f64,
    /// `sup |∂_a log f̃′|`.
    pub c: f64,
    /// `sup f̃′`, exact per sampled `(a, ω)`.
    pub l: f64,
    /// `sup |∂_a f̃|`.
    pub l_p: f64,
    pub m_hat: f64,
    pub delta_hat: f64,
    /// Points per axis of the sampling grid.
    pub grid_density: usize,
}

pub const SAFETY_FACTOR: f64 = 1.1;

impl DistortionConstants {
    pub fn inflated(&self, factor: f64) -> Self {
        DistortionConstants {
            kappa: self.kappa * factor,
            c: self.c * factor,
            l: self.l * factor,
            l_p: self.l_p * factor,
            ..*self
        }
    }

    /// `⌈L_p |J|⌉ + 1`, the bound on turns gained by the whole interval in one step.
    pub fn turn_bound(&self, j_len: f64) -> usize {
        (self.l_p * j_len).ceil() as usize + 1
    }
}

fn letters_for<F: Cocycle>(family: &F, count: usize) -> Vec<F::Letter> {
    match family.atoms() {
        Some(at) => at.into_iter().map(|(w, _)| w).collect(),
        None => {
            let mut s = UniformStream::new(3, PROBE_STREAM);
            (0..count).map(|_| family.draw(s.next_pair())).collect()
        }
    }
}

/// Suprema over a `grid_density × grid_density` grid of `(a, x)` and all letters
/// (or `grid_density` sampled letters), using central differences. `L` is taken as
/// `max ‖M‖²` over the `(a, ω)` samples since the peak of `f̃′` in `x` is too sharp to sample.
pub fn distortion_constants<F: Cocycle>(family: &F, grid_density: usize) -> Result<DistortionConstants> {
    if grid_density < 100 {
        return Err(invalid("grid_density must be at least 100"));
    }
    let j = family.interval();
    let ha = j.len() * 1e-5;
    let hx = 1e-5;
    let letters = letters_for(family, grid_density);
    let rows: Vec<[f64; 6]> = (0..grid_density)
        .into_par_iter()
        .map(|g| {
            let a = j.lo + ha + (j.len() - 2.0 * ha) * g as f64 / (grid_density - 1) as f64;
            let mut acc = [0.0, 0.0, 0.0, 0.0, 0.0, f64::INFINITY];
            for w in &letters {
                let m = family.matrix(a, w);
                let mp = family.matrix(a + ha, w);
                let mm = family.matrix(a - ha, w);
                let norm = operator_norm(&m);
                acc[4] = acc[4].max(norm).max(singular_max(&family.matrix_da(a, w)));
                // sup_x f̃′ is attained on the most contracted direction and equals ‖M‖².
                acc[2] = acc[2].max(norm * norm);
                for k in 0..grid_density {
                    let x = (k as f64 + 0.5) / grid_density as f64;
                    let lf = |mat, y| proj_derivative(mat, y).ln();
                    let kappa = (lf(&m, x + hx) - lf(&m, x - hx)).abs() / (2.0 * hx);
                    let c = (lf(&mp, x) - lf(&mm, x)).abs() / (2.0 * ha);
                    let l = proj_derivative(&m, x);
                    let dl = (family.lift(a + ha, w, x) - family.lift(a - ha, w, x)) / (2.0 * ha);
                    acc[0] = acc[0].max(kappa);
                    acc[1] = acc[1].max(c);
                    acc[2] = acc[2].max(l);
                    acc[3] = acc[3].max(dl.abs());
                    acc[5] = acc[5].min(dl);
                }
            }
            acc
        })
        .collect();
    let mut out = [0.0, 0.0, 0.0, 0.0, 0.0, f64::INFINITY];
    for r in &rows {
        for i in 0..5 {
            out[i] = f64::max(out[i], r[i]);
        }
        out[5] = out[5].min(r[5]);
    }
    Ok(DistortionConstants {
        kappa: out[0],
        c: out[1],
        l: out[2].max(1.0),
        l_p: out[3],
        m_hat: out[4],
        delta_hat: out[5],
        grid_density,
    })
}

/// Outcome of the distortion inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionCheck {
    /// Largest `LHS − RHS` over the samples; nonpositive when the bound holds.
    pub worst_slack: f64,
    pub worst_lhs: f64,
    pub rhs: f64,
    pub samples: usize,
}

/// Compares `|log f̃′_{[0,m],a₃}(y₃) − log f̃′_{[0,m],a₁}(y₁)|` with
/// `κ Σ_{k<m″} |Y_k| + C |a₂ − a₁| m″` for random `a₃ ∈ cell`, `y₃ ∈ x_interval`, `m ≤ m″`,
/// where `m″` is the word length and `Y_k` spans the orbits of `(a₁, y₁)` and `(a₂, y₂)`.
///
/// The constants are used as given; pass [`DistortionConstants::inflated`] values.
pub fn check_distortion_bound<F: Cocycle>(
    family: &F,
    word: &WordStream<F::Letter>,
    constants: &DistortionConstants,
    cell: (f64, f64),
    x_interval: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<DistortionCheck> {
    let n = word.len();
    if n == 0 || n > 1000 || samples == 0 {
        return Err(invalid("word length must be in 1..=1000 and samples positive"));
    }
    let (a1, a2) = cell;
    let (y1, y2) = x_interval;
    let mut lower = vec![y1];
    let mut upper = vec![y2];
    let mut log_d1 = vec![0.0];
    for w in &word.letters {
        let yl = *lower.last().unwrap();
        log_d1.push(log_d1.last().unwrap() + proj_derivative(&family.matrix(a1, w), yl).ln());
        lower.push(family.lift(a1, w, yl));
        let yu = *upper.last().unwrap();
        upper.push(family.lift(a2, w, yu));
    }
    let spread: f64 = (0..n).map(|k| (upper[k] - lower[k]).abs()).sum();
    let rhs = constants.kappa * spread + constants.c * (a2 - a1).abs() * n as f64;
    let lhs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut s = UniformStream::new(derive_seed(seed, r as u64), PROBE_STREAM);
            let [u, v] = s.next_pair();
            let a3 = a1 + (a2 - a1) * u;
            let mut y = y1 + (y2 - y1) * v;
            let m = 1 + ((s.next_f64() * n as f64) as usize).min(n - 1);
            let mut log_d = 0.0;
            for w in &word.letters[..m] {
                log_d += proj_derivative(&family.matrix(a3, w), y).ln();
                y = family.lift(a3, w, y);
            }
            (log_d - log_d1[m]).abs()
        })
        .collect();
    let worst_lhs = lhs.iter().copied().fold(0.0, f64::max);
    Ok(DistortionCheck { worst_slack: worst_lhs - rhs, worst_lhs, rhs, samples })
}

/// `dist(x, y)^s` on the period-one circle.
pub fn phi(x: f64, y: f64, s: f64) -> f64 {
    circle_dist(x, y).powf(s)
}

/// The 32 probe pairs: starts spread over the circle, separations from `1/2` down to `1e-3`.
pub fn probe_pairs() -> Vec<(f64, f64)> {
    (0..32)
        .map(|j| {
            let x = (j as f64 + 0.5) / 32.0 + 1.0 / 97.0;
            let d = 0.5 * (2e-3f64).powf((j % 8) as f64 / 7.0);
            (x.fract(), (x + d).fract())
        })
        .collect()
}

/// Selected contraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionParams {
    pub s: f64,
    pub k: usize,
    /// Largest Monte-Carlo mean of `φ(f_K x, f_K y)/φ(x, y)` over the probe pairs.
    pub ratio_hat: f64,
    pub stderr: f64,
    /// `ratio_hat ≤ 1/2`; otherwise the fields describe the smallest ratio found.
    pub valid: bool,
}

/// Table of probe-max ratios for every `(K, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionTable {
    pub k_grid: Vec<usize>,
    pub s_grid: Vec<f64>,
    /// `ratio[ki][si]` and its standard error.
    pub ratio: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
}

/// Monte-Carlo ratios over `pairs` words; word `r` has seed `derive_seed(seed, r)`.
pub fn contraction_table<F: Cocycle>(
    family: &F,
    a: f64,
    s_grid: &[f64],
    k_grid: &[usize],
    pairs: usize,
    seed: u64,
) -> Result<ContractionTable> {
    if pairs < 2 || s_grid.is_empty() || k_grid.is_empty() || k_grid.contains(&0) {
        return Err(invalid("contraction needs pairs, s values and positive K values"));
    }
    let probes = probe_pairs();
    let k_max = *k_grid.iter().max().unwrap();
    let d0: Vec<f64> = probes.iter().map(|(x, y)| circle_dist(*x, *y)).collect();
    let per_word: Vec<Vec<f64>> = (0..pairs)
        .into_par_iter()
        .map(|r| {
            let mut s = UniformStream::new(derive_seed(seed, r as u64), WORD_STREAM);
            let mut pts: Vec<(f64, f64)> = probes.clone();
            let mut out = Vec::with_capacity(k_grid.len() * pts.len());
            for step in 1..=k_max {
                let m = family.matrix(a, &family.draw(s.next_pair()));
                for p in pts.iter_mut() {
                    *p = (proj_apply(&m, p.0), proj_apply(&m, p.1));
                }
                if k_grid.contains(&step) {
                    out.extend(pts.iter().map(|(x, y)| circle_dist(*x, *y)));
                }
            }
            out
        })
        .collect();
    let mut ks: Vec<usize> = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let np = probes.len();
    let mut ratio = Vec::new();
    let mut stderr = Vec::new();
    for ki in 0..ks.len() {
        let mut rrow = Vec::new();
        let mut srow = Vec::new();
        for &s in s_grid {
            let mut worst = (f64::NEG_INFINITY, 0.0);
            for (j, d) in d0.iter().enumerate() {
                let xs: Vec<f64> = per_word.iter().map(|w| (w[ki * np + j] / d).powf(s)).collect();
                let (mean, se) = crate::lyapunov::mean_stderr(&xs);
                if mean > worst.0 {
                    worst = (mean, se);
                }
            }
            rrow.push(worst.0);
            srow.push(worst.1);
        }
        ratio.push(rrow);
        stderr.push(srow);
    }
    Ok(ContractionTable { k_grid: ks, s_grid: s_grid.to_vec(), ratio, stderr })
}

/// Smallest `K`, then largest `s`, whose probe-max ratio is at most `1/2`.
pub fn estimate_contraction<F: Cocycle>(
    family: &F,
    a: f64,
    s_grid: &[f64],
    k_grid: &[usize],
    pairs: usize,
    seed: u64,
) -> Result<ContractionParams> {
    if pairs < 1000 {
        return Err(invalid("estimate_contraction needs at least 1000 pairs"));
    }
    let t = contraction_table(family, a, s_grid, k_grid, pairs, seed)?;
    Ok(select_contraction(&t))
}

pub fn select_contraction(t: &ContractionTable) -> ContractionParams {
    let mut order: Vec<usize> = (0..t.s_grid.len()).collect();
    order.sort_by(|&i, &j| t.s_grid[j].total_cmp(&t.s_grid[i]));
    let mut best = ContractionParams { s: t.s_grid[0], k: t.k_grid[0], ratio_hat: f64::INFINITY, stderr: 0.0, valid: false };
    for (ki, &k) in t.k_grid.iter().enumerate() {
        for &si in &order {
            let r = t.ratio[ki][si];
            if r <= 0.5 {
                return ContractionParams { s: t.s_grid[si], k, ratio_hat: r, stderr: t.stderr[ki][si], valid: true };
            }
            if r < best.ratio_hat {
                best = ContractionParams { s: t.s_grid[si], k, ratio_hat: r, stderr: t.stderr[ki][si], valid: false };
            }
        }
    }
    best
}

/// Quantiles of coupled-orbit distances at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncRow {
    pub m: usize,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).floor() as usize]
}

/// Distances `dist(f_{m,a}(x), f_{m,a′}(y))` at `m = n/4, n/2, n` for the given starts,
/// pair `r` driven by the word with seed `derive_seed(seed, r)`.
pub fn sync_distance_from<F: Cocycle>(
    family: &F,
    a: f64,
    a_prime: f64,
    n: usize,
    starts: &[(f64, f64)],
    seed: u64,
) -> Result<Vec<SyncRow>> {
    if n < 4 || starts.is_empty() {
        return Err(invalid("sync_distance needs n >= 4 and at least one pair"));
    }
    let checkpoints = [n / 4, n / 2, n];
    let dists: Vec<[f64; 3]> = starts
        .par_iter()
        .enumerate()
        .map(|(r, &(x0, y0))| {
            let mut s = UniformStream::new(derive_seed(seed, r as u64), WORD_STREAM);
            let (mut x, mut y) = (x0, y0);
            let mut out = [0.0; 3];
            for step in 1..=n {
                let w = family.draw(s.next_pair());
                x = proj_apply(&family.matrix(a, &w), x);
                y = proj_apply(&family.matrix(a_prime, &w), y);
                for (c, m) in checkpoints.iter().enumerate() {
                    if *m == step {
                        out[c] = circle_dist(x, y);
                    }
                }
            }
            out
        })
        .collect();
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let mut v: Vec<f64> = dists.iter().map(|d| d[c]).collect();
            v.sort_by(f64::total_cmp);
            SyncRow { m, q10: quantile(&v, 0.1), q50: quantile(&v, 0.5), q90: quantile(&v, 0.9) }
        })
        .collect())
}

/// [`sync_distance_from`] with independent uniform starts.
pub fn sync_distance<F: Cocycle>(family: &F, a: f64, a_prime: f64, n: usize, pairs: usize, seed: u64) -> Result<Vec<SyncRow>> {
    if pairs < 100 {
        return Err(invalid("sync_distance needs at least 100 pairs"));
    }
    let mut s = UniformStream::new(derive_seed(seed, 0x5359), PROBE_STREAM);
    let starts: Vec<(f64, f64)> = (0..pairs).map(|_| (s.next_f64(), s.next_f64())).collect();
    sync_distance_from(family, a, a_prime, n, &starts, seed)
}
