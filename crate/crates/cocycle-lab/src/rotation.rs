//! Rotation numbers, the density of states measure and hyperbolicity tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::{constant_word, sample_word, Cocycle, WordStream};
use crate::lyapunov::mean_stderr;
use crate::mat2::{circle_diff, proj_apply, wrap, LogMat};
use crate::rng::{derive_seed, UniformStream, WORD_STREAM};

/// Lifted displacement `f̃_{n,a}(x̃₀) − x̃₀` along the word with the given seed.
pub fn lift_displacement<F: Cocycle>(family: &F, a: f64, letters: &[F::Letter], x0: f64) -> f64 {
    let mut x = x0;
    for w in letters {
        x = family.lift(a, w, x);
    }
    x - x0
}

/// Mean over `reps` words of `(f̃_{n,a}(x̃₀) − x̃₀)/n`, with its standard error.
pub fn rotation_number<F: Cocycle>(family: &F, a: f64, n: usize, x0: f64, seed: u64, reps: usize) -> Result<(f64, f64)> {
    if n < 1000 || reps < 1 {
        return Err(invalid("rotation_number needs n >= 1000 and reps >= 1"));
    }
    let rhos: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut s = UniformStream::new(derive_seed(seed, r as u64), WORD_STREAM);
            let mut x = x0;
            for _ in 0..n {
                x = family.lift(a, &family.draw(s.next_pair()), x);
            }
            (x - x0) / n as f64
        })
        .collect();
    Ok(mean_stderr(&rhos))
}

/// Rotation numbers along a grid, with one shared word per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationCurve {
    pub grid: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    /// `per_rep[r][i]`: estimate of replicate `r` at node `i`.
    #[serde(skip)]
    pub per_rep: Vec<Vec<f64>>,
}

impl RotationCurve {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.grid.iter().copied().zip(self.rho_hat.iter().copied()).collect()
    }
}

/// Replicate `r` uses the word with seed `derive_seed(seed, r)` at every node.
pub fn rotation_curve<F: Cocycle>(
    family: &F,
    grid: &[f64],
    n: usize,
    x0: f64,
    seed: u64,
    reps: usize,
) -> Result<RotationCurve> {
    if grid.is_empty() || reps < 1 || n < 1 {
        return Err(invalid("rotation_curve needs a grid, n >= 1 and reps >= 1"));
    }
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .map(|r| {
            let word = sample_word(family, derive_seed(seed, r as u64), n);
            grid.par_iter().map(|&a| lift_displacement(family, a, &word.letters, x0) / n as f64).collect()
        })
        .collect();
    let mut rho_hat = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let col: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
        let (m, s) = mean_stderr(&col);
        rho_hat.push(m);
        stderr.push(s);
    }
    Ok(RotationCurve { grid: grid.to_vec(), rho_hat, stderr, n, reps, per_rep })
}

/// Masses of grid cells, `ρ̂(b_i) − ρ̂(b_{i−1})`, per step of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DOSMeasure {
    pub grid: Vec<f64>,
    pub increments: Vec<f64>,
    pub stderr: Vec<f64>,
    pub total: f64,
}

impl DOSMeasure {
    pub fn from_curve(curve: &RotationCurve) -> Self {
        let cells = curve.grid.len().saturating_sub(1);
        let mut increments = Vec::with_capacity(cells);
        let mut stderr = Vec::with_capacity(cells);
        for i in 1..curve.grid.len() {
            let d: Vec<f64> = curve.per_rep.iter().map(|r| r[i] - r[i - 1]).collect();
            let (m, s) = mean_stderr(&d);
            increments.push(m);
            stderr.push(s);
        }
        let total = increments.iter().sum();
        DOSMeasure { grid: curve.grid.clone(), increments, stderr, total }
    }

    /// Mass of the cells lying inside `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.increments
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid[*i] >= lo && self.grid[i + 1] <= hi)
            .map(|(_, m)| m)
            .sum()
    }
}

pub fn dos_measure<F: Cocycle>(family: &F, grid: &[f64], n: usize, seed: u64, reps: usize) -> Result<DOSMeasure> {
    if grid.len() < 2 {
        return Err(invalid("dos_measure needs at least two nodes"));
    }
    Ok(DOSMeasure::from_curve(&rotation_curve(family, grid, n, 0.0, seed, reps)?))
}

/// Outcome of the finite-length hyperbolicity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UHReport {
    pub is_uh: bool,
    /// Smallest `(1/n) log ‖T_n‖` over sampled and periodic probe words.
    pub min_rate: f64,
    /// Largest image length of the circle minus the `1/8`-neighbourhood of `x⁻`.
    pub max_image_diameter: f64,
    /// Expanding directions and contracting directions lie in disjoint arcs.
    pub separated: bool,
    pub words_tested: usize,
}

/// Smallest arc containing all points, as `(start, length)`.
fn hull_arc(points: &[f64]) -> (f64, f64) {
    let mut p = points.to_vec();
    p.sort_by(f64::total_cmp);
    let k = p.len();
    let mut best = (p[0], 0.0);
    let mut gap = 1.0 - (p[k - 1] - p[0]);
    let mut start = p[0];
    for i in 1..k {
        let g = p[i] - p[i - 1];
        if g > gap {
            gap = g;
            start = p[i];
        }
    }
    best.0 = start;
    best.1 = 1.0 - gap;
    best
}

fn in_arc(x: f64, arc: (f64, f64)) -> bool {
    crate::mat2::wrap(x - arc.0) <= arc.1
}

fn probe_words<F: Cocycle>(family: &F, n: usize) -> Vec<WordStream<F::Letter>> {
    let Some(atoms) = family.atoms() else { return Vec::new() };
    let letters: Vec<F::Letter> = atoms.into_iter().map(|(w, _)| w).collect();
    let mut out: Vec<WordStream<F::Letter>> = letters.iter().map(|w| constant_word(*w, n)).collect();
    if letters.len() <= 8 {
        for (i, u) in letters.iter().enumerate() {
            for v in &letters[i + 1..] {
                let l = (0..n).map(|k| if k % 2 == 0 { *u } else { *v }).collect();
                out.push(WordStream { seed: 0, letters: l });
            }
        }
    }
    out
}

/// Uniform hyperbolicity proxy at parameter `a`.
///
/// Requires every tested length-`n` product to grow faster than `eta_floorⁿ`, to map the
/// circle minus a `1/8`-neighbourhood of its contracting direction into an arc shorter
/// than `1/4`, and the expanding directions of all products to avoid the smallest arc
/// holding their contracting directions, and vice versa. Finite alphabets add periodic
/// words of single letters and letter pairs.
pub fn uh_test<F: Cocycle>(family: &F, a: f64, n: usize, words: usize, eta_floor: f64, seed: u64) -> Result<UHReport> {
    if n < 100 || words < 10 {
        return Err(invalid("uh_test needs n >= 100 and words >= 10"));
    }
    let mut all: Vec<WordStream<F::Letter>> =
        (0..words).map(|r| sample_word(family, derive_seed(seed, r as u64), n)).collect();
    all.extend(probe_words(family, n));
    let stats: Vec<(f64, f64, f64, f64)> = all
        .par_iter()
        .map(|w| {
            let mut t = LogMat::identity();
            for l in &w.letters {
                t.push(&family.matrix(a, l));
            }
            let (log_norm, xp, xm) = t.singular();
            let pts: Vec<f64> = (0..=12).map(|k| proj_apply(&t.m, wrap(xm + 0.125 + 0.0625 * k as f64))).collect();
            let diam: f64 = pts.windows(2).map(|p| circle_diff(p[1], p[0])).sum();
            (log_norm / n as f64, xp, xm, diam.abs())
        })
        .collect();
    let min_rate = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min).max(0.0);
    let max_image_diameter = stats.iter().map(|s| s.3).fold(0.0, f64::max);
    let plus: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let minus: Vec<f64> = stats.iter().map(|s| s.2).collect();
    let hp = hull_arc(&plus);
    let hm = hull_arc(&minus);
    let separated = min_rate > 1e-9
        && !minus.iter().any(|x| in_arc(*x, hp))
        && !plus.iter().any(|x| in_arc(*x, hm));
    let is_uh = min_rate > eta_floor.ln() && max_image_diameter < 0.25 && separated;
    Ok(UHReport { is_uh, min_rate, max_image_diameter, separated, words_tested: all.len() })
}

/// Settings for [`johnson_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnsonOptions {
    pub reps: usize,
    pub words: usize,
    pub eta_floor: f64,
}

impl Default for JohnsonOptions {
    fn default() -> Self {
        JohnsonOptions { reps: 4, words: 20, eta_floor: 1e-3f64.exp() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnsonCell {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub increment: f64,
    pub stderr: f64,
    pub flat: bool,
    pub uh: bool,
    pub min_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnsonReport {
    pub n: usize,
    pub cells: Vec<JohnsonCell>,
    /// Cells where flatness and hyperbolicity disagree.
    pub disagreements: Vec<usize>,
    pub disagreement_fraction: f64,
}

impl JohnsonReport {
    /// Disagreement fraction over cells not listed in `exclude`.
    pub fn fraction_excluding(&self, exclude: &[usize]) -> f64 {
        let kept = self.cells.iter().filter(|c| !exclude.contains(&c.index)).count();
        let bad = self.disagreements.iter().filter(|i| !exclude.contains(i)).count();
        if kept == 0 {
            0.0
        } else {
            bad as f64 / kept as f64
        }
    }

    /// Indices of cells containing any of the given parameters.
    pub fn cells_containing(&self, points: &[f64]) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| points.iter().any(|p| *p >= c.lo && *p <= c.hi))
            .map(|c| c.index)
            .collect()
    }
}

/// Compares rotation-number flatness (`|Δρ̂| < max(3·stderr, 1/n)`) with [`uh_test`] at cell midpoints.
pub fn johnson_scan<F: Cocycle>(
    family: &F,
    grid: &[f64],
    n: usize,
    seed: u64,
    opts: &JohnsonOptions,
) -> Result<JohnsonReport> {
    let dos = dos_measure(family, grid, n, seed, opts.reps)?;
    let uh: Vec<UHReport> = (1..grid.len())
        .into_par_iter()
        .map(|i| uh_test(family, 0.5 * (grid[i - 1] + grid[i]), n, opts.words, opts.eta_floor, derive_seed(seed, 0x5548 + i as u64)))
        .collect::<Result<_>>()?;
    let cells: Vec<JohnsonCell> = uh
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let inc = dos.increments[i];
            let se = dos.stderr[i];
            JohnsonCell {
                index: i,
                lo: grid[i],
                hi: grid[i + 1],
                increment: inc,
                stderr: se,
                flat: inc.abs() < (3.0 * se).max(1.0 / n as f64),
                uh: u.is_uh,
                min_rate: u.min_rate,
            }
        })
        .collect();
    let disagreements: Vec<usize> = cells.iter().filter(|c| c.flat != c.uh).map(|c| c.index).collect();
    let disagreement_fraction = disagreements.len() as f64 / cells.len().max(1) as f64;
    Ok(JohnsonReport { n, cells, disagreements, disagreement_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_wrapping_points() {
        let (s, l) = hull_arc(&[0.95, 0.05, 0.0]);
        assert_eq!(s, 0.95);
        assert!((l - 0.1).abs() < 1e-12);
        assert!(in_arc(0.99, (s, l)));
        assert!(!in_arc(0.5, (s, l)));
    }
}
