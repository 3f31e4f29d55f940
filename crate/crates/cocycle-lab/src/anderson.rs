//! One-dimensional Anderson model: transfer solutions, finite-box spectra,
//! eigenfunction decay and piecewise-linear shapes of log-norm sequences.
//!
//! Rates here are per site; the paired Schrödinger family reports per two sites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::family::Potential;
use crate::lyapunov::{interpolate, linear_fit};
use crate::rng::{derive_seed, UniformStream, POTENTIAL_STREAM};

/// Solution of `u(n+1) + u(n−1) + V(n)u(n) = E u(n)` stored as `values[k]·exp(log_scale[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSolution {
    pub values: Vec<f64>,
    pub log_scale: Vec<f64>,
}

impl TransferSolution {
    /// `u(k)` as a plain float (may overflow for long growing solutions).
    pub fn value(&self, k: usize) -> f64 {
        self.values[k] * self.log_scale[k].exp()
    }

    pub fn ln_abs(&self, k: usize) -> f64 {
        self.values[k].abs().ln() + self.log_scale[k]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `u(0) = u0`, `u(1) = u1`, then `u(2)…u(n_steps + 1)` with `V(k) = potential[k − 1]`.
pub fn transfer_solution(potential: &[f64], e: f64, u0: f64, u1: f64, n_steps: usize) -> Result<TransferSolution> {
    if n_steps < 1 || n_steps > potential.len() {
        return Err(invalid("n_steps must be between 1 and the potential length"));
    }
    let mut values = Vec::with_capacity(n_steps + 2);
    let mut log_scale = Vec::with_capacity(n_steps + 2);
    values.extend([u0, u1]);
    log_scale.extend([0.0, 0.0]);
    let (mut prev, mut cur, mut scale) = (u0, u1, 0.0);
    for v in &potential[..n_steps] {
        let mut next = (e - v) * cur - prev;
        if next.abs() > 1e100 {
            let s = next.abs();
            next /= s;
            cur /= s;
            scale += s.ln();
        }
        values.push(next);
        log_scale.push(scale);
        prev = cur;
        cur = next;
    }
    Ok(TransferSolution { values, log_scale })
}

/// Dirichlet box `H = Δ + V` on `L` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxOperator {
    pub potential: Vec<f64>,
}

impl BoxOperator {
    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < n { u[i + 1] } else { 0.0 };
                l + r + self.potential[i] * u[i]
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        2.0 + self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Box with i.i.d. potential drawn from `mu` on the potential stream.
pub fn build_box(mu: &Potential, l: usize, seed: u64) -> Result<BoxOperator> {
    if l < 2 {
        return Err(invalid("box needs at least two sites"));
    }
    mu.check()?;
    let mut s = UniformStream::new(seed, POTENTIAL_STREAM);
    Ok(BoxOperator { potential: (0..l).map(|_| mu.sample(s.next_f64())).collect() })
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(potential: &[f64], x: f64) -> usize {
    let guard = 1e-300;
    let mut count = 0;
    let mut q = 1.0;
    for (i, v) in potential.iter().enumerate() {
        q = if i == 0 { v - x } else { (v - x) - 1.0 / q };
        if q == 0.0 {
            q = -guard;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues in ascending order by bisection on Sturm counts.
pub fn eigenvalues(potential: &[f64]) -> Vec<f64> {
    let (vmin, vmax) = potential.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (lo0, hi0) = (vmin - 2.0 - 1e-9, vmax + 2.0 + 1e-9);
    (0..potential.len())
        .into_par_iter()
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                    break;
                }
                if sturm_count(potential, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub e: f64,
    pub u: Vec<f64>,
}

/// LU factors of a shifted tridiagonal matrix with partial pivoting.
struct TridiagLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn new(potential: &[f64], shift: f64, tiny: f64) -> Self {
        let n = potential.len();
        let mut d: Vec<f64> = potential.iter().map(|v| v - shift).collect();
        let mut du = vec![1.0f64; n.saturating_sub(1)];
        let mut dl = vec![1.0f64; n.saturating_sub(1)];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let f = if d[i] == 0.0 { 0.0 } else { dl[i] / d[i] };
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagLu { d, du, du2, dl, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }
}

fn normalize(u: &mut [f64]) {
    let s = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if s > 0.0 {
        u.iter_mut().for_each(|x| *x /= s);
    }
}

fn residual(b: &BoxOperator, e: f64, u: &[f64]) -> f64 {
    b.apply(u).iter().zip(u).map(|(h, x)| (h - e * x).powi(2)).sum::<f64>().sqrt()
}

/// All eigenpairs, ascending, by Sturm bisection and inverse iteration.
///
/// Eigenvalues closer than `1e-6·(2 + max|V|)` form clusters whose vectors are
/// orthogonalized against each other.
pub fn eigensolve(b: &BoxOperator) -> Result<Vec<EigenPair>> {
    let n = b.len();
    if n == 0 || n > 100_000 {
        return Err(invalid("box size must be between 1 and 1e5"));
    }
    let evals = eigenvalues(&b.potential);
    let scale = b.scale();
    let tol = 1e-8 * scale;
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || evals[k] - evals[k - 1] > 1e-6 * scale {
            clusters.push((start, k));
            start = k;
        }
    }
    let solved: Vec<Vec<EigenPair>> = clusters
        .par_iter()
        .map(|&(s, e)| {
            let mut out: Vec<EigenPair> = Vec::with_capacity(e - s);
            for k in s..e {
                let lam = evals[k];
                let lu = TridiagLu::new(&b.potential, lam, f64::EPSILON * scale);
                let mut u: Vec<f64> = (0..n)
                    .map(|j| (derive_seed(k as u64, j as u64) >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
                    .collect();
                let mut ok = false;
                for it in 0..12 {
                    lu.solve(&mut u);
                    for p in &out {
                        let dot: f64 = p.u.iter().zip(&u).map(|(a, c)| a * c).sum();
                        u.iter_mut().zip(&p.u).for_each(|(x, y)| *x -= dot * y);
                    }
                    normalize(&mut u);
                    if it >= 1 && residual(b, lam, &u) <= tol {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::ConvergenceFailure(format!("eigenvalue {k} at {lam}")));
                }
                out.push(EigenPair { e: lam, u });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(solved.into_iter().flatten().collect())
}

/// Exponential decay away from the largest entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub center: usize,
}

/// Fits `log |(u(k), u(k ± 1))| ≈ c − rate·|k − center|` over both tails.
///
/// Each site is paired with its outward neighbour, the transfer-vector norm of the
/// eigenvalue equation, so zero crossings of `u` do not produce spurious dips.
pub fn decay_fit(u: &[f64]) -> Result<DecayFit> {
    let n = u.len();
    let center = (0..n).fold(0, |b, i| if u[i].abs() > u[b].abs() { i } else { b });
    let at = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { u[i as usize] };
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let out = if i >= center { i as isize + 1 } else { i as isize - 1 };
        if out < 0 || out as usize >= n {
            continue;
        }
        let w = u[i].hypot(at(out));
        if w > 1e-12 {
            xs.push(i.abs_diff(center) as f64);
            ys.push(w.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::DegenerateSupport);
    }
    let (slope, _, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit { rate: -slope, r_squared: r2, center })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Line,
    V,
    W,
}

/// Piecewise-linear envelope with slopes `±λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFit {
    pub kind: ShapeKind,
    pub breakpoints: Vec<usize>,
    pub slope: f64,
    /// Sup deviation divided by the number of steps.
    pub max_dev: f64,
}

/// Range max/min in O(1).
struct SparseTable {
    max: Vec<Vec<f64>>,
    min: Vec<Vec<f64>>,
}

impl SparseTable {
    fn new(v: &[f64]) -> Self {
        let mut max = vec![v.to_vec()];
        let mut min = vec![v.to_vec()];
        let mut span = 1;
        while 2 * span <= v.len() {
            let (pm, pn) = (max.last().unwrap(), min.last().unwrap());
            let nm: Vec<f64> = (0..=v.len() - 2 * span).map(|i| pm[i].max(pm[i + span])).collect();
            let nn: Vec<f64> = (0..=v.len() - 2 * span).map(|i| pn[i].min(pn[i + span])).collect();
            max.push(nm);
            min.push(nn);
            span *= 2;
        }
        SparseTable { max, min }
    }

    /// `(max, min)` over `lo..=hi`.
    #[inline]
    fn query(&self, lo: usize, hi: usize) -> (f64, f64) {
        let len = hi - lo + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let j = hi + 1 - (1 << k);
        (self.max[k][lo].max(self.max[k][j]), self.min[k][lo].min(self.min[k][j]))
    }
}

struct ShapeModel {
    /// `y + λm` for falling pieces.
    down: SparseTable,
    /// `y − λm` for rising pieces.
    up: SparseTable,
    lambda: f64,
    last: usize,
}

impl ShapeModel {
    /// Half the residual range for breakpoints `p1 ≤ p2 ≤ p3`, pattern fall, rise, fall, rise.
    #[inline]
    fn dev(&self, p1: usize, p2: usize, p3: usize) -> f64 {
        let l2 = 2.0 * self.lambda;
        let (a, b) = self.down.query(0, p1);
        let (c, d) = self.up.query(p1, p2);
        let k2 = l2 * p1 as f64;
        let (e, f) = self.down.query(p2, p3);
        let k3 = -l2 * (p2 - p1) as f64;
        let (g, h) = self.up.query(p3, self.last);
        let k4 = l2 * (p3 - p2 + p1) as f64;
        let hi = a.max(c + k2).max(e + k3).max(g + k4);
        let lo = b.min(d + k2).min(f + k3).min(h + k4);
        0.5 * (hi - lo)
    }

    fn refine(&self, mut p: [usize; 3], radius: usize, free: [bool; 3]) -> ([usize; 3], f64) {
        let mut best = self.dev(p[0], p[1], p[2]);
        for _ in 0..20 {
            let mut improved = false;
            for c in 0..3 {
                if !free[c] {
                    continue;
                }
                let lo = if c == 0 { 0 } else { p[c - 1] }.max(p[c].saturating_sub(radius));
                let hi = if c == 2 { self.last } else { p[c + 1] }.min(p[c] + radius);
                for v in lo..=hi {
                    let mut q = p;
                    q[c] = v;
                    // Later breakpoints pinned to the end move with the free one.
                    let d = self.dev(q[0], q[1], q[2]);
                    if d < best {
                        best = d;
                        p = q;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (p, best)
    }
}

/// Best line, V or W envelope with slopes `±λ` for `log_norms[0..=n]`.
///
/// Breakpoints are searched on a lattice of step `⌈n/200⌉` and then refined one step at a
/// time; the first kind with `max_dev ≤ ε` wins, otherwise the best W fit is returned.
pub fn shape_classify(log_norms: &[f64], lambda: f64, epsilon: f64) -> Result<ShapeFit> {
    if log_norms.len() < 11 || !(lambda > 0.0) {
        return Err(invalid("shape_classify needs n >= 10 and lambda > 0"));
    }
    let last = log_norms.len() - 1;
    let nf = last as f64;
    let down: Vec<f64> = log_norms.iter().enumerate().map(|(m, y)| y + lambda * m as f64).collect();
    let up: Vec<f64> = log_norms.iter().enumerate().map(|(m, y)| y - lambda * m as f64).collect();
    let model = ShapeModel { down: SparseTable::new(&down), up: SparseTable::new(&up), lambda, last };
    let h = last.div_ceil(200).max(1);
    let lattice: Vec<usize> = (0..=last).step_by(h).chain(std::iter::once(last)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();

    let line = model.dev(0, last, last);
    if line / nf <= epsilon {
        return Ok(ShapeFit { kind: ShapeKind::Line, breakpoints: vec![], slope: lambda, max_dev: line / nf });
    }

    let (mut vb, mut vd) = (0, f64::INFINITY);
    for &v in &lattice {
        let d = model.dev(v, last, last);
        if d < vd {
            vd = d;
            vb = v;
        }
    }
    let (vp, vd) = model.refine([vb, last, last], h, [true, false, false]);
    if vd / nf <= epsilon {
        return Ok(ShapeFit { kind: ShapeKind::V, breakpoints: vec![vp[0]], slope: lambda, max_dev: vd / nf });
    }

    let per_p1: Vec<([usize; 3], f64)> = lattice
        .par_iter()
        .enumerate()
        .map(|(i, &p1)| {
            let mut best = ([p1, p1, p1], f64::INFINITY);
            for (j, &p2) in lattice.iter().enumerate().skip(i) {
                for &p3 in &lattice[j..] {
                    let d = model.dev(p1, p2, p3);
                    if d < best.1 {
                        best = ([p1, p2, p3], d);
                    }
                }
            }
            best
        })
        .collect();
    let coarse = per_p1.into_iter().fold(([0, last, last], f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let (wp, wd) = model.refine(coarse.0, h, [true, true, true]);
    Ok(ShapeFit { kind: ShapeKind::W, breakpoints: wp.to_vec(), slope: lambda, max_dev: wd / nf })
}

/// One interior eigenvector of the localization report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedState {
    pub e: f64,
    pub center: usize,
    pub rate: f64,
    pub r_squared: f64,
    /// `λ̂(E)/2`, the per-site exponent.
    pub expected_rate: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub l: usize,
    pub window: [f64; 2],
    pub seed: u64,
    pub states: Vec<LocalizedState>,
    pub pass_fraction: f64,
    pub median_rate: f64,
    /// Median decay over half the box is below `e³`: states look extended.
    pub non_localized: bool,
}

/// Decay fits for eigenvectors with energy in the window and center at least `L/10` from the edges.
///
/// `lambda` gives the per-block exponent of the paired family as `(E, λ̂)` pairs; a state
/// passes when `r² ≥ 0.9` and its rate is within 25% of `λ̂(E)/2`.
pub fn localization_report(
    mu: &Potential,
    l: usize,
    window: (f64, f64),
    seed: u64,
    lambda: Option<&[(f64, f64)]>,
) -> Result<LocalizationReport> {
    let b = build_box(mu, l, seed)?;
    let in_window = sturm_count(&b.potential, window.1) > sturm_count(&b.potential, window.0);
    let pairs = if in_window { eigensolve(&b)? } else { Vec::new() };
    let margin = l / 10;
    let states: Vec<LocalizedState> = pairs
        .par_iter()
        .filter(|p| p.e >= window.0 && p.e <= window.1)
        .filter_map(|p| {
            let fit = decay_fit(&p.u).unwrap_or(DecayFit { rate: 0.0, r_squared: 0.0, center: 0 });
            let center = if fit.center == 0 && fit.r_squared == 0.0 {
                (0..l).fold(0, |c, i| if p.u[i].abs() > p.u[c].abs() { i } else { c })
            } else {
                fit.center
            };
            if center < margin || center >= l - margin {
                return None;
            }
            let expected_rate = lambda.map(|pts| interpolate(pts, p.e) / 2.0);
            let pass = expected_rate
                .is_some_and(|x| fit.r_squared >= 0.9 && (fit.rate - x).abs() <= 0.25 * x);
            Some(LocalizedState { e: p.e, center, rate: fit.rate, r_squared: fit.r_squared, expected_rate, pass })
        })
        .collect();
    let pass_fraction =
        if states.is_empty() { 0.0 } else { states.iter().filter(|s| s.pass).count() as f64 / states.len() as f64 };
    let mut rates: Vec<f64> = states.iter().map(|s| s.rate).collect();
    rates.sort_by(f64::total_cmp);
    let median_rate = if rates.is_empty() { 0.0 } else { rates[rates.len() / 2] };
    let non_localized = !states.is_empty() && median_rate * (l as f64 / 2.0) < 3.0;
    Ok(LocalizationReport { l, window: [window.0, window.1], seed, states, pass_fraction, median_rate, non_localized })
}
