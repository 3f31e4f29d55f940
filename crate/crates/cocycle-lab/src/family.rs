//! Parameter-dependent cocycle families and deterministic words.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mat2::{lift_apply, operator_norm, proj_apply, LogMat, Mat2};
use crate::rng::{UniformStream, PROBE_STREAM, WORD_STREAM};

/// Closed parameter interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(e: [f64; 2]) -> Self {
        Interval { lo: e[0], hi: e[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(j: Interval) -> Self {
        [j.lo, j.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.lo && a <= self.hi
    }

    /// `cells + 1` equally spaced nodes, endpoints included exactly.
    pub fn grid(&self, cells: usize) -> Vec<f64> {
        if cells == 0 {
            return vec![self.lo];
        }
        let h = self.len() / cells as f64;
        (0..=cells)
            .map(|i| if i == cells { self.hi } else { self.lo + i as f64 * h })
            .collect()
    }
}

/// Distribution of a single potential value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    Uniform { low: f64, high: f64 },
}

impl Potential {
    pub fn bernoulli(v0: f64, v1: f64, p: f64) -> Self {
        Potential::Discrete { values: vec![v0, v1], weights: vec![1.0 - p, p] }
    }

    pub fn point(v: f64) -> Self {
        Potential::Discrete { values: vec![v], weights: vec![1.0] }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Potential::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(invalid("discrete potential needs matching values and weights"));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(invalid("potential weights must be nonnegative with positive sum"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("potential values must be finite"));
                }
            }
            Potential::Uniform { low, high } => {
                if !(low <= high) || !low.is_finite() || !high.is_finite() {
                    return Err(invalid("uniform potential needs low <= high"));
                }
            }
        }
        Ok(())
    }

    /// True if the law is a single point mass.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Potential::Discrete { values, weights } => {
                let mut support = values.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v);
                match support.next() {
                    Some(first) => support.all(|v| v == first),
                    None => true,
                }
            }
            Potential::Uniform { low, high } => low == high,
        }
    }

    /// Inverse-CDF sample from a uniform `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Potential::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w / total;
                    if u < acc {
                        return *v;
                    }
                }
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(values.len() - 1);
                values[last]
            }
            Potential::Uniform { low, high } => low + (high - low) * u,
        }
    }

    /// `(min, max)` of the support.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Potential::Discrete { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v))),
            Potential::Uniform { low, high } => (*low, *high),
        }
    }

    /// Atoms with probabilities, for discrete laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Potential::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                Some(values.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(v, w)| (*v, w / total)).collect())
            }
            Potential::Uniform { .. } => None,
        }
    }
}

/// A parameter-dependent family `a ↦ F_a(ω)` over an i.i.d. letter law.
///
/// Lifts must be continuous and nondecreasing in `a` for eligible families.
pub trait Cocycle: Send + Sync {
    type Letter: Copy + Send + Sync + std::fmt::Debug + PartialEq;

    fn interval(&self) -> Interval;

    /// Letters of the underlying model per step (2 for paired Schrödinger steps).
    fn block_size(&self) -> usize;

    /// Letter from a uniform point of `[0,1)²`.
    fn draw(&self, u: [f64; 2]) -> Self::Letter;

    fn matrix(&self, a: f64, w: &Self::Letter) -> Mat2;

    /// `d/da F_a(ω)`.
    fn matrix_da(&self, a: f64, w: &Self::Letter) -> Mat2;

    /// Lift of the circle map of `F_a(ω)`, continuous in `a`.
    fn lift(&self, a: f64, w: &Self::Letter, x: f64) -> f64 {
        lift_apply(&self.matrix(a, w), x)
    }

    /// Finite alphabet with probabilities, if any.
    fn atoms(&self) -> Option<Vec<(Self::Letter, f64)>>;
}

/// `{R_α A, R_α B}` with `P(A) = p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationFamily {
    pub a: Mat2,
    pub b: Mat2,
    pub p: f64,
    pub j: Interval,
}

pub fn make_rotation_family(a: Mat2, b: Mat2, p: f64, j: Interval) -> Result<RotationFamily> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability {p} not in (0, 1)")));
    }
    Mat2::new(a.a, a.b, a.c, a.d)?;
    Mat2::new(b.a, b.b, b.c, b.d)?;
    Ok(RotationFamily { a, b, p, j })
}

impl Cocycle for RotationFamily {
    /// `true` selects `A`.
    type Letter = bool;

    fn interval(&self) -> Interval {
        self.j
    }

    fn block_size(&self) -> usize {
        1
    }

    fn draw(&self, u: [f64; 2]) -> bool {
        u[0] < self.p
    }

    fn matrix(&self, alpha: f64, w: &bool) -> Mat2 {
        Mat2::rotation(alpha).mul_raw(if *w { &self.a } else { &self.b })
    }

    fn matrix_da(&self, alpha: f64, w: &bool) -> Mat2 {
        Mat2::rotation(alpha + PI / 2.0).mul_raw(if *w { &self.a } else { &self.b })
    }

    fn lift(&self, alpha: f64, w: &bool, x: f64) -> f64 {
        lift_apply(if *w { &self.a } else { &self.b }, x) + alpha / PI
    }

    fn atoms(&self) -> Option<Vec<(bool, f64)>> {
        Some(vec![(true, self.p), (false, 1.0 - self.p)])
    }
}

/// Paired Schrödinger transfer steps.
///
/// One site uses `P(E, V) = [[E − V, 1], [−1, 0]]`, the transfer matrix conjugated by
/// `diag(1, −1)`, so the projective angle turns forward as `E` grows. A letter is the
/// pair `(V₁, V₂)` and the step is `P(E, V₂)·P(E, V₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerFamily {
    pub potential: Potential,
    pub j: Interval,
}

pub fn make_schrodinger_family(potential: Potential, j: Interval) -> Result<SchrodingerFamily> {
    potential.check()?;
    if potential.is_degenerate() {
        return Err(Error::DegenerateDistribution);
    }
    Ok(SchrodingerFamily { potential, j })
}

/// One-site step `[[E − V, 1], [−1, 0]]`.
#[inline]
pub fn site_matrix(e: f64, v: f64) -> Mat2 {
    Mat2::new_unchecked(e - v, 1.0, -1.0, 0.0)
}

impl Cocycle for SchrodingerFamily {
    type Letter = [f64; 2];

    fn interval(&self) -> Interval {
        self.j
    }

    fn block_size(&self) -> usize {
        2
    }

    fn draw(&self, u: [f64; 2]) -> [f64; 2] {
        [self.potential.sample(u[0]), self.potential.sample(u[1])]
    }

    fn matrix(&self, e: f64, w: &[f64; 2]) -> Mat2 {
        site_matrix(e, w[1]).mul_raw(&site_matrix(e, w[0]))
    }

    fn matrix_da(&self, e: f64, w: &[f64; 2]) -> Mat2 {
        let one = Mat2::new_unchecked(1.0, 0.0, 0.0, 0.0);
        let p1 = site_matrix(e, w[0]);
        let p2 = site_matrix(e, w[1]);
        let t1 = one.mul_raw(&p1);
        let t2 = p2.mul_raw(&one);
        Mat2::new_unchecked(t1.a + t2.a, t1.b + t2.b, t1.c + t2.c, t1.d + t2.d)
    }

    fn lift(&self, e: f64, w: &[f64; 2], x: f64) -> f64 {
        let y = lift_apply(&site_matrix(e, w[0]), x);
        lift_apply(&site_matrix(e, w[1]), y)
    }

    fn atoms(&self) -> Option<Vec<([f64; 2], f64)>> {
        let a = self.potential.atoms()?;
        let mut out = Vec::with_capacity(a.len() * a.len());
        for (v1, p1) in &a {
            for (v2, p2) in &a {
                out.push(([*v1, *v2], p1 * p2));
            }
        }
        Some(out)
    }
}

/// One letter, no parameter dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFamily {
    pub m: Mat2,
    pub j: Interval,
}

pub fn make_constant_family(m: Mat2) -> ConstantFamily {
    ConstantFamily { m, j: Interval { lo: 0.0, hi: 1.0 } }
}

impl Cocycle for ConstantFamily {
    type Letter = ();

    fn interval(&self) -> Interval {
        self.j
    }

    fn block_size(&self) -> usize {
        1
    }

    fn draw(&self, _u: [f64; 2]) {}

    fn matrix(&self, _a: f64, _w: &()) -> Mat2 {
        self.m
    }

    fn matrix_da(&self, _a: f64, _w: &()) -> Mat2 {
        Mat2::new_unchecked(0.0, 0.0, 0.0, 0.0)
    }

    fn atoms(&self) -> Option<Vec<((), f64)>> {
        Some(vec![((), 1.0)])
    }
}

/// Any of the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyFamily {
    Rotation(RotationFamily),
    Schrodinger(SchrodingerFamily),
    Constant(ConstantFamily),
}

/// Runs `$body` with `$f` bound to the concrete family inside an [`AnyFamily`].
#[macro_export]
macro_rules! with_family {
    ($fam:expr, $f:ident => $body:expr) => {
        match $fam {
            $crate::family::AnyFamily::Rotation($f) => $body,
            $crate::family::AnyFamily::Schrodinger($f) => $body,
            $crate::family::AnyFamily::Constant($f) => $body,
        }
    };
}

/// Letters of one word, reproducible from `(seed, length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordStream<L> {
    pub seed: u64,
    pub letters: Vec<L>,
}

impl<L> WordStream<L> {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

pub fn sample_word<F: Cocycle>(family: &F, seed: u64, n: usize) -> WordStream<F::Letter> {
    let mut s = UniformStream::new(seed, WORD_STREAM);
    let letters = (0..n).map(|_| family.draw(s.next_pair())).collect();
    WordStream { seed, letters }
}

/// Periodic word repeating `w`.
pub fn constant_word<L: Copy>(w: L, n: usize) -> WordStream<L> {
    WordStream { seed: 0, letters: vec![w; n] }
}

/// `T = F_a(ω_n)⋯F_a(ω_1)` over the given letters.
pub fn product<F: Cocycle>(family: &F, a: f64, letters: &[F::Letter]) -> LogMat {
    let mut t = LogMat::identity();
    for w in letters {
        t.push(&family.matrix(a, w));
    }
    t
}

/// Lifted orbit `x̃_0, …, x̃_n` of `x0` at parameter `a`.
pub fn lift_orbit<F: Cocycle>(family: &F, a: f64, letters: &[F::Letter], x0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(letters.len() + 1);
    let mut x = x0;
    out.push(x);
    for w in letters {
        x = family.lift(a, w, x);
        out.push(x);
    }
    out
}

/// Empirical check of the standing assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Largest sampled `‖F_a(ω)‖` or `‖dF/da‖`.
    pub m_hat: f64,
    /// Smallest sampled `∂_a f̃`, circle units per parameter unit.
    pub delta_hat: f64,
    /// Some sampled letter has norm above 1.01.
    pub a1_noncompact: bool,
    /// Sampled letter pairs do not all share an invariant line pair.
    pub a1_no_invariant_lines: bool,
    /// Minimal growth rate from the hyperbolicity test at the interval midpoint.
    pub uh_score: f64,
    pub uh_is_uh: bool,
    pub eligible: bool,
}

fn eigenlines(m: &Mat2) -> Vec<[f64; 2]> {
    let t = m.trace();
    let disc = t * t - 4.0 * m.det();
    if disc < 0.0 {
        return Vec::new();
    }
    let r = disc.sqrt();
    let mut out = Vec::new();
    for lam in [(t + r) / 2.0, (t - r) / 2.0] {
        let v = if m.b.abs() > 1e-14 || (lam - m.a).abs() > 1e-14 {
            [m.b, lam - m.a]
        } else {
            [lam - m.d, m.c]
        };
        let n = v[0].hypot(v[1]);
        if n > 0.0 {
            out.push([v[0] / n, v[1] / n]);
        } else {
            out.push([1.0, 0.0]);
            out.push([0.0, 1.0]);
        }
    }
    out
}

fn maps_lines_into(b: &Mat2, lines: &[[f64; 2]]) -> bool {
    lines.iter().all(|l| {
        let w = b.apply(*l);
        let n = w[0].hypot(w[1]);
        lines.iter().any(|k| ((w[0] * k[1] - w[1] * k[0]) / n).abs() < 1e-9)
    })
}

/// Estimates `M̂`, `δ̂`, the irreducibility heuristics and a hyperbolicity proxy.
pub fn assess_assumptions<F: Cocycle>(family: &F, samples: usize, grid: usize) -> Result<AssumptionReport> {
    if samples < 10 || grid < 10 {
        return Err(invalid("samples and grid must be at least 10"));
    }
    let j = family.interval();
    let h = j.len() / 1e4;
    let letters: Vec<F::Letter> = match family.atoms() {
        Some(at) if at.len() <= samples => at.into_iter().map(|(w, _)| w).collect(),
        _ => {
            let mut s = UniformStream::new(0, PROBE_STREAM);
            (0..samples).map(|_| family.draw(s.next_pair())).collect()
        }
    };
    let mut m_hat: f64 = 0.0;
    let mut delta_hat = f64::INFINITY;
    for g in 0..grid {
        let a = j.lo + (j.len() - h) * g as f64 / (grid - 1) as f64;
        for w in &letters {
            m_hat = m_hat.max(operator_norm(&family.matrix(a, w)));
            let da = family.matrix_da(a, w);
            m_hat = m_hat.max(crate::mat2::singular_max(&da));
            for k in 0..samples {
                let x = (k as f64 + 0.5) / samples as f64;
                let d = (family.lift(a + h, w, x) - family.lift(a, w, x)) / h;
                delta_hat = delta_hat.min(d);
            }
        }
    }

    let mid = j.mid();
    let a1_noncompact = letters.iter().any(|w| operator_norm(&family.matrix(mid, w)) > 1.01);
    let mut s = UniformStream::new(1, PROBE_STREAM);
    let mut all_invariant = true;
    let mut any_hyperbolic = false;
    for _ in 0..100 {
        let p = family.matrix(mid, &family.draw(s.next_pair()));
        let q = family.matrix(mid, &family.draw(s.next_pair()));
        let lines = eigenlines(&p);
        if lines.is_empty() || (p.trace().abs() - 2.0).abs() < 1e-12 && lines.len() < 2 {
            continue;
        }
        any_hyperbolic = true;
        if !maps_lines_into(&q, &lines) {
            all_invariant = false;
            break;
        }
    }
    let a1_no_invariant_lines = !(any_hyperbolic && all_invariant);

    let uh = crate::rotation::uh_test(family, mid, 200, 10, 1e-3f64.exp(), 0)?;
    Ok(AssumptionReport {
        m_hat,
        delta_hat,
        a1_noncompact,
        a1_no_invariant_lines,
        uh_score: uh.min_rate,
        uh_is_uh: uh.is_uh,
        eligible: delta_hat > 0.0,
    })
}

/// [`assess_assumptions`] that fails for families not monotone in the parameter.
pub fn validate_assumptions<F: Cocycle>(family: &F, samples: usize, grid: usize) -> Result<AssumptionReport> {
    let r = assess_assumptions(family, samples, grid)?;
    if !(r.delta_hat > 0.0) {
        return Err(Error::MonotonicityViolation(r.delta_hat));
    }
    Ok(r)
}

/// Image of `x` under the circle map of `F_a(ω)`.
pub fn circle_step<F: Cocycle>(family: &F, a: f64, w: &F::Letter, x: f64) -> f64 {
    proj_apply(&family.matrix(a, w), x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let j = Interval::new(0.3, 0.9).unwrap();
        let g = j.grid(500);
        assert_eq!(g.len(), 501);
        assert_eq!(g[0], 0.3);
        assert_eq!(g[500], 0.9);
        assert_eq!(j.grid(0), vec![0.3]);
    }

    #[test]
    fn free_block_at_zero_energy_is_minus_identity() {
        let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval { lo: -1.0, hi: 1.0 }).unwrap();
        let m = f.matrix(0.0, &[0.0, 0.0]);
        assert_eq!(m, Mat2::new_unchecked(-1.0, 0.0, 0.0, -1.0));
        assert_eq!(f.lift(0.0, &[0.0, 0.0], 0.25), 1.25);
    }

    #[test]
    fn degenerate_potential_rejected() {
        let r = make_schrodinger_family(Potential::point(0.0), Interval { lo: 0.0, hi: 1.0 });
        assert!(matches!(r, Err(Error::DegenerateDistribution)));
        let two_equal = Potential::Discrete { values: vec![1.0, 1.0], weights: vec![0.5, 0.5] };
        assert!(two_equal.is_degenerate());
    }

    #[test]
    fn rotation_generator_at_zero() {
        let a = Mat2::diag(2.0);
        let f = make_rotation_family(a, Mat2::IDENTITY, 0.5, Interval { lo: 0.0, hi: 1.0 }).unwrap();
        assert_eq!(f.matrix(0.0, &true), a);
        assert!(make_rotation_family(a, a, 1.0, f.j).is_err());
    }

    #[test]
    fn words_are_prefix_stable() {
        let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval { lo: 0.0, hi: 1.0 }).unwrap();
        let w1 = sample_word(&f, 9, 100);
        let w2 = sample_word(&f, 9, 1000);
        assert_eq!(w1.letters[..], w2.letters[..100]);
        assert_eq!(w1, sample_word(&f, 9, 100));
    }
}
