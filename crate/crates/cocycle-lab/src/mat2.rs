//! 2×2 matrices of determinant one acting on the projective circle.
//!
//! A line through the origin with angle θ is the circle point `x = θ/π mod 1`.
//! Every matrix of positive determinant induces an orientation preserving
//! degree-one map of this circle, and lifts act on the real line.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖A‖ − 1` below which a matrix counts as a rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Checked constructor: the determinant must be 1 within 1e-12.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Mat2 { a, b, c, d };
        let det = m.det();
        if !det.is_finite() || (det - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(m)
    }

    /// Builds a matrix without checking the determinant.
    pub const fn new_unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_array(e: [f64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `diag(s, 1/s)`.
    pub fn diag(s: f64) -> Self {
        Mat2 { a: s, b: 0.0, c: 0.0, d: 1.0 / s }
    }

    /// Counterclockwise rotation of the plane by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Inverse, assuming determinant one.
    pub fn inverse(&self) -> Self {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    /// `A^{-T}`, assuming determinant one.
    pub fn inverse_transpose(&self) -> Self {
        Mat2 { a: self.d, b: -self.c, c: -self.b, d: self.a }
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Raw product without determinant renormalization.
    #[inline]
    pub fn mul_raw(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    #[inline]
    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        compose(&self, &rhs)
    }
}

/// Returns `AB`, divided by `√det` when rounding has moved the determinant off 1.
pub fn compose(a: &Mat2, b: &Mat2) -> Mat2 {
    let p = a.mul_raw(b);
    let det = p.det();
    if (det - 1.0).abs() > 1e-12 && det > 0.0 {
        let s = 1.0 / det.sqrt();
        Mat2 { a: p.a * s, b: p.b * s, c: p.c * s, d: p.d * s }
    } else {
        p
    }
}

/// Largest singular value of an arbitrary 2×2 matrix.
///
/// Uses `σ₁ + σ₂ = |(a + d, c − b)|` and `|σ₁ − σ₂| = |(a − d, b + c)|`, which is exact
/// for rotations where the Frobenius form loses half the digits.
#[inline]
pub fn singular_max(m: &Mat2) -> f64 {
    let (s, t) = (m.a + m.d, m.c - m.b);
    let (u, v) = (m.a - m.d, m.b + m.c);
    0.5 * ((s * s + t * t).sqrt() + (u * u + v * v).sqrt())
}

/// Operator norm of a determinant-one matrix.
#[inline]
pub fn operator_norm(m: &Mat2) -> f64 {
    singular_max(m)
}

/// Wraps a real number into `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the period-one circle.
#[inline]
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = wrap((x - y).abs());
    d.min(1.0 - d)
}

/// Signed representative of `x − y` in `[-1/2, 1/2)`.
#[inline]
pub fn circle_diff(x: f64, y: f64) -> f64 {
    wrap(x - y + 0.5) - 0.5
}

/// A point of the projective circle, `0 ≤ x < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        CirclePoint(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Unit vector spanning the line.
    pub fn unit_vector(self) -> [f64; 2] {
        let (s, c) = (PI * self.0).sin_cos();
        [c, s]
    }
}

impl From<CirclePoint> for f64 {
    fn from(p: CirclePoint) -> f64 {
        p.0
    }
}

#[inline]
fn direction_of(v: [f64; 2]) -> f64 {
    wrap(v[1].atan2(v[0]) / PI)
}

/// Image of the circle point `x` under the projective action of `m`.
///
/// Works for any matrix with positive determinant, so scaled products may be passed.
#[inline]
pub fn proj_apply(m: &Mat2, x: f64) -> f64 {
    let (s, c) = (PI * x).sin_cos();
    direction_of([m.a * c + m.b * s, m.c * c + m.d * s])
}

/// Derivative `|v|²/|Av|²` of the circle map at `x` (determinant one).
#[inline]
pub fn proj_derivative(m: &Mat2, x: f64) -> f64 {
    let (s, c) = (PI * x).sin_cos();
    let w = [m.a * c + m.b * s, m.c * c + m.d * s];
    m.det() / (w[0] * w[0] + w[1] * w[1])
}

/// Lift of the circle map to the real line, normalized so that the image of 0 lies in `[0, 1)`.
#[inline]
pub fn lift_apply(m: &Mat2, x: f64) -> f64 {
    let mut fl = x.floor();
    let mut t = x - fl;
    // x slightly below an integer can round to t = 1.
    if t >= 1.0 {
        fl += 1.0;
        t = 0.0;
    }
    let y0 = direction_of([m.a, m.c]);
    let mut r = (proj_apply(m, t) - y0).rem_euclid(1.0);
    // Near t = 0 or 1 the image can round onto y0 from the wrong side; the image of 1/2
    // tells which end of [y0, y0 + 1) it belongs to.
    if (t > 0.5) == (r < 0.5) && t != 0.5 {
        let rh = (proj_apply(m, 0.5) - y0).rem_euclid(1.0);
        if t > 0.5 && r < rh {
            r = 1.0;
        } else if t < 0.5 && r > rh {
            r = 0.0;
        }
    }
    fl + (y0 + r)
}

/// Norm and singular directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    pub norm: f64,
    /// Most expanded image direction.
    pub x_plus: f64,
    /// Most contracted input direction, where the circle map has the largest derivative.
    pub x_minus: f64,
}

/// Singular directions of a matrix with positive determinant, without the rotation check.
///
/// Both directions are invariant under positive scaling of `m`.
#[inline]
pub fn singular_directions_raw(m: &Mat2) -> (f64, f64) {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let plus = 0.5 * (2.0 * (a * c + b * d)).atan2(a * a + b * b - c * c - d * d);
    let minus = 0.5 * (2.0 * (a * b + c * d)).atan2(a * a + c * c - b * b - d * d) + FRAC_PI_2;
    (wrap(plus / PI), wrap(minus / PI))
}

/// Norm plus `x⁺`, `x⁻` from the closed-form 2×2 singular value decomposition.
pub fn singular_directions(m: &Mat2) -> Result<SingularData> {
    let norm = operator_norm(m);
    if norm <= 1.0 + ROTATION_TOL {
        return Err(Error::RotationMatrix);
    }
    let (x_plus, x_minus) = singular_directions_raw(m);
    Ok(SingularData { norm, x_plus, x_minus })
}

/// `‖BA‖` for a pair with `x⁺(A) = x⁻(B)`, which equals `max(‖B‖/‖A‖, ‖A‖/‖B‖)`.
pub fn cancellation_norm(a: &Mat2, b: &Mat2) -> Result<f64> {
    let sa = singular_directions(a)?;
    let sb = singular_directions(b)?;
    let gap = circle_dist(sa.x_plus, sb.x_minus);
    if gap > 1e-8 {
        return Err(Error::DirectionMismatch(gap));
    }
    Ok(operator_norm(&b.mul_raw(a)))
}

/// Radian angles `(∠(f_A(x), x⁺), ∠(x, x⁻))`.
///
/// For unit `v_x` they are bounded by `(π/2)/(|Av_x|·‖A‖)` and `(π/2)·|Av_x|/‖A‖`.
pub fn direction_bounds_check(m: &Mat2, x: f64) -> Result<(f64, f64)> {
    let s = singular_directions(m)?;
    let fx = proj_apply(m, x);
    Ok((PI * circle_dist(fx, s.x_plus), PI * circle_dist(x, s.x_minus)))
}

#[inline]
fn exponent_of(x: f64) -> i32 {
    ((x.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

#[inline]
fn pow2(k: i32) -> f64 {
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// Long product stored as a matrix times `2^exp2`; the rescaling is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMat {
    pub m: Mat2,
    pub exp2: i64,
}

impl Default for LogMat {
    fn default() -> Self {
        Self::identity()
    }
}

impl LogMat {
    pub fn identity() -> Self {
        LogMat { m: Mat2::IDENTITY, exp2: 0 }
    }

    pub fn from_mat(m: Mat2) -> Self {
        let mut l = LogMat { m, exp2: 0 };
        l.renormalize();
        l
    }

    #[inline]
    fn renormalize(&mut self) {
        let big = self.m.a.abs().max(self.m.b.abs()).max(self.m.c.abs()).max(self.m.d.abs());
        if big == 0.0 || !big.is_finite() {
            return;
        }
        let k = exponent_of(big);
        if k != 0 {
            let s = pow2(-k);
            self.m = Mat2 { a: self.m.a * s, b: self.m.b * s, c: self.m.c * s, d: self.m.d * s };
            self.exp2 += k as i64;
        }
    }

    /// Replaces `T` by `F·T`.
    #[inline]
    pub fn push(&mut self, f: &Mat2) {
        self.m = f.mul_raw(&self.m);
        self.renormalize();
    }

    /// Replaces `T` by `T·F`.
    #[inline]
    pub fn push_right(&mut self, f: &Mat2) {
        self.m = self.m.mul_raw(f);
        self.renormalize();
    }

    /// Product `self · other`.
    pub fn mul(&self, other: &LogMat) -> LogMat {
        let mut r = LogMat { m: self.m.mul_raw(&other.m), exp2: self.exp2 + other.exp2 };
        r.renormalize();
        r
    }

    /// `log ‖T‖`.
    pub fn log_norm(&self) -> f64 {
        self.exp2 as f64 * std::f64::consts::LN_2 + singular_max(&self.m).ln()
    }

    /// `log f′_T(x) = −2 log |T v_x|`, valid for any length since `det T = 1`.
    pub fn log_derivative(&self, x: f64) -> f64 {
        let (s, c) = (PI * x).sin_cos();
        let w = self.m.apply([c, s]);
        -2.0 * (self.exp2 as f64 * std::f64::consts::LN_2 + w[0].hypot(w[1]).ln())
    }

    /// `(log ‖T‖, x⁺, x⁻)`; directions are meaningless when `T` is close to a rotation.
    pub fn singular(&self) -> (f64, f64, f64) {
        let (p, q) = singular_directions_raw(&self.m);
        (self.log_norm(), p, q)
    }
}

/// Vector stored as a unit direction and a log length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVec {
    pub v: [f64; 2],
    pub log_len: f64,
}

impl LogVec {
    pub fn new(v: [f64; 2]) -> Self {
        let n = v[0].hypot(v[1]);
        LogVec { v: [v[0] / n, v[1] / n], log_len: n.ln() }
    }

    pub fn at(x: f64) -> Self {
        let (s, c) = (PI * x).sin_cos();
        LogVec { v: [c, s], log_len: 0.0 }
    }

    /// Applies `f`, returning the log growth of this step.
    #[inline]
    pub fn push(&mut self, f: &Mat2) -> f64 {
        let w = f.apply(self.v);
        let n = w[0].hypot(w[1]);
        self.v = [w[0] / n, w[1] / n];
        let g = n.ln();
        self.log_len += g;
        g
    }

    pub fn direction(&self) -> f64 {
        direction_of(self.v)
    }
}
