//! Closed-form primitives for a single 2x2 nonnegative matrix.
//!
//! Entries are laid out as `[[a, b], [c, d]]`. Everything here is a pure
//! function of its arguments.

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2x2 matrix with finite nonnegative entries `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Matrix2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const ZERO: Matrix2 = Matrix2 { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, value) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidEntry { name, value });
            }
        }
        // normalise -0.0 so that sign tests downstream stay trivial
        Ok(Matrix2 { a: a + 0.0, b: b + 0.0, c: c + 0.0, d: d + 0.0 })
    }

    /// Builds a matrix from entries already known to be nonnegative and finite.
    pub(crate) fn from_raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        debug_assert!([a, b, c, d].iter().all(|v| v.is_finite() && *v >= 0.0));
        Matrix2 { a, b, c, d }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }
    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }
    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }
    #[inline]
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    /// Entrywise sum norm `a + b + c + d`.
    pub fn norm1(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn det(&self) -> f64 {
        self.a.mul_add(self.d, -(self.b * self.c))
    }

    pub fn is_zero(&self) -> bool {
        self.norm1() == 0.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.b == 0.0 && self.c == 0.0
    }

    pub fn is_antidiagonal(&self) -> bool {
        self.a == 0.0 && self.d == 0.0
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.c == 0.0
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.b == 0.0
    }

    pub fn is_positive(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.c > 0.0 && self.d > 0.0
    }

    pub fn nonnull_count(&self) -> usize {
        self.entries().iter().filter(|v| **v > 0.0).count()
    }

    pub fn column(&self, j: usize) -> ColumnVector2 {
        match j {
            0 => ColumnVector2::new_unchecked(self.a, self.c),
            1 => ColumnVector2::new_unchecked(self.b, self.d),
            _ => panic!("column index {j} out of range for a 2x2 matrix"),
        }
    }

    pub fn mul_vec(&self, v: ColumnVector2) -> ColumnVector2 {
        ColumnVector2::new_unchecked(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    /// Left action on a row vector: `v M`.
    pub fn left_mul_row(&self, v: ColumnVector2) -> ColumnVector2 {
        ColumnVector2::new_unchecked(v.x * self.a + v.y * self.c, v.x * self.b + v.y * self.d)
    }

    /// Multiplies every entry by `k`, which must be finite and nonnegative.
    pub fn scaled(&self, k: f64) -> Result<Matrix2> {
        Matrix2::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    /// `self / norm1(self)`; the zero matrix maps to itself.
    pub fn normalized(&self) -> Matrix2 {
        let n = self.norm1();
        if n == 0.0 {
            return Matrix2::ZERO;
        }
        Matrix2 { a: self.a / n, b: self.b / n, c: self.c / n, d: self.d / n }
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl TryFrom<[f64; 4]> for Matrix2 {
    type Error = Error;
    fn try_from(e: [f64; 4]) -> Result<Self> {
        Matrix2::new(e[0], e[1], e[2], e[3])
    }
}

impl From<Matrix2> for [f64; 4] {
    fn from(m: Matrix2) -> Self {
        m.entries()
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    /// Panics on overflow; see [`multiply`] for the fallible version.
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        multiply(&self, &rhs).expect("2x2 product overflowed")
    }
}

/// A real 2-vector. Used for column vectors, start vectors and (as a row)
/// for left eigen-directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnVector2 {
    pub x: f64,
    pub y: f64,
}

impl ColumnVector2 {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(Error::InvalidVectorEntry(v));
            }
        }
        Ok(ColumnVector2 { x, y })
    }

    pub(crate) const fn new_unchecked(x: f64, y: f64) -> Self {
        ColumnVector2 { x, y }
    }

    pub fn norm1(&self) -> f64 {
        self.x.abs() + self.y.abs()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.x >= 0.0 && self.y >= 0.0
    }

    /// Divides by the norm-1; `None` for the null vector.
    pub fn normalized(&self) -> Option<ColumnVector2> {
        let n = self.norm1();
        (n > 0.0).then(|| ColumnVector2::new_unchecked(self.x / n, self.y / n))
    }

    /// Projective canonical form: first nonzero coordinate positive, norm-1 one.
    pub fn canonical_direction(&self) -> Option<ColumnVector2> {
        let n = self.norm1();
        if n == 0.0 {
            return None;
        }
        let sign = if self.x != 0.0 { self.x.signum() } else { self.y.signum() };
        Some(ColumnVector2::new_unchecked(sign * self.x / n + 0.0, sign * self.y / n + 0.0))
    }

    pub fn distance_inf(&self, other: &ColumnVector2) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

/// The two singular values, `sigma1 >= sigma2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPair {
    pub sigma1: f64,
    pub sigma2: f64,
}

/// A real left eigenpair `v M = value * v` with `direction` in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeftEigenpair {
    pub value: f64,
    pub direction: ColumnVector2,
}

/// Exact 2x2 product. Fails with [`Error::Overflow`] if any entry leaves the
/// finite range.
pub fn multiply(lhs: &Matrix2, rhs: &Matrix2) -> Result<Matrix2> {
    let a = lhs.a * rhs.a + lhs.b * rhs.c;
    let b = lhs.a * rhs.b + lhs.b * rhs.d;
    let c = lhs.c * rhs.a + lhs.d * rhs.c;
    let d = lhs.c * rhs.b + lhs.d * rhs.d;
    if [a, b, c, d].iter().all(|v| v.is_finite()) {
        Ok(Matrix2::from_raw(a, b, c, d))
    } else {
        Err(Error::Overflow)
    }
}

/// Singular values of `m`.
///
/// `sigma1 = (|(a+d, b-c)| + |(a-d, b+c)|) / 2` is the larger root of the
/// characteristic polynomial of `MᵀM` written without subtraction under the
/// radical. `sigma2` is taken as `|det| / sigma1`, which keeps full relative
/// accuracy when `sigma2 << sigma1`.
pub fn singular_values(m: &Matrix2) -> SingularPair {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let plus = (a + d).hypot(b - c);
    let minus = (a - d).hypot(b + c);
    let sigma1 = 0.5 * (plus + minus);
    if sigma1 == 0.0 {
        return SingularPair { sigma1: 0.0, sigma2: 0.0 };
    }
    let sigma2 = (m.det().abs() / sigma1).min(sigma1);
    SingularPair { sigma1, sigma2 }
}

/// Hilbert projective distance between the two columns, `|log(ad / bc)|`.
///
/// Infinite when exactly one of `ad`, `bc` vanishes; zero when both do.
pub fn hilbert_distance(m: &Matrix2) -> f64 {
    let ad_zero = m.a == 0.0 || m.d == 0.0;
    let bc_zero = m.b == 0.0 || m.c == 0.0;
    match (ad_zero, bc_zero) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => {
            let ratio = (m.a / m.b) * (m.d / m.c);
            if ratio.is_normal() {
                ratio.ln().abs()
            } else {
                (m.a.ln() + m.d.ln() - m.b.ln() - m.c.ln()).abs()
            }
        }
    }
}

/// Sup-norm distance between the norm-1 normalized columns.
pub fn dinf_distance(m: &Matrix2) -> Result<f64> {
    let s1 = m.a + m.c;
    let s2 = m.b + m.d;
    if s1 == 0.0 {
        return Err(Error::NullColumn { column: 1 });
    }
    if s2 == 0.0 {
        return Err(Error::NullColumn { column: 2 });
    }
    Ok((m.a / s1 - m.b / s2).abs())
}

/// Birkhoff contraction coefficient `|√(ad) − √(bc)| / (√(ad) + √(bc))`.
///
/// Equals `tanh(d_H / 4)` on positive matrices; 1 when the matrix does not
/// map the open cone into a bounded subset of itself.
pub fn birkhoff_coefficient(m: &Matrix2) -> f64 {
    let diag = m.a.sqrt() * m.d.sqrt();
    let anti = m.b.sqrt() * m.c.sqrt();
    let sum = diag + anti;
    if sum == 0.0 {
        return 1.0;
    }
    (diag - anti).abs() / sum
}

/// Each column divided by its norm-1, `None` for a null column.
pub fn normalized_columns(m: &Matrix2) -> (Option<ColumnVector2>, Option<ColumnVector2>) {
    (m.column(0).normalized(), m.column(1).normalized())
}

/// Real left eigenpairs of `m`, larger eigenvalue first.
///
/// The discriminant `((a−d)/2)² + bc` is nonnegative for nonnegative
/// matrices, so the spectrum is always real. A scalar matrix returns the two
/// coordinate axes; a defective matrix returns its single eigen-direction.
pub fn left_eigenvectors(m: &Matrix2) -> Vec<LeftEigenpair> {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let half_gap = 0.5 * (a - d);
    let radius = half_gap.hypot((b * c).sqrt());
    let mid = 0.5 * (a + d);

    let pair = |value: f64, raw: ColumnVector2| LeftEigenpair {
        value,
        direction: raw.canonical_direction().expect("eigen-direction is nonzero"),
    };

    if radius == 0.0 {
        // a == d and bc == 0
        return if b == 0.0 && c == 0.0 {
            vec![pair(a, ColumnVector2::new_unchecked(1.0, 0.0)), pair(a, ColumnVector2::new_unchecked(0.0, 1.0))]
        } else if b > 0.0 {
            vec![pair(a, ColumnVector2::new_unchecked(0.0, 1.0))]
        } else {
            vec![pair(a, ColumnVector2::new_unchecked(1.0, 0.0))]
        };
    }

    let big = mid + radius;
    // `det / big` avoids cancellation in `mid - radius`
    let small = if big > 0.0 { m.det() / big } else { mid - radius };

    // For eigenvalue l, (x, y) ∝ (c, l − a) and ∝ (l − d, b). Pick the
    // arrangement whose differences do not cancel.
    let (v_big, v_small) = if half_gap >= 0.0 {
        (ColumnVector2::new_unchecked(radius + half_gap, b), ColumnVector2::new_unchecked(c, -(radius + half_gap)))
    } else {
        (ColumnVector2::new_unchecked(c, radius - half_gap), ColumnVector2::new_unchecked(half_gap - radius, b))
    };
    vec![pair(big, v_big), pair(small, v_small)]
}
