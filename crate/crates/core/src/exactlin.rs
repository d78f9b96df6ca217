//! Exact rational arithmetic and small dense linear algebra.
//!
//! Every quantity in this crate is a [`Rational`] — an arbitrary-precision
//! fraction kept in lowest terms with a positive denominator — so equality
//! tests and linear solves are exact. Matrices are dense; the systems that
//! arise (intersection forms of curve configurations) are tiny, so plain
//! Gaussian elimination with exact pivoting is all we need.

// Elimination kernels below index two rows of the same matrix per step;
// iterator forms would need split borrows for no gain in clarity.
#![allow(clippy::needless_range_loop)]

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from the linear-algebra kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactLinError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Arbitrary-precision rational number, always reduced, denominator > 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Self {
        assert!(!denom.is_zero(), "zero denominator");
        Rational(BigRational::new(numer, denom))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Sign as -1, 0, or 1.
    pub fn signum(&self) -> i32 {
        match self.0.cmp(&BigRational::zero()) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    /// Largest integer <= self.
    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer >= self.
    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Fractional part `self - floor(self)`, always in [0, 1).
    pub fn fract(&self) -> Rational {
        Rational(&self.0 - BigRational::from_integer(self.0.floor().to_integer()))
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Rational {
        assert!(!self.is_zero(), "division by zero");
        Rational(self.0.recip())
    }

    /// Exact integer value, if the denominator is one and it fits in i64.
    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

// Debug = Display; the reduced fraction is the canonical form.
impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(String);

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Parses `"p"` or `"p/q"` with arbitrary-precision integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseRationalError(s.to_string());
        match s.split_once('/') {
            None => {
                let n: BigInt = s.trim().parse().map_err(|_| bad())?;
                Ok(Rational::from(n))
            }
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(Rational::from_bigints(p, q))
            }
        }
    }
}

// JSON form: a plain integer when possible, otherwise the string "p/q".
impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if let Some(n) = self.to_i64() {
            serializer.serialize_i64(n)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(n) => Ok(Rational::from(n)),
            Repr::Str(s) => s.parse().map_err(|e| D::Error::custom(format!("{e}"))),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(self.0 / rhs.0)
    }
}

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        self.0 -= rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Dense matrix of rationals, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        QMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Convenience constructor from integer literals.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        QMatrix::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&n| Rational::from(n)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.entry(i, j) != self.entry(j, i) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.entry(i, j).to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Solves `A x = b` exactly by Gaussian elimination with partial (first
/// nonzero) pivoting. The residual of the returned solution is identically
/// zero.
pub fn solve_linear(a: &QMatrix, b: &[Rational]) -> Result<Vec<Rational>, ExactLinError> {
    let n = a.rows();
    if !a.is_square() {
        return Err(ExactLinError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            a.rows(),
            a.cols()
        )));
    }
    if b.len() != n {
        return Err(ExactLinError::DimensionMismatch(format!(
            "matrix is {n}x{n} but right-hand side has length {}",
            b.len()
        )));
    }
    // Augmented elimination.
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = (0..n).map(|j| a.entry(i, j).clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();

    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(ExactLinError::SingularMatrix)?;
        m.swap(col, pivot_row);
        let pivot = m[col][col].clone();
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..=n {
                let delta = &factor * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }

    // Back substitution.
    let mut x = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n].clone();
        for j in (i + 1)..n {
            acc -= &m[i][j] * &x[j];
        }
        x[i] = acc / m[i][i].clone();
    }
    Ok(x)
}

/// Determinant by fraction-preserving Gaussian elimination.
pub fn determinant(a: &QMatrix) -> Result<Rational, ExactLinError> {
    let n = a.rows();
    if !a.is_square() {
        return Err(ExactLinError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            a.rows(),
            a.cols()
        )));
    }
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| a.entry(i, j).clone()).collect())
        .collect();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(pivot_row) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Ok(Rational::zero());
        };
        if pivot_row != col {
            m.swap(col, pivot_row);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det = det * &pivot;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }
    Ok(det)
}

/// Rank over Q by row echelon reduction.
pub fn rank(a: &QMatrix) -> usize {
    let mut m: Vec<Vec<Rational>> = (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.entry(i, j).clone()).collect())
        .collect();
    let mut rank = 0;
    for col in 0..a.cols() {
        let Some(pivot_row) = (rank..a.rows()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot_row);
        let pivot = m[rank][col].clone();
        for r in (rank + 1)..a.rows() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..a.cols() {
                let delta = &factor * &m[rank][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
        rank += 1;
        if rank == a.rows() {
            break;
        }
    }
    rank
}

/// Tests negative definiteness of a symmetric matrix by Sylvester's
/// criterion: the leading principal minors must alternate in sign starting
/// negative. Equivalently, `-A` is positive definite.
///
/// The minors fall out of one pass of symmetric elimination: the k-th
/// leading minor is the product of the first k pivots, and a zero pivot
/// means some leading minor vanishes, which already rules definiteness out.
pub fn is_negative_definite(a: &QMatrix) -> Result<bool, ExactLinError> {
    if !a.is_symmetric() {
        return Err(ExactLinError::NotSymmetric);
    }
    let n = a.rows();
    if n == 0 {
        return Ok(true); // empty form is vacuously negative definite
    }
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| a.entry(i, j).clone()).collect())
        .collect();
    let mut minor = Rational::one();
    for col in 0..n {
        let pivot = m[col][col].clone();
        if pivot.is_zero() {
            return Ok(false);
        }
        minor = minor * &pivot;
        // (-1)^(col+1) * minor must be positive.
        let expected_sign = if (col + 1) % 2 == 0 { 1 } else { -1 };
        if minor.signum() != expected_sign {
            return Ok(false);
        }
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }
    Ok(true)
}
