//! Exact scalar arithmetic helpers: generic matrices with exact
//! determinants, linear solves, binomial coefficients, and the "a/b"
//! string form used everywhere on the CLI boundary.

use num::{BigInt, One, Signed, Zero};
use std::ops::{Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::{Error, Int, Rational, Result};

/// Scalar type usable in exact elimination: a field with equality testing.
/// `Rational` is the scalar used throughout the library; `f64` also
/// satisfies the bound for quick experiments.
pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Neg<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

/// Dense rectangular matrix over an exact scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows_in: Vec<Vec<T>>) -> Result<Self> {
        let rows = rows_in.len();
        let cols = rows_in.first().map_or(0, |r| r.len());
        if rows_in.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows,
            cols,
            data: rows_in.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Exact determinant by fraction-exact Gaussian elimination.
    /// The determinant of a 0x0 matrix is 1 (empty product).
    pub fn det(&self) -> Result<T> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(T::one());
        }
        let mut m = self.clone();
        let mut sign_flip = false;
        let mut det = T::one();
        for col in 0..n {
            let pivot_row = match (col..n).find(|&r| !m.get(r, col).is_zero()) {
                Some(r) => r,
                None => return Ok(T::zero()),
            };
            if pivot_row != col {
                m.swap_rows(pivot_row, col);
                sign_flip = !sign_flip;
            }
            let pivot = m.get(col, col).clone();
            det = det * pivot.clone();
            for r in col + 1..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone() / pivot.clone();
                for c in col..n {
                    let v = m.get(r, c).clone() - factor.clone() * m.get(col, c).clone();
                    m.set(r, c, v);
                }
            }
        }
        Ok(if sign_flip { -det } else { det })
    }

    /// Solve `self * x = rhs` exactly; the matrix must be square and invertible.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        if self.rows != self.cols || rhs.len() != self.rows {
            return Err(Error::Dimension("solve expects a square system".into()));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !m.get(r, col).is_zero())
                .ok_or_else(|| Error::Domain("singular linear system".into()))?;
            if pivot_row != col {
                m.swap_rows(pivot_row, col);
                b.swap(pivot_row, col);
            }
            let pivot = m.get(col, col).clone();
            for r in col + 1..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone() / pivot.clone();
                for c in col..n {
                    let v = m.get(r, c).clone() - factor.clone() * m.get(col, c).clone();
                    m.set(r, c, v);
                }
                let v = b[r].clone() - factor * b[col].clone();
                b[r] = v;
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = b[i].clone();
            for j in i + 1..n {
                acc = acc - m.get(i, j).clone() * x[j].clone();
            }
            x[i] = acc / m.get(i, i).clone();
        }
        Ok(x)
    }
}

/// Binomial coefficient C(n, k); zero outside 0 <= k <= n or for n < 0.
pub fn binomial(n: i64, k: i64) -> Int {
    if n < 0 || k < 0 || k > n {
        return Int::zero();
    }
    let k = k.min(n - k);
    let mut acc = Int::one();
    for t in 0..k {
        acc = acc * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    acc
}

/// Exact integer power with possibly negative exponent.
pub fn rat_pow(base: &Rational, exp: i64) -> Rational {
    if exp == 0 {
        return Rational::one();
    }
    let mut acc = Rational::one();
    let mut b = if exp > 0 { base.clone() } else { base.recip() };
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

pub fn rat_from(n: i64, d: i64) -> Rational {
    Rational::new(Int::from(n), Int::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from(Int::from(n))
}

/// Serialize as "a/b", or "a" when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let numer =
        BigInt::from_str(num_s.trim()).map_err(|e| Error::Parse(format!("'{num_s}': {e}")))?;
    let denom =
        BigInt::from_str(den_s.trim()).map_err(|e| Error::Parse(format!("'{den_s}': {e}")))?;
    if denom.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rational::new(numer, denom))
}

/// Approximate value, used only for pruning heuristics and never for results.
pub fn rat_to_f64(r: &Rational) -> f64 {
    let mut n = r.numer().clone();
    let mut d = r.denom().clone();
    // Keep magnitudes in f64 range by shifting both sides.
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = (nb.max(db) - 900).max(0) as u64;
    if shift > 0 {
        n >>= shift;
        d >>= shift;
    }
    if d.is_zero() {
        return if n.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    use num::ToPrimitive;
    let nf = n.to_f64().unwrap_or(f64::NAN);
    let df = d.to_f64().unwrap_or(f64::NAN);
    nf / df
}
