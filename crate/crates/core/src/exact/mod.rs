//! Exact arithmetic: rationals, univariate polynomials, the rational function
//! field `Q(x)`, and dense linear algebra over either field.

mod matrix;
mod poly;
mod ratfunc;
mod solve;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use matrix::{FieldMatrix, RatMatrix};
pub use poly::{poly_gcd, Poly};
pub use ratfunc::{eval_ratfunc, ratfunc_normalize, RatFunc};
pub use solve::{
    determinant, mat_inverse, solve_affine_system, solve_affine_system_with, Solution,
    SolveOptions, DEFAULT_DEGREE_CAP,
};

/// Arbitrary-precision rational number. Always stored in lowest terms with a
/// positive denominator.
pub type Rat = BigRational;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("pole at x = {}", rat_string(.at))]
    Pole { at: Rat },
    #[error("singular matrix: no pivot in column {column}")]
    Singular { column: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("intermediate polynomial degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
}

/// Minimal field interface shared by [`Rat`] and [`RatFunc`].
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_rat(r: &Rat) -> Self;

    /// Rescale a row of a linear system by a nonzero field element so that
    /// its entries become coprime ring elements (integers, resp. polynomials).
    fn make_row_primitive(row: &mut [Self]);

    /// Rough size measure used to choose cheap pivots.
    fn complexity(&self) -> usize;

    /// Polynomial degree measure; zero for constants.
    fn degree(&self) -> usize {
        0
    }
}

impl Field for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn make_row_primitive(row: &mut [Self]) {
        let mut den_lcm = BigInt::one();
        let mut num_gcd = BigInt::zero();
        for v in row.iter().filter(|v| !v.is_zero()) {
            den_lcm = den_lcm.lcm(v.denom());
            num_gcd = num_gcd.gcd(v.numer());
        }
        if num_gcd.is_zero() {
            return;
        }
        let scale = Rat::new(den_lcm, num_gcd);
        if scale.is_one() {
            return;
        }
        for v in row.iter_mut() {
            if !v.is_zero() {
                *v = &*v * &scale;
            }
        }
    }

    fn complexity(&self) -> usize {
        (self.numer().bits() + self.denom().bits()) as usize
    }
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `"num/den"` with the denominator always present.
pub fn rat_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `"p/q"`, `"p"` or a decimal literal such as `"-0.25"`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rat::new(n, d);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(Rat::from_integer)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerator/denominator: scale through bit lengths.
        let shift = r.numer().bits().max(r.denom().bits()) as i64 - 1000;
        let n = r.numer() >> shift.max(0) as usize;
        let d = r.denom() >> shift.max(0) as usize;
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact conversion of a finite double.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}
