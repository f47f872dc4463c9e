//! The numeric abstraction the factor algebra is written against.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Tolerance used to decide that a floating-point row already sums to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A probability-carrying number.
///
/// Implemented for `f32`, `f64` and [`BigRational`]. Rationals make every
/// operation exact, which is handy when checking the float path.
pub trait Scalar: Num + Clone + Debug + PartialOrd + Send + Sync + 'static {
    fn from_f64(value: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn from_count(n: usize) -> Self;

    /// Parses a plain decimal literal such as `50`, `0.125` or `2.5e-3`.
    /// Signs, `inf` and `nan` are rejected.
    fn parse_decimal(text: &str) -> Option<Self>;

    /// Text that [`Scalar::parse_decimal`] reads back to the same value where
    /// the type allows it.
    fn to_decimal_string(&self) -> String;

    /// Whether a row that sums to `sum` can be kept without renormalizing.
    fn is_unit_sum(sum: &Self) -> bool;

    /// True for finite values `>= 0`.
    fn is_nonnegative(&self) -> bool {
        *self >= Self::zero()
    }

    fn sum_of<'a, I>(values: I) -> Self
    where
        I: IntoIterator<Item = &'a Self>,
    {
        values
            .into_iter()
            .fold(Self::zero(), |acc, v| acc + v.clone())
    }
}

/// Checks the shape of a decimal literal: digits, an optional fraction and an
/// optional exponent. At least one digit must appear before the exponent.
pub fn is_decimal_literal(text: &str) -> bool {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut mantissa_digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
        mantissa_digits += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            mantissa_digits += 1;
        }
    }
    if mantissa_digits == 0 {
        return false;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    i == bytes.len()
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(value: f64) -> Option<Self> {
                value.is_finite().then_some(value as $t)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_count(n: usize) -> Self {
                n as $t
            }

            fn parse_decimal(text: &str) -> Option<Self> {
                if !is_decimal_literal(text) {
                    return None;
                }
                text.parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn to_decimal_string(&self) -> String {
                // Display prints the shortest representation that round-trips.
                format!("{}", self)
            }

            fn is_unit_sum(sum: &Self) -> bool {
                ((*sum as f64) - 1.0).abs() <= ROW_SUM_TOLERANCE
            }

            fn is_nonnegative(&self) -> bool {
                self.is_finite() && *self >= 0.0
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    fn from_f64(value: f64) -> Option<Self> {
        BigRational::from_float(value)
    }

    fn to_f64(&self) -> f64 {
        // Ratio<BigInt>::to_f64 rounds correctly.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        if !is_decimal_literal(text) {
            return None;
        }
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i64>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = digits.parse().ok()?;
        let scale = exponent - frac_part.len() as i64;
        // Guard against absurd exponents building enormous integers.
        if scale.unsigned_abs() > 4096 {
            return None;
        }
        let ten = BigInt::from(10u32);
        let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
        Some(if scale >= 0 {
            BigRational::from_integer(numer * pow)
        } else {
            BigRational::new(numer, pow)
        })
    }

    fn to_decimal_string(&self) -> String {
        // Exact when the reduced denominator has only factors 2 and 5,
        // otherwise the nearest double.
        let mut denom = self.denom().clone();
        let two = BigInt::from(2u32);
        let five = BigInt::from(5u32);
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (&denom % &two).is_zero() {
            denom /= &two;
            twos += 1;
        }
        while (&denom % &five).is_zero() {
            denom /= &five;
            fives += 1;
        }
        if !denom.is_one() {
            return format!("{}", Scalar::to_f64(self));
        }
        let places = twos.max(fives);
        let scaled = self * BigRational::from_integer(num_traits::pow(BigInt::from(10u32), places));
        let digits = scaled.to_integer().abs().to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        if places == 0 {
            return format!("{sign}{digits}");
        }
        let padded = format!("{digits:0>width$}", width = places + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - places);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    fn is_unit_sum(sum: &Self) -> bool {
        sum.is_one()
    }
}
