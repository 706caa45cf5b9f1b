//! Exact rational helpers shared by the volume, Euler and l2 bookkeeping.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `p/q` or `p` (optionally signed). Returns `None` on a zero denominator.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: BigInt = num.trim().parse().ok()?;
    let den: BigInt = den.trim().parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

/// Alternating sum `sum_k (-1)^k values[k]`.
pub fn alternating_sum(values: &[Rational]) -> Rational {
    values.iter().enumerate().fold(zero(), |acc, (k, v)| {
        if k % 2 == 0 {
            acc + v
        } else {
            acc - v
        }
    })
}
