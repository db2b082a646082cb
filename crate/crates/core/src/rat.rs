//! Exact rational arithmetic helpers.
//!
//! All densities, thresholds and derived constants in this crate are exact
//! `BigRational` values so that verdicts are platform-independent and
//! reproducible byte for byte.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Shorthand used throughout the crate.
pub type Rat = BigRational;

/// `n/d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn rat_int<T: Into<BigInt>>(n: T) -> Rat {
    BigRational::from_integer(n.into())
}

/// Smallest integer `>= r`, as usize. Errors on negative values.
pub fn ceil_usize(r: &Rat) -> Result<usize> {
    let c = r.ceil().to_integer();
    if c.sign() == num_bigint::Sign::Minus {
        return Ok(0);
    }
    usize::try_from(&c).map_err(|_| Error::Parameter(format!("value {c} out of range")))
}

/// Parses "3", "1/3" or "0.25" into an exact rational.
///
/// Decimal strings are read exactly (0.25 -> 1/4), never through floats.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parameter("empty rational".into()));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s),
    };
    let val = if let Some((num, den)) = body.split_once('/') {
        let n: BigInt = num
            .parse()
            .map_err(|_| Error::Parameter(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .parse()
            .map_err(|_| Error::Parameter(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parameter(format!("zero denominator in {s:?}")));
        }
        BigRational::new(n, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        let int = if int.is_empty() { "0" } else { int };
        let i: BigInt = int
            .parse()
            .map_err(|_| Error::Parameter(format!("bad integer part in {s:?}")))?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parameter(format!("bad fraction part in {s:?}")));
        }
        let f: BigInt = frac
            .parse()
            .map_err(|_| Error::Parameter(format!("bad fraction part in {s:?}")))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        BigRational::from_integer(i) + BigRational::new(f, scale)
    } else {
        let i: BigInt = body
            .parse()
            .map_err(|_| Error::Parameter(format!("bad rational {s:?}")))?;
        BigRational::from_integer(i)
    };
    Ok(if sign < 0 { -val } else { val })
}

/// Renders a rational as "p/q" ("p" when integral). Inverse of [`parse_rat`].
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True iff `|a - b| >= eps`, evaluated exactly.
pub fn deviates_by(a: &Rat, b: &Rat, eps: &Rat) -> bool {
    (a - b).abs() >= *eps
}

/// Exact comparison `count >= r * total` without constructing a quotient.
pub fn int_at_least(count: usize, r: &Rat, total: usize) -> bool {
    rat_int(count) >= r * rat_int(total)
}

/// Exact comparison `count > r * total`.
pub fn int_greater(count: usize, r: &Rat, total: usize) -> bool {
    rat_int(count) > r * rat_int(total)
}

pub fn one() -> Rat {
    BigRational::one()
}

pub fn zero() -> Rat {
    BigRational::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_decimal_integer() {
        assert_eq!(parse_rat("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("7").unwrap(), rat_int(7));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("a.b").is_err());
        assert!(parse_rat("1.2.3").is_err());
    }

    #[test]
    fn round_trips_formatting() {
        for s in ["1/3", "7", "-3/5", "1000000007/13"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(fmt_rat(&r), s.trim_start_matches('+'));
        }
    }

    #[test]
    fn ceil_behaves() {
        assert_eq!(ceil_usize(&rat(7, 2)).unwrap(), 4);
        assert_eq!(ceil_usize(&rat(-1, 2)).unwrap(), 0);
        assert_eq!(ceil_usize(&rat_int(5)).unwrap(), 5);
    }
}
