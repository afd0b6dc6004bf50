//! Exact rational scalar used for every combinatorial quantity.
//!
//! `Rational` is an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator after every operation, so equality is structural.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Integer as a rational.
pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `p/q` as a rational. Panics on `q == 0`; use [`parse_rational`] for input.
pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"` or a plain integer string.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let numer: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
    let denom: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?,
        None => BigInt::from(1),
    };
    if denom.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(numer, denom))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Range(format!("{x} is not finite")))
}

/// Best rational approximation of `x` within `10^-digits / 2`,
/// found by truncating the continued-fraction expansion. Exact decimal
/// inputs come back as the reduced decimal fraction itself.
pub fn rationalize(x: f64, digits: u32) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Range(format!("{x} is not finite")));
    }
    let target = from_f64(x)?;
    let eps = Rational::new(BigInt::from(1), BigInt::from(10u64).pow(digits) * 2);
    let mut rest = target.clone();
    // Convergents h/k of the continued fraction of x.
    let (mut h_prev, mut h) = (BigInt::from(1), rest.floor().to_integer());
    let (mut k_prev, mut k) = (BigInt::from(0), BigInt::from(1));
    for _ in 0..64 {
        let approx = Rational::new(h.clone(), k.clone());
        if (&approx - &target).abs() <= eps {
            return Ok(approx);
        }
        let frac = &rest - rest.floor();
        if frac.is_zero() {
            return Ok(approx);
        }
        rest = frac.recip();
        let a = rest.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
    }
    Ok(Rational::new(h, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1/3", "-7/2", "5", "0", "-12"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(r.to_string(), s);
        }
        // Normalization to lowest terms with positive denominator.
        assert_eq!(parse_rational("2/6").unwrap(), frac(1, 3));
        assert_eq!(parse_rational("1/-3").unwrap().to_string(), "-1/3");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn arithmetic_stays_reduced() {
        let a = frac(1, 6) + frac(1, 3);
        assert_eq!(a, frac(1, 2));
        assert_eq!(a.denom(), &BigInt::from(2));
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.05, 12).unwrap(), frac(1, 20));
        assert_eq!(rationalize(-0.25, 12).unwrap(), frac(-1, 4));
        assert_eq!(rationalize(0.0, 12).unwrap(), rat(0));
        let r = rationalize(std::f64::consts::PI, 12).unwrap();
        assert!((to_f64(&r) - std::f64::consts::PI).abs() < 1e-12);
    }
}
