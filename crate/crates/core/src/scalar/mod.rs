//! Scalars of the two supported local fields: the reals with the usual
//! absolute value, and the rationals completed at a prime `p` with
//! `|x| = p^(-v_p(x))`.
//!
//! Non-archimedean elements are kept as exact reduced rationals, so every
//! valuation identity (`v(xy) = v(x) + v(y)`, the ultrametric inequality)
//! holds exactly rather than up to a tolerance.

mod field;
mod interval;
mod magnitude;

pub use field::{LocalField, PAdic, Real, REAL_DET_TOL};
pub use interval::Interval;
pub use magnitude::Magnitude;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which completion of the rationals the arithmetic lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Archimedean,
    #[serde(rename = "nonarchimedean")]
    NonArchimedean { prime: u64 },
}

impl FieldSpec {
    pub fn padic(prime: u64) -> Result<Self> {
        let spec = FieldSpec::NonArchimedean { prime };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::Archimedean => Ok(()),
            FieldSpec::NonArchimedean { prime } if is_prime(prime) => Ok(()),
            FieldSpec::NonArchimedean { prime } => {
                Err(Error::Invariant(format!("{prime} is not a prime")))
            }
        }
    }

    pub fn is_archimedean(&self) -> bool {
        matches!(self, FieldSpec::Archimedean)
    }

    pub fn prime(&self) -> Option<u64> {
        match *self {
            FieldSpec::Archimedean => None,
            FieldSpec::NonArchimedean { prime } => Some(prime),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Archimedean => write!(f, "R"),
            FieldSpec::NonArchimedean { prime } => write!(f, "Q_{prime}"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k.saturating_mul(k) <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// A p-adic valuation: an integer, or `+∞` for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl std::ops::Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(n: &BigInt, p: u64) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        n = q;
        v += 1;
    }
}

/// `v_p(num) - v_p(den)` for a reduced rational.
pub fn rational_valuation(x: &BigRational, p: u64) -> Valuation {
    match int_valuation(x.numer(), p) {
        None => Valuation::Infinite,
        Some(vn) => {
            let vd = int_valuation(x.denom(), p).expect("denominator is nonzero");
            Valuation::Finite(vn - vd)
        }
    }
}

/// `p^(-v)` as a real number.
pub fn padic_abs_from_valuation(v: Valuation, p: u64) -> f64 {
    match v {
        Valuation::Infinite => 0.0,
        Valuation::Finite(v) => (p as f64).powi(-(v as i32)),
    }
}

/// `p^k` as an exact rational (`k` may be negative).
pub fn prime_power(p: u64, k: i64) -> BigRational {
    let base = BigInt::from(p);
    let mag = num_traits::pow(base, k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

/// An element of one of the supported fields as it appears in files.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Real(f64),
    Rational(BigRational),
}

impl Scalar {
    /// Parses a scalar literal for the given field.
    ///
    /// Accepted forms are `num/den`, integers and decimal literals (with an
    /// optional exponent). For the non-archimedean field decimals are read
    /// exactly: `0.75` becomes `3/4`.
    pub fn parse(s: &str, field: &FieldSpec) -> Result<Scalar> {
        let s = s.trim();
        match field {
            FieldSpec::Archimedean => {
                if s.contains('/') {
                    let q = parse_exact(s)?;
                    Ok(Scalar::Real(rational_to_f64(&q)))
                } else {
                    let x: f64 = s
                        .parse()
                        .map_err(|_| Error::Parse(format!("not a real literal: {s:?}")))?;
                    if !x.is_finite() {
                        return Err(Error::Parse(format!("non-finite real: {s:?}")));
                    }
                    Ok(Scalar::Real(x))
                }
            }
            FieldSpec::NonArchimedean { .. } => Ok(Scalar::Rational(parse_exact(s)?)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Real(x) => *x,
            Scalar::Rational(q) => rational_to_f64(q),
        }
    }

    /// The exact rational value. Finite reals are dyadic rationals, so this never fails for them.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Real(x) => BigRational::from_float(*x),
            Scalar::Rational(q) => Some(q.clone()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest string that parses back to the same value.
            Scalar::Real(x) => write!(f, "{x}"),
            Scalar::Rational(q) => write!(f, "{q}"),
        }
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact parse of `num/den`, an integer, or a decimal literal.
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational literal: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

/// `|x|` in the given field.
pub fn abs_value(x: &Scalar, field: &FieldSpec) -> f64 {
    match field {
        FieldSpec::Archimedean => x.to_f64().abs(),
        FieldSpec::NonArchimedean { prime } => match x.to_rational() {
            Some(q) => padic_abs_from_valuation(rational_valuation(&q, *prime), *prime),
            None => f64::NAN,
        },
    }
}

/// `v_p(x)`; only defined for exact rationals.
pub fn valuation(x: &Scalar, prime: u64) -> Result<Valuation> {
    if !is_prime(prime) {
        return Err(Error::Domain(format!("{prime} is not a prime")));
    }
    match x {
        Scalar::Rational(q) => Ok(rational_valuation(q, prime)),
        Scalar::Real(_) => Err(Error::Usage(
            "valuation is only defined for exact rationals".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn abs_value_examples() {
        let p2 = FieldSpec::padic(2).unwrap();
        let p3 = FieldSpec::padic(3).unwrap();
        assert_eq!(abs_value(&Scalar::Rational(q(0, 1)), &p2), 0.0);
        assert_eq!(abs_value(&Scalar::Real(0.0), &FieldSpec::Archimedean), 0.0);
        assert_eq!(abs_value(&Scalar::Rational(q(12, 1)), &p2), 0.25);
        assert_eq!(abs_value(&Scalar::Rational(q(5, 3)), &p3), 3.0);
        assert_eq!(abs_value(&Scalar::Real(-2.5), &FieldSpec::Archimedean), 2.5);
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&Scalar::Rational(q(8, 1)), 2).unwrap(), Valuation::Finite(3));
        assert_eq!(valuation(&Scalar::Rational(q(1, 1)), 7).unwrap(), Valuation::Finite(0));
        assert_eq!(valuation(&Scalar::Rational(q(9, 2)), 3).unwrap(), Valuation::Finite(2));
        assert_eq!(valuation(&Scalar::Rational(q(0, 1)), 3).unwrap(), Valuation::Infinite);
        assert!(matches!(valuation(&Scalar::Real(1.0), 3), Err(Error::Usage(_))));
        assert!(matches!(valuation(&Scalar::Rational(q(1, 1)), 4), Err(Error::Domain(_))));
    }

    #[test]
    fn field_spec_rejects_composites() {
        assert!(FieldSpec::padic(4).is_err());
        assert!(FieldSpec::padic(1).is_err());
        assert!(FieldSpec::padic(97).is_ok());
        let json = serde_json::to_string(&FieldSpec::NonArchimedean { prime: 5 }).unwrap();
        assert_eq!(json, r#"{"kind":"nonarchimedean","prime":5}"#);
        let back: FieldSpec = serde_json::from_str(r#"{"kind":"archimedean"}"#).unwrap();
        assert_eq!(back, FieldSpec::Archimedean);
    }

    #[test]
    fn parses_literals() {
        let p = FieldSpec::padic(5).unwrap();
        assert_eq!(Scalar::parse("3/4", &p).unwrap(), Scalar::Rational(q(3, 4)));
        assert_eq!(Scalar::parse("0.75", &p).unwrap(), Scalar::Rational(q(3, 4)));
        assert_eq!(Scalar::parse("-12", &p).unwrap(), Scalar::Rational(q(-12, 1)));
        assert_eq!(Scalar::parse("1.5e2", &p).unwrap(), Scalar::Rational(q(150, 1)));
        assert_eq!(Scalar::parse("6/4", &p).unwrap().to_string(), "3/2");
        assert!(Scalar::parse("1/0", &p).is_err());
        assert!(Scalar::parse("abc", &p).is_err());
        let r = Scalar::parse("1/4", &FieldSpec::Archimedean).unwrap();
        assert_eq!(r, Scalar::Real(0.25));
        assert!(Scalar::parse("nan", &FieldSpec::Archimedean).is_err());
    }

    proptest! {
        #[test]
        fn valuations_add_and_are_ultrametric(
            a in -5000i64..5000, b in 1i64..5000, c in -5000i64..5000, d in 1i64..5000,
            pi in 0usize..4,
        ) {
            let p = [2u64, 3, 5, 7][pi];
            let x = q(a, b);
            let y = q(c, d);
            let vx = rational_valuation(&x, p);
            let vy = rational_valuation(&y, p);
            prop_assert_eq!(rational_valuation(&(&x * &y), p), vx + vy);
            let vs = rational_valuation(&(&x + &y), p);
            prop_assert!(vs >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }

        #[test]
        fn real_display_round_trips(x in proptest::num::f64::NORMAL) {
            let s = Scalar::Real(x).to_string();
            let back = Scalar::parse(&s, &FieldSpec::Archimedean).unwrap();
            prop_assert_eq!(back, Scalar::Real(x));
        }
    }
}
