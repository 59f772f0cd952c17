use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{Interval, Valuation};

/// A nonnegative real quantity (a ratio or a distance) in the form its
/// producer can vouch for: a float, a rigorous enclosure, or an exact power
/// of `p`. Threshold tests are one-sided: they answer "certainly ≤ t" or
/// "certainly > t" and are exact for the p-adic form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Magnitude {
    /// A floating-point value together with its natural log, which stays
    /// finite after the value underflows.
    Float { value: f64, log: f64 },
    /// A certified enclosure `[lo, hi]`.
    Enclosure { lo: f64, hi: f64 },
    /// Exactly `p^(-valuation)`; `valuation = None` means zero.
    PadicPower { prime: u64, valuation: Option<i64> },
}

impl Magnitude {
    pub fn from_value(value: f64) -> Self {
        Magnitude::Float { value, log: value.ln() }
    }

    pub fn from_log(log: f64) -> Self {
        Magnitude::Float { value: log.exp(), log }
    }

    pub fn from_interval(i: Interval) -> Self {
        Magnitude::Enclosure { lo: i.lo.max(0.0), hi: i.hi }
    }

    pub fn padic(prime: u64, v: Valuation) -> Self {
        Magnitude::PadicPower { prime, valuation: v.finite() }
    }

    /// Best single value: the float, the enclosure's lower end, or the exact power.
    pub fn value(&self) -> f64 {
        match *self {
            Magnitude::Float { value, .. } => value,
            Magnitude::Enclosure { lo, .. } => lo,
            Magnitude::PadicPower { prime, valuation } => match valuation {
                None => 0.0,
                Some(v) => (prime as f64).powi(-(v as i32)),
            },
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            Magnitude::Float { log, .. } => log,
            Magnitude::Enclosure { lo, .. } => lo.ln(),
            Magnitude::PadicPower { prime, valuation } => match valuation {
                None => f64::NEG_INFINITY,
                Some(v) => -(v as f64) * (prime as f64).ln(),
            },
        }
    }

    fn exact(prime: u64, valuation: Option<i64>) -> Option<BigRational> {
        valuation.map(|v| {
            let p = BigInt::from(prime);
            let pk = BigRational::from_integer(p.pow(v.unsigned_abs() as u32));
            if v >= 0 {
                BigRational::one() / pk
            } else {
                pk
            }
        })
    }

    /// `self ≤ t²`, with `t²` rounded downward in the enclosure case.
    pub fn certainly_le_square(&self, t: f64) -> bool {
        match *self {
            Magnitude::Float { value, log } => {
                if value > 0.0 && value.is_normal() {
                    value <= t * t
                } else {
                    log <= 2.0 * t.ln()
                }
            }
            Magnitude::Enclosure { hi, .. } => hi <= Interval::point(t).square().lo,
            Magnitude::PadicPower { prime, valuation } => {
                let Some(t) = BigRational::from_float(t) else {
                    return false;
                };
                match Self::exact(prime, valuation) {
                    None => true,
                    Some(x) => x <= &t * &t,
                }
            }
        }
    }

    /// `self > t`.
    pub fn certainly_gt(&self, t: f64) -> bool {
        self.compare_below(t, true)
    }

    /// `self ≥ t`.
    pub fn certainly_ge(&self, t: f64) -> bool {
        self.compare_below(t, false)
    }

    fn compare_below(&self, t: f64, strict: bool) -> bool {
        let cmp = |x: f64| if strict { x > t } else { x >= t };
        match *self {
            Magnitude::Float { value, log } => {
                if value > 0.0 && value.is_normal() || t <= 0.0 {
                    cmp(value)
                } else if strict {
                    log > t.ln()
                } else {
                    log >= t.ln()
                }
            }
            Magnitude::Enclosure { lo, .. } => cmp(lo),
            Magnitude::PadicPower { prime, valuation } => {
                let Some(t) = BigRational::from_float(t) else {
                    return false;
                };
                let x = Self::exact(prime, valuation).unwrap_or_else(BigRational::zero);
                if strict {
                    x > t
                } else {
                    x >= t
                }
            }
        }
    }
}
