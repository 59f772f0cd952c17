//! Closed real intervals with outward rounding.
//!
//! Each operation computes its endpoints in round-to-nearest and then moves
//! them one ulp outward. Round-to-nearest is within half an ulp of the exact
//! endpoint, so the widened interval always encloses the exact result.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// The degenerate interval `[x, x]`; `x` is taken as exact.
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    fn outward(lo: f64, hi: f64) -> Self {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval::new(0.0, self.hi.max(-self.lo))
        }
    }

    pub fn square(self) -> Self {
        let a = self.abs();
        Interval::outward(a.lo * a.lo, a.hi * a.hi)
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(self) -> Self {
        let lo = self.lo.max(0.0).sqrt();
        let hi = self.hi.max(0.0).sqrt();
        Interval::new(lo.next_down().max(0.0), hi.next_up())
    }

    pub fn max(self, other: Interval) -> Self {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    pub fn min(self, other: Interval) -> Self {
        Interval::new(self.lo.min(other.lo), self.hi.min(other.hi))
    }

    /// Enclosure of a sum of intervals.
    pub fn sum<I: IntoIterator<Item = Interval>>(items: I) -> Self {
        items.into_iter().fold(Interval::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::outward(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Panics in debug builds if the divisor contains zero.
    fn div(self, rhs: Interval) -> Interval {
        debug_assert!(!rhs.contains_zero(), "interval division by {rhs}");
        if rhs.contains_zero() {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        let c = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::outward(lo, hi)
    }
}
