//! Closed intervals with exact rational endpoints.
//!
//! These are the carrier for every certified sign computation: an element of
//! a field tower is evaluated under a real embedding into an interval, and
//! the interval is refined until it excludes zero. Square roots are rounded
//! outward to dyadic rationals, so enclosures are always sound.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::Rat;

/// A closed interval `[lo, hi]` with rational endpoints, `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(value: Rat) -> Self {
        Interval { lo: value.clone(), hi: value }
    }

    pub fn zero() -> Self {
        Interval::point(Rat::zero())
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn contains(&self, q: &Rat) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    /// Strictly positive or strictly negative, if the interval decides it.
    pub fn definite_sign(&self) -> Option<i32> {
        if self.lo.is_positive() {
            Some(1)
        } else if self.hi.is_negative() {
            Some(-1)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let mut lo = candidates[0].clone();
        let mut hi = candidates[0].clone();
        for c in &candidates[1..] {
            if c < &lo {
                lo = c.clone();
            }
            if c > &hi {
                hi = c.clone();
            }
        }
        Interval { lo, hi }
    }

    pub fn scale(&self, q: &Rat) -> Interval {
        if q.is_negative() {
            Interval { lo: &self.hi * q, hi: &self.lo * q }
        } else {
            Interval { lo: &self.lo * q, hi: &self.hi * q }
        }
    }

    pub fn add_rat(&self, q: &Rat) -> Interval {
        Interval { lo: &self.lo + q, hi: &self.hi + q }
    }

    /// Interval division; the divisor must exclude zero.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if other.contains_zero() {
            return None;
        }
        let candidates = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        let mut lo = candidates[0].clone();
        let mut hi = candidates[0].clone();
        for c in &candidates[1..] {
            if c < &lo {
                lo = c.clone();
            }
            if c > &hi {
                hi = c.clone();
            }
        }
        Some(Interval { lo, hi })
    }

    /// Sound enclosure of the square root of a nonnegative interval.
    ///
    /// `precision_bits` controls the dyadic rounding: the enclosure endpoints
    /// are within `2^-precision_bits` of the true roots. Returns `None` when
    /// the interval reaches below zero.
    pub fn sqrt(&self, precision_bits: u32) -> Option<Interval> {
        if self.lo.is_negative() {
            return None;
        }
        let lo = sqrt_lower(&self.lo, precision_bits);
        let hi = sqrt_upper(&self.hi, precision_bits);
        Some(Interval { lo, hi })
    }
}

/// Rational lower bound on `sqrt(q)` for `q >= 0`, within `2^-bits`.
pub fn sqrt_lower(q: &Rat, bits: u32) -> Rat {
    debug_assert!(!q.is_negative());
    if q.is_zero() {
        return Rat::zero();
    }
    // sqrt(n/d) = sqrt(n*d)/d; floor(sqrt(n*d*4^bits)) / (2^bits * d) <= sqrt(q)
    let n = q.numer();
    let d = q.denom();
    let scaled: BigInt = n * d << (2 * bits);
    let root = scaled.sqrt();
    Rat::new(root, d << bits)
}

/// Rational upper bound on `sqrt(q)` for `q >= 0`, within `2^-bits`.
pub fn sqrt_upper(q: &Rat, bits: u32) -> Rat {
    debug_assert!(!q.is_negative());
    if q.is_zero() {
        return Rat::zero();
    }
    let n = q.numer();
    let d = q.denom();
    let scaled: BigInt = n * d << (2 * bits);
    let root = scaled.sqrt() + BigInt::one();
    Rat::new(root, d << bits)
}

/// Exact square root of a rational, when one exists (nonnegative witness).
pub fn exact_sqrt(q: &Rat) -> Option<Rat> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(Rat::zero());
    }
    let rn = q.numer().sqrt();
    let rd = q.denom().sqrt();
    if &(&rn * &rn) == q.numer() && &(&rd * &rd) == q.denom() {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}
