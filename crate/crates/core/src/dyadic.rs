//! Exact dyadic rationals `m / 2^k` and closed dyadic intervals.
//!
//! Every value is kept in canonical form (odd numerator, or exponent zero), so
//! structural equality and hashing agree with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    /// `num / 2^exp`, normalized.
    pub fn new(num: BigInt, exp: u64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_ratio(num: i64, exp: u64) -> Self {
        Dyadic::new(BigInt::from(num), exp)
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u64) -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: k,
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        if self.exp == 0 {
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
        if tz > 0 {
            self.num >>= tz;
            self.exp -= tz;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn half(&self) -> Dyadic {
        self.mul_pow2(-1)
    }

    /// `self * 2^k` for any integer `k`.
    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        if k >= 0 {
            let k = k as u64;
            if k <= self.exp {
                Dyadic::new(self.num.clone(), self.exp - k)
            } else {
                Dyadic::new(&self.num << (k - self.exp), 0)
            }
        } else {
            Dyadic::new(self.num.clone(), self.exp + k.unsigned_abs())
        }
    }

    pub fn square(&self) -> Dyadic {
        self * self
    }

    /// Exact quotient, when it is itself dyadic.
    pub fn checked_div(&self, other: &Dyadic) -> Option<Dyadic> {
        if other.is_zero() {
            return None;
        }
        let tz = other.num.trailing_zeros().unwrap_or(0);
        let odd = &other.num >> tz;
        let (q, r) = self.num.div_rem(&odd);
        if !r.is_zero() {
            return None;
        }
        // self/other = q * 2^(other.exp - self.exp - tz)
        let shift = other.exp as i128 - self.exp as i128 - tz as i128;
        Some(Dyadic::new(q, 0).mul_pow2(shift as i64))
    }

    /// Largest multiple of `2^-precision` not above `self`.
    pub fn floor_to(&self, precision: u64) -> Dyadic {
        if self.exp <= precision {
            return self.clone();
        }
        let shift = self.exp - precision;
        Dyadic::new(self.num.div_floor(&(BigInt::one() << shift)), precision)
    }

    /// Smallest multiple of `2^-precision` not below `self`.
    pub fn ceil_to(&self, precision: u64) -> Dyadic {
        if self.exp <= precision {
            return self.clone();
        }
        let shift = self.exp - precision;
        let d = BigInt::one() << shift;
        let (q, r) = self.num.div_mod_floor(&d);
        let q = if r.is_zero() { q } else { q + 1 };
        Dyadic::new(q, precision)
    }

    /// Nearest float; for diagnostics and sampling only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        if bits <= 1000 && self.exp <= 1000 {
            self.num.to_f64().unwrap_or(f64::NAN) / 2f64.powi(self.exp as i32)
        } else {
            let drop = bits.saturating_sub(64);
            let top = (&self.num >> drop).to_f64().unwrap_or(f64::NAN);
            top * 2f64.powf(drop as f64 - self.exp as f64)
        }
    }

    pub fn min(self, other: Dyadic) -> Dyadic {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Dyadic) -> Dyadic {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.num.cmp(&other.num),
            Ordering::Less => (&self.num << (other.exp - self.exp)).cmp(&other.num),
            Ordering::Greater => self.num.cmp(&(&other.num << (self.exp - other.exp))),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, u64) {
    match a.exp.cmp(&b.exp) {
        Ordering::Equal => (a.num.clone(), b.num.clone(), a.exp),
        Ordering::Less => (&a.num << (b.exp - a.exp), b.num.clone(), b.exp),
        Ordering::Greater => (a.num.clone(), &b.num << (a.exp - b.exp), a.exp),
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (x, y, e) = aligned(self, rhs);
        Dyadic::new(x + y, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (x, y, e) = aligned(self, rhs);
        Dyadic::new(x - y, e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
        impl $tr<Dyadic> for &Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -(self.clone())
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

/// Text form `m/2^k`. Printing always uses the canonical form, so
/// `parse(print(d)) == d` and canonical strings print back unchanged.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `m/2^k`, `m/d` with `d` a power of two, and a bare integer.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |detail: &str| Error::parse("dyadic", format!("{s:?}: {detail}"));
        let (num, exp) = match s.split_once('/') {
            Some((n, rest)) => {
                let rest = rest.trim();
                let exp = match rest.strip_prefix("2^") {
                    Some(e) => e.trim().parse().map_err(|_| bad("bad exponent"))?,
                    None => {
                        let d: u64 = rest.parse().map_err(|_| bad("bad denominator"))?;
                        if !d.is_power_of_two() {
                            return Err(bad("denominator must be a power of two"));
                        }
                        d.trailing_zeros() as u64
                    }
                };
                (n.trim(), exp)
            }
            None => (s, 0),
        };
        let num: BigInt = num.parse().map_err(|_| bad("bad numerator"))?;
        Ok(Dyadic::new(num, exp))
    }
}

impl serde::Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a point sits relative to a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    OnLeftEndpoint,
    OnRightEndpoint,
    Outside,
}

/// A closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(DyadicInterval { lo, hi })
    }

    pub fn point(x: Dyadic) -> Self {
        DyadicInterval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn unit() -> Self {
        DyadicInterval {
            lo: Dyadic::zero(),
            hi: Dyadic::one(),
        }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Dyadic {
        (&self.lo + &self.hi).half()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Endpoint hits are reported separately from the interior. For a
    /// degenerate interval the left endpoint wins.
    pub fn contains(&self, x: &Dyadic) -> Containment {
        if x == &self.lo {
            Containment::OnLeftEndpoint
        } else if x == &self.hi {
            Containment::OnRightEndpoint
        } else if x > &self.lo && x < &self.hi {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Minkowski sum.
    pub fn add(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    /// Scaling by a non-negative dyadic.
    pub fn scale(&self, k: &Dyadic) -> DyadicInterval {
        debug_assert!(!k.is_negative());
        DyadicInterval {
            lo: &self.lo * k,
            hi: &self.hi * k,
        }
    }

    pub fn shift(&self, k: &Dyadic) -> DyadicInterval {
        DyadicInterval {
            lo: &self.lo + k,
            hi: &self.hi + k,
        }
    }

    /// Clamps both endpoints into `[0, 1]`.
    pub fn clamp_unit(&self) -> DyadicInterval {
        let clamp = |x: &Dyadic| x.clone().max(Dyadic::zero()).min(Dyadic::one());
        DyadicInterval {
            lo: clamp(&self.lo),
            hi: clamp(&self.hi),
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
