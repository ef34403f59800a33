//! Probability measures on Cantor space, presented as cylinder-mass oracles.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};

/// A probability measure on 2^ω, queried one cylinder at a time.
///
/// Exact measures answer [`Measure::mass`] with the true dyadic mass.
/// Approximate measures refuse `mass` with [`Error::NotExact`] and answer
/// [`Measure::enclosure`] with an interval of width at most `2^-precision`
/// containing the true mass.
pub trait Measure: Send + Sync + fmt::Debug {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic>;

    fn enclosure(&self, sigma: &Bits, _precision: u64) -> Result<DyadicInterval> {
        self.mass(sigma).map(DyadicInterval::point)
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn declared_atomless(&self) -> bool {
        false
    }

    fn declared_positive(&self) -> bool {
        false
    }

    /// A value within `2^-precision` of the true mass.
    fn approx(&self, sigma: &Bits, precision: u64) -> Result<Dyadic> {
        Ok(self.enclosure(sigma, precision)?.midpoint())
    }
}

pub type MeasureRef = Arc<dyn Measure>;

/// `ceil(log2(n))` for `n ≥ 1`, and 0 for `n = 0`.
pub(crate) fn ceil_log2(n: u128) -> u64 {
    if n <= 1 {
        0
    } else {
        128 - (n - 1).leading_zeros() as u64
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Lebesgue;

impl Measure for Lebesgue {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic> {
        Ok(Dyadic::pow2_neg(sigma.len() as u64))
    }

    fn declared_atomless(&self) -> bool {
        true
    }

    fn declared_positive(&self) -> bool {
        true
    }
}

/// Generalized Bernoulli measure: bit `i` is 0 with probability `p[i]`.
/// The last listed parameter repeats forever.
#[derive(Debug, Clone)]
pub struct Bernoulli {
    p: Vec<Dyadic>,
}

impl Bernoulli {
    pub fn new(p: Vec<Dyadic>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter(
                "bernoulli needs at least one parameter".into(),
            ));
        }
        if let Some(bad) = p
            .iter()
            .find(|x| **x <= Dyadic::zero() || **x >= Dyadic::one())
        {
            return Err(Error::InvalidParameter(format!(
                "bernoulli parameter {bad} outside (0,1)"
            )));
        }
        Ok(Bernoulli { p })
    }

    pub fn constant(p: Dyadic) -> Result<Self> {
        Bernoulli::new(vec![p])
    }

    /// Parameters `p_i` = nearest multiple of `2^-(i+2)` to `num/den`, for
    /// `i < levels`. A dyadic stand-in for a non-dyadic i.i.d. measure.
    pub fn approximating(num: u64, den: u64, levels: usize) -> Result<Self> {
        if den == 0 || num == 0 || num >= den || levels == 0 {
            return Err(Error::InvalidParameter(format!(
                "cannot approximate {num}/{den} with {levels} levels"
            )));
        }
        let p = (0..levels)
            .map(|i| {
                let k = i as u64 + 2;
                let scaled = (BigInt::from(num) << (k + 1)) / BigInt::from(den);
                // round half up
                Dyadic::new((scaled + 1) >> 1, k)
            })
            .collect();
        Bernoulli::new(p)
    }

    pub fn params(&self) -> &[Dyadic] {
        &self.p
    }

    pub fn p(&self, i: usize) -> &Dyadic {
        &self.p[i.min(self.p.len() - 1)]
    }
}

impl Measure for Bernoulli {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic> {
        let one = Dyadic::one();
        Ok(sigma.iter().enumerate().fold(one.clone(), |acc, (i, b)| {
            let p = self.p(i);
            if b {
                acc * (&one - p)
            } else {
                acc * p
            }
        }))
    }

    fn declared_atomless(&self) -> bool {
        true
    }

    fn declared_positive(&self) -> bool {
        true
    }
}

/// Point mass on `prefix · tail · tail · ...`.
#[derive(Debug, Clone)]
pub struct Dirac {
    prefix: Bits,
    tail: Bits,
}

impl Dirac {
    pub fn new(prefix: Bits, tail: Bits) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::InvalidParameter("dirac tail must be non-empty".into()));
        }
        Ok(Dirac { prefix, tail })
    }

    pub fn prefix(&self) -> &Bits {
        &self.prefix
    }

    pub fn tail(&self) -> &Bits {
        &self.tail
    }

    pub fn bit(&self, i: usize) -> bool {
        match self.prefix.get(i) {
            Some(b) => b,
            None => self
                .tail
                .get((i - self.prefix.len()) % self.tail.len())
                .unwrap_or(false),
        }
    }
}

impl Measure for Dirac {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic> {
        let hit = sigma.iter().enumerate().all(|(i, b)| self.bit(i) == b);
        Ok(if hit { Dyadic::one() } else { Dyadic::zero() })
    }
}

/// `(μ + λ) / 2`.
#[derive(Debug, Clone)]
pub struct Mix {
    inner: MeasureRef,
}

impl Mix {
    pub fn new(inner: MeasureRef) -> Self {
        Mix { inner }
    }

    pub fn inner(&self) -> &MeasureRef {
        &self.inner
    }
}

impl Measure for Mix {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic> {
        let m = self.inner.mass(sigma)?;
        Ok((m + Dyadic::pow2_neg(sigma.len() as u64)).half())
    }

    fn enclosure(&self, sigma: &Bits, precision: u64) -> Result<DyadicInterval> {
        let inner = self.inner.enclosure(sigma, precision)?;
        Ok(inner
            .shift(&Dyadic::pow2_neg(sigma.len() as u64))
            .scale(&Dyadic::pow2_neg(1)))
    }

    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }

    fn declared_atomless(&self) -> bool {
        self.inner.declared_atomless()
    }

    fn declared_positive(&self) -> bool {
        true
    }
}

/// I.i.d. measure with rational parameter `num/den`; masses are generally
/// not dyadic, so only enclosures are available.
#[derive(Debug, Clone)]
pub struct RationalBernoulli {
    num: u64,
    den: u64,
}

impl RationalBernoulli {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "bernoulli parameter {num}/{den} outside (0,1)"
            )));
        }
        Ok(RationalBernoulli { num, den })
    }

    pub fn ratio(&self) -> (u64, u64) {
        (self.num, self.den)
    }
}

impl Measure for RationalBernoulli {
    fn mass(&self, _sigma: &Bits) -> Result<Dyadic> {
        Err(Error::NotExact)
    }

    fn enclosure(&self, sigma: &Bits, precision: u64) -> Result<DyadicInterval> {
        let ones = sigma.count_ones() as u32;
        let zeros = sigma.len() as u32 - ones;
        let n = num_traits::pow(BigInt::from(self.num), zeros as usize)
            * num_traits::pow(BigInt::from(self.den - self.num), ones as usize);
        let d = num_traits::pow(BigInt::from(self.den), (zeros + ones) as usize);
        let (q, r) = (n << precision).div_rem(&d);
        let lo = Dyadic::new(q, precision);
        if r.is_zero() {
            Ok(DyadicInterval::point(lo))
        } else {
            let hi = &lo + Dyadic::pow2_neg(precision);
            DyadicInterval::new(lo, hi)
        }
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn declared_atomless(&self) -> bool {
        true
    }

    fn declared_positive(&self) -> bool {
        true
    }
}

/// Hides the exact masses of an exact measure behind rounded enclosures.
#[derive(Debug, Clone)]
pub struct Rounded {
    inner: MeasureRef,
}

impl Rounded {
    pub fn new(inner: MeasureRef) -> Self {
        Rounded { inner }
    }
}

impl Measure for Rounded {
    fn mass(&self, _sigma: &Bits) -> Result<Dyadic> {
        Err(Error::NotExact)
    }

    fn enclosure(&self, sigma: &Bits, precision: u64) -> Result<DyadicInterval> {
        let m = self.inner.mass(sigma)?;
        DyadicInterval::new(m.floor_to(precision), m.ceil_to(precision))
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn declared_atomless(&self) -> bool {
        self.inner.declared_atomless()
    }

    fn declared_positive(&self) -> bool {
        self.inner.declared_positive()
    }
}

pub fn lebesgue() -> MeasureRef {
    Arc::new(Lebesgue)
}

pub fn bernoulli(p: Vec<Dyadic>) -> Result<MeasureRef> {
    Ok(Arc::new(Bernoulli::new(p)?))
}

pub fn dirac(prefix: Bits, tail: Bits) -> Result<MeasureRef> {
    Ok(Arc::new(Dirac::new(prefix, tail)?))
}

pub fn mix(mu: MeasureRef) -> MeasureRef {
    Arc::new(Mix::new(mu))
}

/// Cylinders at a fixed depth whose mass is certified to reach a threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomReport {
    pub depth: usize,
    pub candidates: Vec<(Bits, Dyadic)>,
}

/// Lists every σ of length `depth` with certified μ(σ) ≥ `threshold`. For
/// approximate measures the lower end of an enclosure is used.
pub fn probe_atoms(
    mu: &dyn Measure,
    depth: usize,
    threshold: &Dyadic,
    budget: Budget,
) -> Result<AtomReport> {
    if threshold <= &Dyadic::zero() {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    budget.check_strings(depth)?;
    let precision = precision_for(threshold) + 2;
    let mut candidates = Vec::new();
    for sigma in Bits::all(depth) {
        let lower = if mu.is_exact() {
            mu.mass(&sigma)?
        } else {
            mu.enclosure(&sigma, precision)?.lo().clone()
        };
        if &lower >= threshold {
            candidates.push((sigma, lower));
        }
    }
    Ok(AtomReport { depth, candidates })
}

/// Smallest `k` with `2^-k ≤ t`, for `0 < t`.
fn precision_for(t: &Dyadic) -> u64 {
    let mut k = 0u64;
    while Dyadic::pow2_neg(k) > *t {
        k += 1;
    }
    k
}

/// A certified lower bound on the smallest cylinder mass at `depth`. Zero
/// means positivity could not be certified.
pub fn probe_positive(mu: &dyn Measure, depth: usize, budget: Budget) -> Result<Dyadic> {
    budget.check_strings(depth)?;
    let mut min: Option<Dyadic> = None;
    for sigma in Bits::all(depth) {
        let lower = if mu.is_exact() {
            mu.mass(&sigma)?
        } else {
            certified_lower(mu, &sigma, depth as u64 + 8)?
        };
        if lower.is_zero() {
            return Ok(Dyadic::zero());
        }
        min = Some(match min {
            Some(m) => m.min(lower),
            None => lower,
        });
    }
    Ok(min.unwrap_or_else(Dyadic::one))
}

const MAX_PROBE_PRECISION: u64 = 512;

fn certified_lower(mu: &dyn Measure, sigma: &Bits, start: u64) -> Result<Dyadic> {
    let mut precision = start.max(1);
    loop {
        let lo = mu.enclosure(sigma, precision)?.lo().clone();
        if lo > Dyadic::zero() || precision >= MAX_PROBE_PRECISION {
            return Ok(lo.max(Dyadic::zero()));
        }
        precision = (precision * 2).min(MAX_PROBE_PRECISION);
    }
}

/// Checks `μ(σ) = μ(σ0) + μ(σ1)` at every node of depth `< depth`: exactly
/// for exact measures, within `3·2^-precision` otherwise.
pub fn check_additivity(mu: &dyn Measure, depth: usize, precision: u64) -> Result<()> {
    let tolerance = Dyadic::from_ratio(3, precision);
    for n in 0..depth {
        for sigma in Bits::all(n) {
            let (a, b, c) = if mu.is_exact() {
                (
                    mu.mass(&sigma)?,
                    mu.mass(&sigma.child(false))?,
                    mu.mass(&sigma.child(true))?,
                )
            } else {
                (
                    mu.approx(&sigma, precision)?,
                    mu.approx(&sigma.child(false), precision)?,
                    mu.approx(&sigma.child(true), precision)?,
                )
            };
            let defect = (&a - &b - &c).abs();
            let ok = if mu.is_exact() {
                defect.is_zero()
            } else {
                defect <= tolerance
            };
            if !ok {
                return Err(Error::InvariantViolation(format!(
                    "additivity fails at {sigma}: {a} vs {b} + {c}"
                )));
            }
        }
    }
    Ok(())
}

/// Exact total mass of all cylinders of length `n`.
pub fn level_total(mu: &dyn Measure, n: usize) -> Result<Dyadic> {
    let mut total = Dyadic::zero();
    for s in Bits::all(n) {
        total = total + mu.mass(&s)?;
    }
    Ok(total)
}
