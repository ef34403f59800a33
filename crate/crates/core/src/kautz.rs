//! Measure transport by μ-partitions of the unit interval.
//!
//! Level n of the μ-partition assigns to each σ ∈ 2^n the closed interval
//! I_σ of length μ(σ) starting at the total mass of the strings of length n
//! left of σ. Transport reads a Lebesgue point and emits the σ whose
//! interval contains it; the inverse reads σ and emits the binary expansion
//! of the point(s) of I_σ.
//!
//! A finite input names a closed interval (the cylinder of x, or I_y), not
//! a point. An output bit is emitted once that interval lies on one side of
//! the relevant split point; if the split point lies strictly inside it after
//! all input bits are read, the result is `EndpointHit`.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::measure::{ceil_log2, probe_positive, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportStatus {
    Complete,
    EndpointHit,
    PrecisionExhausted,
}

impl TransportStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransportStatus::Complete => "complete",
            TransportStatus::EndpointHit => "endpoint_hit",
            TransportStatus::PrecisionExhausted => "precision_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResult {
    pub output: Bits,
    pub status: TransportStatus,
    pub bits_consumed: usize,
}

/// Enclosures of the two endpoints of I_σ, each of width ≤ 2^-precision.
pub fn endpoint_enclosures(
    mu: &dyn Measure,
    sigma: &Bits,
    precision: u64,
) -> Result<(DyadicInterval, DyadicInterval)> {
    let mut terms: Vec<Bits> = sigma
        .iter()
        .enumerate()
        .filter(|(_, b)| *b)
        .map(|(k, _)| sigma.prefix(k).child(false))
        .collect();
    if mu.is_exact() {
        let mut lo = Dyadic::zero();
        for t in &terms {
            lo = lo + mu.mass(t)?;
        }
        let hi = &lo + mu.mass(sigma)?;
        return Ok((DyadicInterval::point(lo), DyadicInterval::point(hi)));
    }
    let headroom = ceil_log2(terms.len() as u128 + 1);
    let p = precision + headroom;
    let mut lo = DyadicInterval::point(Dyadic::zero());
    for t in terms.drain(..) {
        lo = lo.add(&mu.enclosure(&t, p)?);
    }
    let hi = lo.add(&mu.enclosure(sigma, p)?);
    Ok((lo.clamp_unit(), hi.clamp_unit()))
}

/// I_σ: exact for exact measures, otherwise the hull of the endpoint
/// enclosures (each endpoint within 2^-precision).
pub fn partition(mu: &dyn Measure, sigma: &Bits, precision: u64) -> Result<DyadicInterval> {
    let (lo, hi) = endpoint_enclosures(mu, sigma, precision)?;
    DyadicInterval::new(lo.lo().clone(), hi.hi().clone())
}

const START_PRECISION: u64 = 16;

enum Side {
    Left,
    Right,
    Undecided,
}

fn side(lo: &Dyadic, hi: &Dyadic, split: &DyadicInterval) -> Side {
    if hi <= split.lo() {
        Side::Left
    } else if lo >= split.hi() {
        Side::Right
    } else {
        Side::Undecided
    }
}

/// Reads the Lebesgue cylinder of `x` and emits up to `out_len` bits of its
/// μ-representation. `precision_budget` caps the refinement of approximate
/// masses.
pub fn transport(
    mu: &dyn Measure,
    x: &Bits,
    out_len: usize,
    precision_budget: u64,
) -> Result<TransportResult> {
    let mut out = Bits::new();
    let mut m = 0usize;
    let mut num = BigInt::zero();
    let j = |num: &BigInt, m: usize| {
        let lo = Dyadic::new(num.clone(), m as u64);
        let hi = &lo + Dyadic::pow2_neg(m as u64);
        (lo, hi)
    };
    let exact = mu.is_exact();
    // exact measures: running left endpoint of I_out
    let mut left = Dyadic::zero();
    let finish = |out: Bits, status, m| {
        Ok(TransportResult {
            output: out,
            status,
            bits_consumed: m,
        })
    };
    for _ in 0..out_len {
        let mut precision = START_PRECISION.min(precision_budget);
        loop {
            let split = if exact {
                DyadicInterval::point(&left + mu.mass(&out.child(false))?)
            } else {
                endpoint_enclosures(mu, &out.child(true), precision)?.0
            };
            let decided = loop {
                let (lo, hi) = j(&num, m);
                match side(&lo, &hi, &split) {
                    Side::Left => break Some(false),
                    Side::Right => break Some(true),
                    Side::Undecided => {}
                }
                // Only read more input once the split is known well enough
                // that the extra bit can matter.
                let sharp = exact
                    || split.width() <= Dyadic::pow2_neg(m as u64 + 2)
                    || precision >= precision_budget;
                if m < x.len() && sharp {
                    num = (num << 1) + u8::from(x.get(m) == Some(true));
                    m += 1;
                    continue;
                }
                break None;
            };
            if let Some(bit) = decided {
                if bit && exact {
                    left = split.lo().clone();
                }
                out.push(bit);
                break;
            }
            let (lo, hi) = j(&num, m);
            if m == x.len() && split.lo() > &lo && split.hi() < &hi {
                return finish(out, TransportStatus::EndpointHit, m);
            }
            if exact || precision >= precision_budget {
                return finish(out, TransportStatus::PrecisionExhausted, m);
            }
            precision = (precision * 2).min(precision_budget);
        }
    }
    finish(out, TransportStatus::Complete, m)
}

/// Depth to which positivity is probed before inverting.
pub const POSITIVITY_PROBE_DEPTH: usize = 12;

/// Reads `y` as the μ-interval I_y and emits up to `out_len` bits of the
/// binary expansion of its points. Positivity is probed to depth
/// `min(|y|, 12)` first.
pub fn inverse_transport(
    mu: &dyn Measure,
    y: &Bits,
    out_len: usize,
    precision_budget: u64,
) -> Result<TransportResult> {
    Inverse::new(mu, y.len().min(POSITIVITY_PROBE_DEPTH))?.run(y, out_len, precision_budget)
}

/// An inverse transport whose preconditions were checked once, for running
/// on many inputs.
#[derive(Debug, Clone, Copy)]
pub struct Inverse<'a> {
    mu: &'a dyn Measure,
}

impl<'a> Inverse<'a> {
    /// Requires a measure declared atomless with certified positive mass on
    /// every cylinder of length `probe_depth`.
    pub fn new(mu: &'a dyn Measure, probe_depth: usize) -> Result<Self> {
        if !mu.declared_atomless() {
            return Err(Error::InvalidParameter(
                "inverse transport needs a measure declared atomless".into(),
            ));
        }
        if probe_positive(mu, probe_depth, Budget::DEFAULT)?.is_zero() {
            return Err(Error::NotPositive { depth: probe_depth });
        }
        Ok(Inverse { mu })
    }

    pub fn run(&self, y: &Bits, out_len: usize, precision_budget: u64) -> Result<TransportResult> {
        inverse_run(self.mu, y, out_len, precision_budget)
    }
}

fn inverse_run(
    mu: &dyn Measure,
    y: &Bits,
    out_len: usize,
    precision_budget: u64,
) -> Result<TransportResult> {
    let exact = mu.is_exact();
    if exact && mu.mass(y)?.is_zero() {
        return Err(Error::NotPositive { depth: y.len() });
    }
    let mut out = Bits::new();
    let mut target_lo = Dyadic::zero();
    let mut k = 0usize;
    let finish = |out: Bits, status, k| {
        Ok(TransportResult {
            output: out,
            status,
            bits_consumed: k,
        })
    };
    for i in 0..out_len {
        let g = DyadicInterval::point(&target_lo + Dyadic::pow2_neg(i as u64 + 1));
        let mut precision = START_PRECISION.min(precision_budget);
        loop {
            // Ok(bit), or Err(inner bounds of I_y) when undecided
            let decided = loop {
                let (lo, hi) = endpoint_enclosures(mu, &y.prefix(k), precision)?;
                match side(lo.lo(), hi.hi(), &g) {
                    Side::Left => break Ok(false),
                    Side::Right => break Ok(true),
                    Side::Undecided => {}
                }
                let sharp = exact
                    || lo.width().max(hi.width()) <= Dyadic::pow2_neg(i as u64 + 2)
                    || precision >= precision_budget;
                if k < y.len() && sharp {
                    k += 1;
                    continue;
                }
                break Err((lo.hi().clone(), hi.lo().clone()));
            };
            let (inner_lo, inner_hi) = match decided {
                Ok(bit) => {
                    if bit {
                        target_lo = g.lo().clone();
                    }
                    out.push(bit);
                    break;
                }
                Err(inner) => inner,
            };
            if k == y.len() && &inner_lo < g.lo() && g.lo() < &inner_hi {
                return finish(out, TransportStatus::EndpointHit, k);
            }
            if exact || precision >= precision_budget {
                return finish(out, TransportStatus::PrecisionExhausted, k);
            }
            precision = (precision * 2).min(precision_budget);
        }
    }
    finish(out, TransportStatus::Complete, k)
}

/// Empirical output-cylinder counts of transporting uniform inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushForward {
    pub depth: usize,
    pub samples: u64,
    /// Indexed by the output cylinder's lexicographic index.
    pub counts: Vec<u64>,
    /// Samples that did not complete.
    pub incomplete: u64,
}

const CHUNK: u64 = 4096;

/// Transports `samples` uniform 64-bit inputs to depth `depth`. Chunk `c`
/// draws from ChaCha8 stream `c` of `seed`, so the result does not depend on
/// how chunks are scheduled.
pub fn monte_carlo_pushforward(
    mu: &dyn Measure,
    depth: usize,
    samples: u64,
    seed: u64,
    precision_budget: u64,
) -> Result<PushForward> {
    if depth >= 24 {
        return Err(Error::InvalidParameter(format!("depth {depth} too large")));
    }
    let chunks = samples.div_ceil(CHUNK);
    let width = 1usize << depth;
    let (counts, incomplete) = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(Vec<u64>, u64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; width];
            let mut incomplete = 0;
            for _ in 0..n {
                let x = Bits::from_index(rng.next_u64(), 64);
                let r = transport(mu, &x, depth, precision_budget)?;
                if r.status == TransportStatus::Complete {
                    counts[r.output.to_index() as usize] += 1;
                } else {
                    incomplete += 1;
                }
            }
            Ok((counts, incomplete))
        })
        .try_reduce(
            || (vec![0u64; width], 0),
            |(mut a, ia), (b, ib)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok((a, ia + ib))
            },
        )?;
    Ok(PushForward {
        depth,
        samples,
        counts,
        incomplete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{bernoulli, dirac, lebesgue, Bernoulli, Lebesgue, Rounded};
    use std::sync::Arc;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    fn d(n: i64, k: u64) -> Dyadic {
        Dyadic::from_ratio(n, k)
    }

    fn quarter() -> Bernoulli {
        Bernoulli::constant(d(1, 2)).unwrap()
    }

    fn iv(lo: Dyadic, hi: Dyadic) -> DyadicInterval {
        DyadicInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition(&Lebesgue, &b("01"), 0).unwrap(), iv(d(1, 2), d(1, 1)));
        let q = quarter();
        assert_eq!(partition(&q, &b("0"), 0).unwrap(), iv(Dyadic::zero(), d(1, 2)));
        assert_eq!(partition(&q, &b("1"), 0).unwrap(), iv(d(1, 2), Dyadic::one()));
        assert_eq!(partition(&q, &b("10"), 0).unwrap(), iv(d(1, 2), d(7, 4)));
    }

    #[test]
    fn approximate_partition_encloses_exact() {
        let q: Arc<dyn Measure> = Arc::new(quarter());
        let r = Rounded::new(q.clone());
        for s in Bits::all(6) {
            let exact = partition(q.as_ref(), &s, 0).unwrap();
            for p in [3u64, 10, 40] {
                let (lo, hi) = endpoint_enclosures(&r, &s, p).unwrap();
                assert!(lo.width() <= Dyadic::pow2_neg(p));
                assert!(hi.width() <= Dyadic::pow2_neg(p));
                assert!(lo.lo() <= exact.lo() && exact.lo() <= lo.hi());
                assert!(hi.lo() <= exact.hi() && exact.hi() <= hi.hi());
            }
        }
    }

    #[test]
    fn transport_examples() {
        let r = transport(&Lebesgue, &b("0110"), 4, 64).unwrap();
        assert_eq!(r.output, b("0110"));
        assert_eq!(r.status, TransportStatus::Complete);
        assert_eq!(r.bits_consumed, 4);

        let q = quarter();
        let r = transport(&q, &b("001"), 1, 64).unwrap();
        assert_eq!((r.output, r.status), (b("0"), TransportStatus::Complete));
        let r = transport(&q, &b("100"), 2, 64).unwrap();
        assert_eq!((r.output, r.status), (b("11"), TransportStatus::Complete));
    }

    #[test]
    fn transport_reports_straddled_endpoint() {
        // 1/4 lies strictly inside the cylinder of "0".
        let r = transport(&quarter(), &b("0"), 1, 64).unwrap();
        assert_eq!(r.status, TransportStatus::EndpointHit);
        assert_eq!(r.output, b(""));
        let r = transport(&Lebesgue, &b("01"), 3, 64).unwrap();
        assert_eq!(r.output, b("01"));
        assert_eq!(r.status, TransportStatus::EndpointHit);
    }

    #[test]
    fn transport_handles_null_cylinders() {
        let z = dirac(b(""), b("0")).unwrap();
        let r = transport(z.as_ref(), &b("1"), 5, 64).unwrap();
        assert_eq!(r.output, b("00000"));
        assert_eq!(r.bits_consumed, 0);
    }

    #[test]
    fn approximate_transport_matches_exact() {
        let q: Arc<dyn Measure> = Arc::new(quarter());
        let r = Rounded::new(q.clone());
        for x in Bits::all(10) {
            let a = transport(q.as_ref(), &x, 6, 256).unwrap();
            let c = transport(&r, &x, 6, 256).unwrap();
            assert_eq!(a.status, c.status, "{x}");
            assert_eq!(a.output, c.output, "{x}");
        }
    }

    #[test]
    fn inverse_examples() {
        let r = inverse_transport(&Lebesgue, &b("0110"), 4, 64).unwrap();
        assert_eq!((r.output, r.status), (b("0110"), TransportStatus::Complete));
        let r = inverse_transport(&quarter(), &b("0"), 2, 64).unwrap();
        assert_eq!((r.output, r.status), (b("00"), TransportStatus::Complete));
        let r = inverse_transport(&quarter(), &b("0"), 3, 64).unwrap();
        assert_eq!(r.status, TransportStatus::EndpointHit);
    }

    #[test]
    fn inverse_rejects_non_positive() {
        let z = dirac(b(""), b("0")).unwrap();
        assert!(inverse_transport(z.as_ref(), &b("0"), 2, 64).is_err());
        let m = crate::measure::mix(z);
        // mix is positive but not atomless
        assert!(matches!(
            inverse_transport(m.as_ref(), &b("0"), 2, 64),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn push_forward_is_deterministic() {
        let q = bernoulli(vec![d(1, 2)]).unwrap();
        let a = monte_carlo_pushforward(q.as_ref(), 2, 10_000, 7, 64).unwrap();
        let c = monte_carlo_pushforward(q.as_ref(), 2, 10_000, 7, 64).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.counts.iter().sum::<u64>() + a.incomplete, 10_000);
        let l = monte_carlo_pushforward(lebesgue().as_ref(), 1, 5000, 1, 64).unwrap();
        assert_eq!(l.incomplete, 0);
    }
}
