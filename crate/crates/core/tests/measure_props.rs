use std::sync::Arc;

use cantor_core::measure::{
    bernoulli, check_additivity, dirac, lebesgue, level_total, mix, probe_atoms, probe_positive,
    Measure, MeasureRef, RationalBernoulli, Rounded,
};
use cantor_core::{Bits, Budget, Dyadic};
use num_bigint::BigInt;
use proptest::prelude::*;

fn b(s: &str) -> Bits {
    s.parse().unwrap()
}

fn params() -> impl Strategy<Value = Vec<Dyadic>> {
    prop::collection::vec((1i64..63).prop_map(|n| Dyadic::from_ratio(n, 6)), 1..5)
}

fn exact_suite() -> Vec<MeasureRef> {
    vec![
        lebesgue(),
        bernoulli(vec![Dyadic::from_ratio(1, 2)]).unwrap(),
        mix(dirac(Bits::new(), b("0")).unwrap()),
        dirac(b("01"), b("10")).unwrap(),
    ]
}

#[test]
fn additivity_and_total_mass_to_depth_10() {
    for mu in exact_suite() {
        check_additivity(&*mu, 10, 0).unwrap();
        for n in 0..=10 {
            assert_eq!(level_total(&*mu, n).unwrap(), Dyadic::one(), "{mu:?} level {n}");
        }
    }
}

#[test]
fn mix_dominates_half_lebesgue() {
    let nu = mix(dirac(b("1"), b("0")).unwrap());
    for n in 0..=8 {
        for s in Bits::all(n) {
            assert!(nu.mass(&s).unwrap() >= Dyadic::pow2_neg(n as u64 + 1));
        }
    }
}

#[test]
fn probe_examples() {
    let d0 = dirac(Bits::new(), b("0")).unwrap();
    let r = probe_atoms(&*d0, 4, &Dyadic::pow2_neg(1), Budget::DEFAULT).unwrap();
    assert_eq!(r.candidates, vec![(b("0000"), Dyadic::one())]);
    let r = probe_atoms(&*lebesgue(), 4, &Dyadic::pow2_neg(1), Budget::DEFAULT).unwrap();
    assert!(r.candidates.is_empty());
    assert_eq!(probe_positive(&*lebesgue(), 3, Budget::DEFAULT).unwrap(), Dyadic::pow2_neg(3));
    assert!(probe_positive(&*d0, 2, Budget::DEFAULT).unwrap().is_zero());
    let q = bernoulli(vec![Dyadic::from_ratio(1, 2)]).unwrap();
    assert_eq!(probe_positive(&*q, 2, Budget::DEFAULT).unwrap(), Dyadic::pow2_neg(4));
}

// (num/den)^zeros ((den-num)/den)^ones as an exact rational, checked
// against an enclosure by cross-multiplication.
fn encloses_rational(lo: &Dyadic, hi: &Dyadic, num: &BigInt, den: &BigInt) -> bool {
    let scaled = |d: &Dyadic| d.numerator() * den;
    let target = |d: &Dyadic| num << d.exponent();
    scaled(lo) <= target(lo) && target(hi) <= scaled(hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_bernoulli_is_additive(p in params()) {
        let mu = bernoulli(p).unwrap();
        prop_assert!(check_additivity(&*mu, 10, 0).is_ok());
        for n in 0..=10 {
            prop_assert_eq!(level_total(&*mu, n).unwrap(), Dyadic::one());
        }
    }

    #[test]
    fn atoms_are_never_underweight(p in params(), t in 1i64..16) {
        let mu = bernoulli(p).unwrap();
        let t = Dyadic::from_ratio(t, 4);
        let report = probe_atoms(&*mu, 6, &t, Budget::DEFAULT).unwrap();
        for (s, _) in &report.candidates {
            prop_assert!(mu.mass(s).unwrap() >= t);
        }
        let heavy = Bits::all(6).filter(|s| mu.mass(s).unwrap() >= t).count();
        prop_assert_eq!(heavy, report.candidates.len());
    }

    #[test]
    fn rational_enclosures_are_sound(num in 1u64..9, extra in 1u64..9, bits in "[01]{0,12}", p in 1u64..80) {
        let den = num + extra;
        let mu = RationalBernoulli::new(num, den).unwrap();
        let s: Bits = bits.parse().unwrap();
        let e = mu.enclosure(&s, p).unwrap();
        prop_assert!(e.width() <= Dyadic::pow2_neg(p));
        let ones = s.count_ones() as u32;
        let zeros = s.len() as u32 - ones;
        let n = BigInt::from(num).pow(zeros) * BigInt::from(den - num).pow(ones);
        let d = BigInt::from(den).pow(zeros + ones);
        prop_assert!(encloses_rational(e.lo(), e.hi(), &n, &d));
    }

    #[test]
    fn rounded_enclosures_contain_exact(p in params(), bits in "[01]{0,10}", prec in 0u64..30) {
        let inner = bernoulli(p).unwrap();
        let r = Rounded::new(Arc::clone(&inner));
        let s: Bits = bits.parse().unwrap();
        let e = r.enclosure(&s, prec).unwrap();
        let m = inner.mass(&s).unwrap();
        prop_assert!(e.lo() <= &m && &m <= e.hi());
        prop_assert!(e.width() <= Dyadic::pow2_neg(prec));
    }
}
