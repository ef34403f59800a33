//! Finite presentations of randomness tests, martingales, monotone machines
//! and order functions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bits::{find_prefix_violation, Bits};
use crate::budget::Budget;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::functional::{induce_exact, TtFunctional};
use crate::measure::{Bernoulli, Measure, MeasureRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    MartinLof,
    Schnorr,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::MartinLof => "martin_lof",
            TestKind::Schnorr => "schnorr",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "martin_lof" | "ml" => Ok(TestKind::MartinLof),
            "schnorr" => Ok(TestKind::Schnorr),
            other => Err(Error::parse("test kind", format!("unknown kind {other:?}"))),
        }
    }
}

/// Components `S_i` keyed by `i`; each is a finite set of strings whose
/// cylinders make up the open set `U_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestPresentation {
    pub kind: TestKind,
    pub components: BTreeMap<usize, Vec<Bits>>,
}

impl TestPresentation {
    pub fn new(kind: TestKind, components: BTreeMap<usize, Vec<Bits>>) -> Self {
        TestPresentation { kind, components }
    }

    /// μ([S_i]), summing over the strings of a prefix-free component.
    pub fn component_mass(&self, i: usize, mu: &dyn Measure) -> Result<Dyadic> {
        let mut total = Dyadic::zero();
        for s in self.components.get(&i).into_iter().flatten() {
            total = total + mu.mass(s)?;
        }
        Ok(total)
    }

    /// Whether some prefix of `x` lies in `S_i`.
    pub fn covers(&self, i: usize, x: &Bits) -> bool {
        self.components
            .get(&i)
            .is_some_and(|s| s.iter().any(|p| p.is_prefix_of(x)))
    }
}

/// Checks prefix-freeness and the measure condition of each component
/// `i ≤ depth`. Approximate measures are decided from enclosures when the
/// bound is not tight; an equality under an approximate measure is
/// reported as ambiguous.
pub fn validate_test(t: &TestPresentation, mu: &dyn Measure, depth: usize) -> Result<()> {
    for (&i, strings) in t.components.range(..=depth) {
        if let Some((a, b)) = find_prefix_violation(strings) {
            return Err(Error::TestViolation {
                component: i,
                reason: format!("{a} is a prefix of {b}"),
            });
        }
        let bound = Dyadic::pow2_neg(i as u64);
        if mu.is_exact() {
            let m = t.component_mass(i, mu)?;
            let ok = match t.kind {
                TestKind::MartinLof => m <= bound,
                TestKind::Schnorr => m == bound,
            };
            if !ok {
                return Err(Error::TestViolation {
                    component: i,
                    reason: format!("mass {m} against bound {bound}"),
                });
            }
            continue;
        }
        let precision = i as u64 + 16 + crate::measure::ceil_log2(strings.len() as u128);
        let mut lo = Dyadic::zero();
        let mut hi = Dyadic::zero();
        for s in strings {
            let e = mu.enclosure(s, precision)?;
            lo = lo + e.lo();
            hi = hi + e.hi();
        }
        if lo > bound {
            return Err(Error::TestViolation {
                component: i,
                reason: format!("mass at least {lo} exceeds {bound}"),
            });
        }
        if t.kind == TestKind::Schnorr || hi > bound {
            return Err(Error::Ambiguous(format!(
                "component {i}: mass in [{lo}, {hi}] cannot be compared with {bound}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Pullback {
    pub presentation: TestPresentation,
    /// (i, μ([P_i]), μ_Φ([S_i])) for every component.
    pub masses: Vec<(usize, Dyadic, Dyadic)>,
}

/// P_i = ∪_{σ ∈ S_i} Pre_Φ(σ), with the union checked to be prefix-free and
/// μ([P_i]) compared against μ_Φ([S_i]) exactly.
pub fn pullback_test(
    t: &TestPresentation,
    phi: &TtFunctional,
    mu: MeasureRef,
    budget: Budget,
) -> Result<Pullback> {
    let induced = induce_exact(phi, mu.clone(), budget)?;
    let mut components = BTreeMap::new();
    let mut masses = Vec::new();
    for (&i, strings) in &t.components {
        let mut p = Vec::new();
        let mut pushed = Dyadic::zero();
        for sigma in strings {
            p.extend(phi.pre_image(sigma, budget)?.strings);
            pushed = pushed + induced.mass(sigma)?;
        }
        if let Some((a, b)) = find_prefix_violation(&p) {
            return Err(Error::InvariantViolation(format!(
                "pre-images in component {i} overlap: {a} and {b}"
            )));
        }
        let mut pulled = Dyadic::zero();
        for s in &p {
            pulled = pulled + mu.mass(s)?;
        }
        if pulled != pushed {
            return Err(Error::InvariantViolation(format!(
                "component {i}: μ([P_i]) = {pulled} but μ_Φ([S_i]) = {pushed}"
            )));
        }
        p.sort();
        components.insert(i, p);
        masses.push((i, pulled, pushed));
    }
    Ok(Pullback {
        presentation: TestPresentation::new(t.kind, components),
        masses,
    })
}

pub type MartingaleFn = Arc<dyn Fn(&Bits) -> Result<Dyadic> + Send + Sync>;

/// A betting strategy d with respect to a base measure μ.
#[derive(Clone)]
pub struct Martingale {
    name: String,
    value: MartingaleFn,
    base: MeasureRef,
}

impl fmt::Debug for Martingale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Martingale")
            .field("name", &self.name)
            .field("base", &self.base)
            .finish()
    }
}

impl Martingale {
    pub fn new(name: impl Into<String>, base: MeasureRef, value: MartingaleFn) -> Self {
        Martingale {
            name: name.into(),
            value,
            base,
        }
    }

    pub fn constant(base: MeasureRef, c: Dyadic) -> Self {
        Martingale::new(format!("constant({c})"), base, Arc::new(move |_| Ok(c.clone())))
    }

    /// Doubles on every 0 and goes broke on the first 1; fair for λ.
    pub fn lambda_doubling() -> Self {
        Martingale::new(
            "lambda-doubling",
            crate::measure::lebesgue(),
            Arc::new(|s: &Bits| {
                Ok(if s.count_ones() == 0 {
                    Dyadic::one().mul_pow2(s.len() as i64)
                } else {
                    Dyadic::zero()
                })
            }),
        )
    }

    /// d(σ) = ν(σ)/μ(σ). Fair whenever it is defined; fails when a ratio is
    /// not dyadic.
    pub fn density(nu: MeasureRef, mu: MeasureRef) -> Self {
        let base = mu.clone();
        Martingale::new(
            format!("density({nu:?})"),
            base,
            Arc::new(move |s: &Bits| {
                let m = mu.mass(s)?;
                if m.is_zero() {
                    return Ok(Dyadic::zero());
                }
                nu.mass(s)?.checked_div(&m).ok_or_else(|| {
                    Error::InvalidParameter(format!("density at {s} is not dyadic"))
                })
            }),
        )
    }

    /// Bets toward 0s against bernoulli(1/4) with the density of
    /// bernoulli(5/8); every ratio cancels to a dyadic.
    pub fn bernoulli_quarter_fair() -> Self {
        let mu: MeasureRef = Arc::new(Bernoulli::constant(Dyadic::from_ratio(1, 2)).expect("1/4"));
        let nu: MeasureRef = Arc::new(Bernoulli::constant(Dyadic::from_ratio(5, 3)).expect("5/8"));
        Martingale::density(nu, mu).renamed("bernoulli-quarter-fair")
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> &MeasureRef {
        &self.base
    }

    pub fn value(&self, s: &Bits) -> Result<Dyadic> {
        let v = (self.value)(s)?;
        if v.is_negative() {
            return Err(Error::InvalidParameter(format!(
                "{}: negative capital {v} at {s}",
                self.name
            )));
        }
        Ok(v)
    }

    /// The fairness residual μ(σ)d(σ) − μ(σ0)d(σ0) − μ(σ1)d(σ1).
    pub fn residual(&self, s: &Bits) -> Result<Dyadic> {
        let mu = &self.base;
        let here = mu.mass(s)? * self.value(s)?;
        let (s0, s1) = (s.child(false), s.child(true));
        let split = mu.mass(&s0)? * self.value(&s0)? + mu.mass(&s1)? * self.value(&s1)?;
        Ok(here - split)
    }

    /// Exact fairness at every node of length below `depth`.
    pub fn check_fair(&self, depth: usize, budget: Budget) -> Result<()> {
        if !self.base.is_exact() {
            return Err(Error::NotExact);
        }
        for n in 0..depth {
            budget.check_strings(n)?;
            let bad = (0..1u64 << n).into_par_iter().find_map_first(|i| {
                let s = Bits::from_index(i, n);
                match self.residual(&s) {
                    Ok(r) if r.is_zero() => None,
                    Ok(_) => Some(Err(Error::Unfair { node: s })),
                    Err(e) => Some(Err(e)),
                }
            });
            if let Some(e) = bad {
                return e;
            }
        }
        Ok(())
    }
}

/// The capital d(x↾0), …, d(x↾|x|), checking fairness along the way.
pub fn run_martingale(d: &Martingale, x: &Bits) -> Result<Vec<Dyadic>> {
    if !d.base.is_exact() {
        return Err(Error::NotExact);
    }
    let mut out = Vec::with_capacity(x.len() + 1);
    for n in 0..=x.len() {
        let s = x.prefix(n);
        if n < x.len() && !d.residual(&s)?.is_zero() {
            return Err(Error::Unfair { node: s });
        }
        out.push(d.value(&s)?);
    }
    Ok(out)
}

/// A finite monotone machine given by its committed (program, output)
/// pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneMachine {
    pairs: Vec<(Bits, Bits)>,
}

impl MonotoneMachine {
    pub fn new(mut pairs: Vec<(Bits, Bits)>) -> Result<Self> {
        pairs.sort();
        pairs.dedup();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(format!(
                "program {} has two outputs",
                w[0].0
            )));
        }
        for (p, out) in &pairs {
            for (q, out_q) in &pairs {
                if p.is_prefix_of(q) && !out.is_prefix_of(out_q) {
                    return Err(Error::NonMonotone(format!(
                        "{p} ⪯ {q} but {out} is not a prefix of {out_q}"
                    )));
                }
            }
        }
        Ok(MonotoneMachine { pairs })
    }

    /// Every program of length at most `max_len` outputs itself.
    pub fn identity(max_len: usize) -> Self {
        let pairs = (0..=max_len)
            .flat_map(Bits::all)
            .map(|p| (p.clone(), p))
            .collect();
        MonotoneMachine { pairs }
    }

    pub fn pairs(&self) -> &[(Bits, Bits)] {
        &self.pairs
    }
}

/// Km(τ) over programs of length at most `cap`, or `None` when no such
/// program commits to an extension of τ.
pub fn km(m: &MonotoneMachine, tau: &Bits, cap: usize) -> Option<usize> {
    m.pairs
        .iter()
        .filter(|(p, out)| p.len() <= cap && tau.is_prefix_of(out))
        .map(|(p, _)| p.len())
        .min()
}

/// (n, Km(x↾n)) for n = 0..=|x|.
pub fn complexity_profile(m: &MonotoneMachine, x: &Bits, cap: usize) -> Vec<(usize, Option<usize>)> {
    (0..=x.len())
        .into_par_iter()
        .map(|n| (n, km(m, &x.prefix(n), cap)))
        .collect()
}

pub type OrderRule = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

#[derive(Clone)]
pub struct OrderFn {
    pub name: String,
    rule: OrderRule,
}

impl fmt::Debug for OrderFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrderFn({})", self.name)
    }
}

impl OrderFn {
    pub fn new(name: impl Into<String>, rule: OrderRule) -> Self {
        OrderFn {
            name: name.into(),
            rule,
        }
    }

    pub fn identity() -> Self {
        OrderFn::new("identity", Arc::new(|k| k))
    }

    pub fn at(&self, k: u64) -> u64 {
        (self.rule)(k)
    }

    /// Non-decreasing on 0..=horizon.
    pub fn check_monotone(&self, horizon: u64) -> Result<()> {
        let mut prev = self.at(0);
        for k in 1..=horizon {
            let v = self.at(k);
            if v < prev {
                return Err(Error::NonMonotone(format!(
                    "{}({k}) = {v} < {}({}) = {prev}",
                    self.name,
                    self.name,
                    k - 1
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// g^{-1}(n) = min{k ≤ horizon : g(k) ≥ n}.
pub fn order_inverse(g: &OrderFn, n: u64, horizon: u64) -> Result<u64> {
    (0..=horizon)
        .find(|&k| g.at(k) >= n)
        .ok_or(Error::HorizonExceeded { target: n, horizon })
}

/// Every n < horizon with f(n) < g(f(n+1)).
pub fn check_easy_orders(f: &OrderFn, g: &OrderFn, horizon: u64) -> Vec<u64> {
    (0..horizon)
        .filter(|&n| f.at(n) < g.at(f.at(n + 1)))
        .collect()
}
