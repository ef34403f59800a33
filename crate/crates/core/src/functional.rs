//! Truth-table functionals given level by level.
//!
//! A functional is a use bound φ together with a rule that maps every input
//! of length φ(n) to an output of length exactly n. Reading fewer than φ(n)
//! bits never determines n output bits.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::measure::{ceil_log2, Measure, MeasureRef};

pub type UseFn = Arc<dyn Fn(usize) -> usize + Send + Sync>;
pub type RuleFn = Arc<dyn Fn(&Bits, usize) -> Bits + Send + Sync>;
pub type CombineFn = Arc<dyn Fn(&Bits, &Bits) -> Bits + Send + Sync>;

/// The use bound φ. `Fn` bounds must satisfy φ(n) ≥ n.
#[derive(Clone)]
pub enum UseBound {
    /// φ(n) = a·n + b with a ≥ 1.
    Affine { a: usize, b: usize },
    /// φ(n) = table[n]; only levels inside the table are covered.
    Table(Vec<usize>),
    Fn(UseFn),
}

impl UseBound {
    pub fn phi(&self, n: usize) -> Option<usize> {
        match self {
            UseBound::Affine { a, b } => Some(a * n + b),
            UseBound::Table(t) => t.get(n).copied(),
            UseBound::Fn(f) => Some(f(n)),
        }
    }

    pub fn max_level(&self) -> Option<usize> {
        match self {
            UseBound::Table(t) => Some(t.len().saturating_sub(1)),
            _ => None,
        }
    }
}

impl fmt::Debug for UseBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UseBound::Affine { a, b } => write!(f, "n -> {a}n+{b}"),
            UseBound::Table(t) => write!(f, "table{t:?}"),
            UseBound::Fn(_) => write!(f, "n -> <fn>"),
        }
    }
}

#[derive(Clone)]
pub enum Rule {
    /// `tables[n][i]` is the output for the `i`-th input of length φ(n),
    /// inputs in lexicographic order.
    Table(Vec<Vec<Bits>>),
    /// Called with an input of length exactly φ(n) and the level n.
    Fn(RuleFn),
}

#[derive(Clone)]
pub struct TtFunctional {
    name: String,
    use_bound: UseBound,
    rule: Rule,
}

impl fmt::Debug for TtFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TtFunctional")
            .field("name", &self.name)
            .field("use_bound", &self.use_bound)
            .field("max_level", &self.max_level())
            .finish()
    }
}

impl TtFunctional {
    pub fn new(name: impl Into<String>, use_bound: UseBound, rule: Rule) -> Result<Self> {
        if let UseBound::Affine { a: 0, .. } = use_bound {
            return Err(Error::InvalidFunctional(
                "affine use bound needs slope at least 1".into(),
            ));
        }
        let f = TtFunctional {
            name: name.into(),
            use_bound,
            rule,
        };
        if let Rule::Table(tables) = &f.rule {
            for (n, table) in tables.iter().enumerate() {
                let Some(phi) = f.use_bound.phi(n) else {
                    return Err(Error::InvalidFunctional(format!(
                        "table level {n} has no use bound"
                    )));
                };
                if phi >= 64 || table.len() as u64 != 1u64 << phi {
                    return Err(Error::InvalidFunctional(format!(
                        "level {n} lists {} outputs, expected 2^{phi}",
                        table.len()
                    )));
                }
                if let Some(bad) = table.iter().find(|o| o.len() != n) {
                    return Err(Error::InvalidFunctional(format!(
                        "level {n} output {bad} has wrong length"
                    )));
                }
            }
        }
        Ok(f)
    }

    /// Builds a table functional. `tables[n]` lists the outputs of level n
    /// in lexicographic input order; φ(n) is read off the table size.
    pub fn from_tables(name: impl Into<String>, tables: Vec<Vec<Bits>>) -> Result<Self> {
        let mut phis = Vec::with_capacity(tables.len());
        for (n, t) in tables.iter().enumerate() {
            if !t.len().is_power_of_two() {
                return Err(Error::InvalidFunctional(format!(
                    "level {n} has {} entries, not a power of two",
                    t.len()
                )));
            }
            phis.push(t.len().trailing_zeros() as usize);
        }
        TtFunctional::new(name, UseBound::Table(phis), Rule::Table(tables))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn use_bound(&self) -> &UseBound {
        &self.use_bound
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Highest covered level, if the functional is only given finitely.
    pub fn max_level(&self) -> Option<usize> {
        let by_rule = match &self.rule {
            Rule::Table(t) => Some(t.len().saturating_sub(1)),
            Rule::Fn(_) => None,
        };
        match (self.use_bound.max_level(), by_rule) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn phi(&self, n: usize) -> Option<usize> {
        match self.max_level() {
            Some(m) if n > m => None,
            _ => self.use_bound.phi(n),
        }
    }

    fn covered_phi(&self, n: usize) -> Result<usize> {
        self.phi(n).ok_or_else(|| {
            Error::InvalidFunctional(format!(
                "{} covers levels up to {}, not {n}",
                self.name,
                self.max_level().unwrap_or(0)
            ))
        })
    }

    /// The output at level `n` for an input of length exactly φ(n).
    pub fn output_at(&self, input: &Bits, n: usize) -> Bits {
        match &self.rule {
            Rule::Table(t) => t[n][input.to_index() as usize].clone(),
            Rule::Fn(f) => f(input, n),
        }
    }

    /// Largest level whose use is covered by `len` input bits.
    pub fn level_for(&self, len: usize) -> Option<usize> {
        let mut best = None;
        let mut n = 0;
        loop {
            match self.phi(n) {
                Some(p) if p <= len => best = Some(n),
                _ => break,
            }
            // Fn bounds are assumed to satisfy φ(n) ≥ n, so levels past
            // `len` cannot be covered.
            if n > len {
                break;
            }
            n += 1;
        }
        best
    }

    /// The longest output determined by `input`.
    pub fn eval(&self, input: &Bits) -> Bits {
        match self.level_for(input.len()) {
            Some(n) => {
                let phi = self.phi(n).unwrap_or(0);
                self.output_at(&input.prefix(phi), n)
            }
            None => Bits::new(),
        }
    }

    /// Outputs of every input of length φ(n), in lexicographic input order.
    pub fn level_table(&self, n: usize, budget: Budget) -> Result<Vec<Bits>> {
        let phi = self.covered_phi(n)?;
        budget.check_strings(phi)?;
        if let Rule::Table(t) = &self.rule {
            return Ok(t[n].clone());
        }
        Ok((0..1u64 << phi)
            .into_par_iter()
            .map(|i| self.output_at(&Bits::from_index(i, phi), n))
            .collect())
    }

    /// Pre_Φ(σ): all inputs of length φ(|σ|) whose output extends σ.
    pub fn pre_image(&self, sigma: &Bits, budget: Budget) -> Result<PrefixSet> {
        let n = sigma.len();
        let phi = self.covered_phi(n)?;
        let table = self.level_table(n, budget)?;
        let strings = table
            .iter()
            .enumerate()
            .filter(|(_, out)| *out == sigma)
            .map(|(i, _)| Bits::from_index(i as u64, phi))
            .collect();
        Ok(PrefixSet { level: n, strings })
    }

    /// Checks output lengths, a non-decreasing use bound and prefix
    /// consistency between consecutive levels up to `levels`.
    pub fn validate(&self, levels: usize, budget: Budget) -> Result<()> {
        let mut prev: Option<(usize, Vec<Bits>)> = None;
        for n in 0..=levels {
            let phi = self.covered_phi(n)?;
            let table = self.level_table(n, budget)?;
            if let Some(bad) = table.iter().position(|o| o.len() != n) {
                return Err(Error::InvalidFunctional(format!(
                    "{}: input {} at level {n} gives {} bits",
                    self.name,
                    Bits::from_index(bad as u64, phi),
                    table[bad].len()
                )));
            }
            if let Some((prev_phi, prev_table)) = &prev {
                if phi < *prev_phi {
                    return Err(Error::InvalidFunctional(format!(
                        "{}: use bound decreases at level {n}",
                        self.name
                    )));
                }
                let shift = phi - prev_phi;
                for (i, out) in table.iter().enumerate() {
                    let parent = &prev_table[i >> shift];
                    if !parent.is_prefix_of(out) {
                        return Err(Error::InvalidFunctional(format!(
                            "{}: not prefix monotone at input {} (level {n})",
                            self.name,
                            Bits::from_index(i as u64, phi)
                        )));
                    }
                }
            }
            prev = Some((phi, table));
        }
        Ok(())
    }

    /// True when lexicographically ordered inputs give non-decreasing
    /// outputs at every level up to `levels`.
    pub fn is_non_decreasing(&self, levels: usize, budget: Budget) -> Result<bool> {
        for n in 0..=levels {
            let table = self.level_table(n, budget)?;
            if table.windows(2).any(|w| w[0] > w[1]) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Pre_Φ(σ) for some σ of length `level`; every member has length φ(level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSet {
    pub level: usize,
    pub strings: Vec<Bits>,
}

impl PrefixSet {
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn mass(&self, mu: &dyn Measure) -> Result<Dyadic> {
        let mut total = Dyadic::zero();
        for s in &self.strings {
            total = total + mu.mass(s)?;
        }
        Ok(total)
    }
}

/// μ_Φ, the push-forward of a base measure along a functional.
pub struct Induced {
    functional: TtFunctional,
    base: MeasureRef,
    budget: Budget,
    force_approx: bool,
    tables: RwLock<HashMap<usize, Arc<Vec<Bits>>>>,
    masses: RwLock<HashMap<usize, Arc<HashMap<Bits, Dyadic>>>>,
}

impl fmt::Debug for Induced {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Induced")
            .field("functional", &self.functional.name)
            .field("base", &self.base)
            .field("exact", &self.is_exact())
            .finish()
    }
}

impl Induced {
    pub fn functional(&self) -> &TtFunctional {
        &self.functional
    }

    pub fn base(&self) -> &MeasureRef {
        &self.base
    }

    fn table(&self, n: usize) -> Result<Arc<Vec<Bits>>> {
        if let Some(t) = self.tables.read().unwrap().get(&n) {
            return Ok(t.clone());
        }
        let t = Arc::new(self.functional.level_table(n, self.budget)?);
        self.tables.write().unwrap().insert(n, t.clone());
        Ok(t)
    }

    fn distribution(&self, n: usize) -> Result<Arc<HashMap<Bits, Dyadic>>> {
        if let Some(d) = self.masses.read().unwrap().get(&n) {
            return Ok(d.clone());
        }
        let phi = self.functional.covered_phi(n)?;
        let table = self.table(n)?;
        let base = &self.base;
        let dist = (0..table.len())
            .into_par_iter()
            .fold(
                || Ok(HashMap::new()),
                |acc: Result<HashMap<Bits, Dyadic>>, i| {
                    let mut acc = acc?;
                    let m = base.mass(&Bits::from_index(i as u64, phi))?;
                    if !m.is_zero() {
                        let slot = acc.entry(table[i].clone()).or_insert_with(Dyadic::zero);
                        *slot = &*slot + &m;
                    }
                    Ok(acc)
                },
            )
            .reduce(
                || Ok(HashMap::new()),
                |a, b| {
                    let mut a = a?;
                    for (k, v) in b? {
                        let slot = a.entry(k).or_insert_with(Dyadic::zero);
                        *slot = &*slot + &v;
                    }
                    Ok(a)
                },
            )?;
        let dist = Arc::new(dist);
        self.masses.write().unwrap().insert(n, dist.clone());
        Ok(dist)
    }

    /// The induced mass of every output string at level `n` with nonzero mass.
    pub fn level_distribution(&self, n: usize) -> Result<Vec<(Bits, Dyadic)>> {
        let mut v: Vec<_> = self
            .distribution(n)?
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        v.sort();
        Ok(v)
    }
}

impl Measure for Induced {
    fn mass(&self, sigma: &Bits) -> Result<Dyadic> {
        if !self.is_exact() {
            return Err(Error::NotExact);
        }
        Ok(self
            .distribution(sigma.len())?
            .get(sigma)
            .cloned()
            .unwrap_or_else(Dyadic::zero))
    }

    fn enclosure(&self, sigma: &Bits, precision: u64) -> Result<DyadicInterval> {
        if self.is_exact() {
            return self.mass(sigma).map(DyadicInterval::point);
        }
        let n = sigma.len();
        let phi = self.functional.covered_phi(n)?;
        let table = self.table(n)?;
        let pre: Vec<usize> = (0..table.len()).filter(|&i| &table[i] == sigma).collect();
        let headroom = ceil_log2(pre.len() as u128);
        let mut acc = DyadicInterval::point(Dyadic::zero());
        for i in pre {
            let e = self
                .base
                .enclosure(&Bits::from_index(i as u64, phi), precision + headroom)?;
            acc = acc.add(&e);
        }
        Ok(acc)
    }

    fn is_exact(&self) -> bool {
        !self.force_approx && self.base.is_exact()
    }
}

/// μ_Φ for exact μ, with exact masses.
pub fn induce_exact(phi: &TtFunctional, mu: MeasureRef, budget: Budget) -> Result<Arc<Induced>> {
    if !mu.is_exact() {
        return Err(Error::NotExact);
    }
    Ok(Arc::new(induced(phi, mu, budget, false)))
}

/// μ_Φ answered through enclosures only, for any computable μ.
pub fn induce_approx(phi: &TtFunctional, mu: MeasureRef, budget: Budget) -> Arc<Induced> {
    Arc::new(induced(phi, mu, budget, true))
}

fn induced(phi: &TtFunctional, mu: MeasureRef, budget: Budget, force_approx: bool) -> Induced {
    Induced {
        functional: phi.clone(),
        base: mu,
        budget,
        force_approx,
        tables: RwLock::new(HashMap::new()),
        masses: RwLock::new(HashMap::new()),
    }
}

/// Sorts the output column of every level up to `levels`. The result is
/// non-decreasing and induces the same measure as `phi`.
pub fn reorder_monotone(phi: &TtFunctional, levels: usize, budget: Budget) -> Result<TtFunctional> {
    let mut phis = Vec::with_capacity(levels + 1);
    let mut tables = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        phis.push(phi.covered_phi(n)?);
        let mut t = phi.level_table(n, budget)?;
        t.sort();
        tables.push(t);
    }
    TtFunctional::new(
        format!("reorder({})", phi.name),
        UseBound::Table(phis),
        Rule::Table(tables),
    )
}

/// How `join` merges the two component outputs.
#[derive(Clone)]
pub enum Combiner {
    First,
    Second,
    Xor,
    /// Must return exactly as many bits as its (equal-length) arguments.
    Custom(String, CombineFn),
}

impl fmt::Debug for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combiner::First => write!(f, "first"),
            Combiner::Second => write!(f, "second"),
            Combiner::Xor => write!(f, "xor"),
            Combiner::Custom(name, _) => write!(f, "{name}"),
        }
    }
}

impl Combiner {
    fn apply(&self, a: &Bits, b: &Bits) -> Bits {
        match self {
            Combiner::First => a.clone(),
            Combiner::Second => b.clone(),
            Combiner::Xor => a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect(),
            Combiner::Custom(_, f) => f(a, b),
        }
    }
}

/// A functional on interleaved inputs `a ⊕ b` (even positions carry `a`).
/// Level n reads `2·max(φ_f(n), φ_g(n))` bits and combines `f(a)` with `g(b)`.
pub fn join(f: &TtFunctional, g: &TtFunctional, combiner: Combiner) -> TtFunctional {
    let name = format!("join({},{};{:?})", f.name, g.name, combiner);
    let (f1, g1) = (f.clone(), g.clone());
    let phi = move |n: usize| -> Option<usize> { Some(2 * f1.phi(n)?.max(g1.phi(n)?)) };
    let use_bound = match (f.max_level(), g.max_level()) {
        (None, None) => {
            let phi = phi.clone();
            UseBound::Fn(Arc::new(move |n| phi(n).unwrap_or(0)))
        }
        (a, b) => {
            let top = a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX));
            UseBound::Table((0..=top).map(|n| phi(n).unwrap_or(0)).collect())
        }
    };
    let (f2, g2) = (f.clone(), g.clone());
    let rule = Rule::Fn(Arc::new(move |input: &Bits, n: usize| {
        let (a, b) = (input.evens(), input.odds());
        let fa = f2.output_at(&a.prefix(f2.phi(n).unwrap_or(0)), n);
        let gb = g2.output_at(&b.prefix(g2.phi(n).unwrap_or(0)), n);
        combiner.apply(&fa, &gb)
    }));
    TtFunctional {
        name,
        use_bound,
        rule,
    }
}

pub type NextFn = Arc<dyn Fn(&[(usize, bool)]) -> usize + Send + Sync>;

/// A betting-style scan order: each step picks the next input position to
/// look at from the history of positions and bits seen so far.
#[derive(Clone)]
pub struct NonMonotonicStrategy {
    pub name: String,
    pub next_position: NextFn,
    /// Number of input bits that suffice to emit n output bits (every
    /// position touched in the first n steps is below it).
    pub scan_bound: UseFn,
}

impl fmt::Debug for NonMonotonicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NonMonotonicStrategy({})", self.name)
    }
}

fn smallest_unvisited(history: &[(usize, bool)]) -> usize {
    (0..).find(|p| history.iter().all(|(q, _)| q != p)).unwrap_or(0)
}

impl NonMonotonicStrategy {
    pub fn in_order() -> Self {
        NonMonotonicStrategy {
            name: "in-order".into(),
            next_position: Arc::new(|h| h.len()),
            scan_bound: Arc::new(|n| n),
        }
    }

    /// Scans 1, 0, 2, 3, ...
    pub fn swap_first_two() -> Self {
        NonMonotonicStrategy {
            name: "swap-first-two".into(),
            next_position: Arc::new(|h| match h.len() {
                0 => 1,
                1 => 0,
                k => k,
            }),
            scan_bound: Arc::new(|n| if n == 1 { 2 } else { n }),
        }
    }

    /// Scans 0; then 2 if that bit was 1, else 1; then the smallest
    /// position not yet seen, forever.
    pub fn adaptive() -> Self {
        NonMonotonicStrategy {
            name: "adaptive".into(),
            next_position: Arc::new(|h| match h {
                [] => 0,
                [(_, true)] => 2,
                [(_, false)] => 1,
                _ => smallest_unvisited(h),
            }),
            scan_bound: Arc::new(|n| if n == 2 { 3 } else { n }),
        }
    }

    /// Runs the strategy for `steps` steps on a finite input.
    pub fn run(&self, input: &Bits, steps: usize) -> Result<Bits> {
        let mut history: Vec<(usize, bool)> = Vec::with_capacity(steps);
        for _ in 0..steps {
            let pos = (self.next_position)(&history);
            if history.iter().any(|(p, _)| *p == pos) {
                return Err(Error::Strategy(format!(
                    "{} revisits position {pos} on input {input}",
                    self.name
                )));
            }
            let bit = input.get(pos).ok_or_else(|| {
                Error::Strategy(format!(
                    "{} reads position {pos} beyond its scan bound {} after {} steps",
                    self.name,
                    input.len(),
                    history.len()
                ))
            })?;
            history.push((pos, bit));
        }
        Ok(history.into_iter().map(|(_, b)| b).collect())
    }
}

/// The functional outputting the bits a strategy sees, in order of
/// appearance, tabulated exhaustively for levels `0..=levels`.
pub fn strategy_functional(
    s: &NonMonotonicStrategy,
    levels: usize,
    budget: Budget,
) -> Result<TtFunctional> {
    let mut phis = Vec::with_capacity(levels + 1);
    let mut tables = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        let phi = (s.scan_bound)(n);
        budget.check_strings(phi)?;
        let table: Result<Vec<Bits>> = (0..1u64 << phi)
            .into_par_iter()
            .map(|i| s.run(&Bits::from_index(i, phi), n))
            .collect();
        phis.push(phi);
        tables.push(table?);
    }
    let f = TtFunctional::new(
        format!("strategy({})", s.name),
        UseBound::Table(phis),
        Rule::Table(tables),
    )?;
    f.validate(levels, budget)?;
    Ok(f)
}

/// Functionals known by name to the CLI and spec files.
pub fn registry(name: &str) -> Option<TtFunctional> {
    let affine = |b| UseBound::Affine { a: 1, b };
    let make = |use_bound, rule: RuleFn| TtFunctional::new(name, use_bound, Rule::Fn(rule)).ok();
    match name {
        "identity" => make(affine(0), Arc::new(|x: &Bits, _| x.clone())),
        "drop-first-bit" => make(
            affine(1),
            Arc::new(|x: &Bits, _| x.iter().skip(1).collect()),
        ),
        "drop-first-complement" => make(
            affine(1),
            Arc::new(|x: &Bits, _| x.iter().skip(1).map(|b| !b).collect()),
        ),
        "complement" => make(affine(0), Arc::new(|x: &Bits, _| x.complement())),
        "constant-zero" => make(affine(0), Arc::new(|_: &Bits, n| Bits::repeat(false, n))),
        "swap-first-two" => make(
            UseBound::Fn(Arc::new(|n| if n == 1 { 2 } else { n })),
            Arc::new(|x: &Bits, n| {
                let mut v: Vec<bool> = x.iter().collect();
                if v.len() >= 2 {
                    v.swap(0, 1);
                }
                v.truncate(n);
                Bits::from_bools(v)
            }),
        ),
        "adaptive-scan" => {
            strategy_functional(&NonMonotonicStrategy::adaptive(), 12, Budget::DEFAULT)
                .ok()
                .map(|f| f.renamed(name))
        }
        _ => None,
    }
}

pub const REGISTRY_NAMES: &[&str] = &[
    "identity",
    "drop-first-bit",
    "drop-first-complement",
    "complement",
    "constant-zero",
    "swap-first-two",
    "adaptive-scan",
];
