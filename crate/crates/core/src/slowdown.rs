//! Stage-counting functionals driven by a left-c.e. approximation.
//!
//! A [`ToyPrefixMachine`] stands in for a universal prefix-free machine: its
//! halting probability is a dyadic reached at a finite stage. The
//! functionals here turn inputs into runs of ones whose lengths are the
//! stages at which the approximation first clears some threshold.

use std::fmt;
use std::sync::Arc;

use crate::bits::{find_prefix_violation, Bits};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::functional::{Rule, TtFunctional, UseBound};

pub const DEFAULT_STAGE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyProgram {
    pub code: Bits,
    pub output: Bits,
    pub halt_stage: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyPrefixMachine {
    programs: Vec<ToyProgram>,
}

impl ToyPrefixMachine {
    pub fn new(programs: Vec<ToyProgram>) -> Result<Self> {
        if let Some(p) = programs.iter().find(|p| p.halt_stage == 0) {
            return Err(Error::InvalidParameter(format!(
                "program {} halts at stage 0; stages start at 1",
                p.code
            )));
        }
        let codes: Vec<Bits> = programs.iter().map(|p| p.code.clone()).collect();
        let mut sorted = codes.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate program code".into()));
        }
        if let Some((a, b)) = find_prefix_violation(&codes) {
            return Err(Error::InvalidParameter(format!(
                "codes are not prefix-free: {a} is a prefix of {b}"
            )));
        }
        let m = ToyPrefixMachine { programs };
        if m.kraft_sum() > Dyadic::one() {
            return Err(Error::InvalidParameter(format!(
                "Kraft sum {} exceeds 1",
                m.kraft_sum()
            )));
        }
        Ok(m)
    }

    pub fn programs(&self) -> &[ToyProgram] {
        &self.programs
    }

    pub fn kraft_sum(&self) -> Dyadic {
        self.programs
            .iter()
            .map(|p| Dyadic::pow2_neg(p.code.len() as u64))
            .sum()
    }

    /// The stage after which nothing new halts.
    pub fn stabilization_stage(&self) -> u64 {
        self.programs.iter().map(|p| p.halt_stage).max().unwrap_or(0)
    }

    /// Ω_s: total weight of programs halted by stage `s`.
    pub fn omega_approx(&self, s: u64) -> Dyadic {
        self.programs
            .iter()
            .filter(|p| p.halt_stage <= s)
            .map(|p| Dyadic::pow2_neg(p.code.len() as u64))
            .sum()
    }

    pub fn stage_sequence(&self) -> StageSequence {
        let values = (0..=self.stabilization_stage())
            .map(|s| self.omega_approx(s))
            .collect();
        StageSequence { values }
    }
}

/// A non-decreasing sequence of dyadics, constant after its last entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSequence {
    values: Vec<Dyadic>,
}

impl StageSequence {
    pub fn new(values: Vec<Dyadic>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty stage sequence".into()));
        }
        if let Some(s) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::NonMonotone(format!(
                "stage {} value {} exceeds stage {} value {}",
                s,
                values[s],
                s + 1,
                values[s + 1]
            )));
        }
        Ok(StageSequence { values })
    }

    pub fn value(&self, s: u64) -> &Dyadic {
        let last = self.values.len() - 1;
        &self.values[(s as usize).min(last)]
    }

    pub fn limit(&self) -> &Dyadic {
        self.values.last().expect("non-empty")
    }

    pub fn stabilization_stage(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// min{s ≤ budget : value(s) ≥ target}.
    pub fn first_stage(&self, target: &Dyadic, budget: u64) -> StageCount {
        if target > self.limit() {
            return StageCount::Unfound;
        }
        let s = self.values.partition_point(|v| v < target) as u64;
        if s <= budget {
            StageCount::Finite(s)
        } else {
            StageCount::Unfound
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageCount {
    Finite(u64),
    /// Not reached within the stage budget; rendered as an infinite run.
    Unfound,
}

impl fmt::Display for StageCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageCount::Finite(s) => write!(f, "{s}"),
            StageCount::Unfound => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub t: StageCount,
    /// The bits that follow the run (separator, coding block), or the bit
    /// the run repeats for the join template.
    pub coding: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCounterOutput {
    pub blocks: Vec<Block>,
    pub rendered: Bits,
    /// Rendering stopped at `out_len`.
    pub truncated: bool,
    /// Index (into `blocks`) of the first unfound stage, if any.
    pub first_unfound: Option<usize>,
}

struct Renderer {
    out: Vec<bool>,
    limit: usize,
}

impl Renderer {
    fn full(&self) -> bool {
        self.out.len() >= self.limit
    }

    fn run(&mut self, bit: bool, count: u64) {
        let room = (self.limit - self.out.len()) as u64;
        let k = count.min(room) as usize;
        self.out.extend(std::iter::repeat_n(bit, k));
    }

    fn bits(&mut self, b: &Bits) {
        for bit in b.iter() {
            if self.full() {
                return;
            }
            self.out.push(bit);
        }
    }
}

/// `1^{t_1} 0 1^{t_2} 0 …`; an unfound stage turns the rest into ones.
pub fn render_separated(times: &[StageCount], out_len: usize) -> StageCounterOutput {
    let mut r = Renderer {
        out: Vec::new(),
        limit: out_len,
    };
    let mut blocks = Vec::new();
    let mut first_unfound = None;
    for &t in times {
        if r.full() {
            break;
        }
        match t {
            StageCount::Finite(s) => {
                r.run(true, s);
                r.bits(&Bits::from_bools(vec![false]));
                blocks.push(Block {
                    t,
                    coding: Bits::from_bools(vec![false]),
                });
            }
            StageCount::Unfound => {
                r.run(true, u64::MAX);
                first_unfound = Some(blocks.len());
                blocks.push(Block {
                    t,
                    coding: Bits::new(),
                });
                break;
            }
        }
    }
    finish(r, blocks, first_unfound)
}

/// `b_0^{t_1} b_1^{t_2} …` with no separators.
pub fn render_join(times: &[StageCount], b: &Bits, out_len: usize) -> StageCounterOutput {
    let mut r = Renderer {
        out: Vec::new(),
        limit: out_len,
    };
    let mut blocks = Vec::new();
    let mut first_unfound = None;
    for (&t, bit) in times.iter().zip(b.iter()) {
        if r.full() {
            break;
        }
        let coding = Bits::from_bools(vec![bit]);
        match t {
            StageCount::Finite(s) => r.run(bit, s),
            StageCount::Unfound => {
                r.run(bit, u64::MAX);
                first_unfound = Some(blocks.len());
                blocks.push(Block { t, coding });
                break;
            }
        }
        blocks.push(Block { t, coding });
    }
    finish(r, blocks, first_unfound)
}

/// `1^{t_0} 0^{c(0)+1} 1^{t_1} 0^{c(1)+1} …`.
pub fn gamma_coding(times: &[u64], c: &Bits, out_len: usize) -> StageCounterOutput {
    let mut r = Renderer {
        out: Vec::new(),
        limit: out_len,
    };
    let mut blocks = Vec::new();
    for (&t, bit) in times.iter().zip(c.iter()) {
        if r.full() {
            break;
        }
        let coding = Bits::repeat(false, 1 + bit as usize);
        r.run(true, t);
        r.bits(&coding);
        blocks.push(Block {
            t: StageCount::Finite(t),
            coding,
        });
    }
    finish(r, blocks, None)
}

fn finish(r: Renderer, blocks: Vec<Block>, first_unfound: Option<usize>) -> StageCounterOutput {
    let truncated = r.full();
    StageCounterOutput {
        blocks,
        rendered: Bits::from_bools(r.out),
        truncated,
        first_unfound,
    }
}

/// Reads c back from the lengths of the 0-runs of a Γ rendering. Runs of
/// length 1 and 2 decode to 0 and 1; anything longer means two 0-blocks
/// touched (some t_i = 0 with i ≥ 1) and cannot be split.
pub fn gamma_decode(rendered: &Bits) -> Result<Bits> {
    let mut c = Vec::new();
    let mut run = 0usize;
    let flush = |run: usize, c: &mut Vec<bool>| -> Result<()> {
        match run {
            0 => Ok(()),
            1 => {
                c.push(false);
                Ok(())
            }
            2 => {
                c.push(true);
                Ok(())
            }
            n => Err(Error::Ambiguous(format!(
                "run of {n} zeros after block {} cannot be split",
                c.len()
            ))),
        }
    };
    for bit in rendered.iter() {
        if bit {
            flush(run, &mut c)?;
            run = 0;
        } else {
            run += 1;
        }
    }
    flush(run, &mut c)?;
    Ok(Bits::from_bools(c))
}

/// The stage counts t_1 … t_k for the prefixes of `x`: t_i is the first
/// stage at which the sequence reaches 0.x↾i.
pub fn stage_counts(seq: &StageSequence, x: &Bits, stage_budget: u64) -> Vec<StageCount> {
    (1..=x.len())
        .map(|i| seq.first_stage(&x.prefix(i).value(), stage_budget))
        .collect()
}

pub fn slowdown(seq: &StageSequence, x: &Bits, out_len: usize, stage_budget: u64) -> StageCounterOutput {
    // Each block is at least one bit long, so out_len prefixes suffice.
    let x = x.prefix(out_len);
    render_separated(&stage_counts(seq, &x, stage_budget), out_len)
}

pub fn slowdown_join(
    seq: &StageSequence,
    a: &Bits,
    b: &Bits,
    out_len: usize,
    stage_budget: u64,
) -> StageCounterOutput {
    render_join(&stage_counts(seq, a, stage_budget), b, out_len)
}

/// `1^{t_0} 0 1^{t_1} 0 …` for externally simulated halting times.
pub fn halting_time_functional(times: &[StageCount], out_len: usize) -> StageCounterOutput {
    render_separated(times, out_len)
}

/// The slowdown map as a tt-functional with φ(n) = n.
pub fn slowdown_functional(seq: &StageSequence, stage_budget: u64) -> TtFunctional {
    let seq = seq.clone();
    TtFunctional::new(
        "slowdown",
        UseBound::Affine { a: 1, b: 0 },
        Rule::Fn(Arc::new(move |x: &Bits, n| {
            slowdown(&seq, x, n, stage_budget).rendered
        })),
    )
    .expect("affine bound with slope 1")
}

/// Shape of the end of a finite rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailShape {
    /// Ends with `repeats` copies of `1^k 0`.
    Periodic { k: usize, repeats: usize },
    /// Ends with a run of `len` ones.
    Ones { len: usize },
}

/// Classifies a separated rendering from its blocks: an unfound stage gives
/// `Ones`, otherwise the trailing run of equal complete blocks is counted.
/// A block cut off by `out_len` is ignored.
pub fn classify_output(out: &StageCounterOutput) -> Option<TailShape> {
    if out.first_unfound.is_some() {
        return classify_tail(&out.rendered);
    }
    let mut used = 0u64;
    let mut complete = Vec::new();
    for block in &out.blocks {
        let StageCount::Finite(t) = block.t else { break };
        used += t + block.coding.len() as u64;
        if used > out.rendered.len() as u64 {
            break;
        }
        complete.push(t);
    }
    let &k = complete.last()?;
    let repeats = complete.iter().rev().take_while(|&&t| t == k).count();
    Some(TailShape::Periodic {
        k: k as usize,
        repeats,
    })
}

/// Classifies the tail of a complete rendering. A trailing 1-run counts as `Ones`;
/// otherwise the last block `1^k 0` is counted backwards.
pub fn classify_tail(rendered: &Bits) -> Option<TailShape> {
    let v = rendered.as_slice();
    if v.is_empty() {
        return None;
    }
    if v[v.len() - 1] {
        let len = v.iter().rev().take_while(|&&b| b).count();
        return Some(TailShape::Ones { len });
    }
    let mut blocks = Vec::new();
    let mut ones = 0usize;
    for &bit in v {
        if bit {
            ones += 1;
        } else {
            blocks.push(ones);
            ones = 0;
        }
    }
    let k = *blocks.last()?;
    let repeats = blocks.iter().rev().take_while(|&&b| b == k).count();
    Some(TailShape::Periodic { k, repeats })
}

/// T(x) = {n : q_n < x}, as the characteristic string over the first
/// `out_len` terms of `q`.
pub fn tmap(x: &Dyadic, q: &[Dyadic], out_len: usize) -> Bits {
    q.iter().take(out_len).map(|qn| qn < x).collect()
}

/// T applied to the cylinder of a finite bit stream: bit n is emitted once
/// every point of the cylinder agrees on `q_n < x`.
pub fn tmap_stream(x: &Bits, q: &[Dyadic], out_len: usize) -> Bits {
    let lo = x.value();
    let hi = &lo + Dyadic::pow2_neg(x.len() as u64);
    let mut out = Bits::new();
    for qn in q.iter().take(out_len) {
        if qn < &lo {
            out.push(true);
        } else if qn >= &hi {
            out.push(false);
        } else {
            break;
        }
    }
    out
}

/// 1/2, 1/4, 3/4, 1/8, 3/8, … down to denominator 2^depth.
pub fn standard_q(depth: u64) -> Vec<Dyadic> {
    let mut q = Vec::new();
    for k in 1..=depth {
        for m in (1..1i64 << k).step_by(2) {
            q.push(Dyadic::from_ratio(m, k));
        }
    }
    q
}

/// The set of x consistent with a T-image `z`: the half-open interval
/// (max{q_n : z_n = 1}, min{q_n : z_n = 0}], starting from (0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmapEnclosure {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

pub fn tmap_inverse(z: &Bits, q: &[Dyadic]) -> Result<TmapEnclosure> {
    let mut lo = Dyadic::zero();
    let mut hi = Dyadic::one();
    for (bit, qn) in z.iter().zip(q) {
        if bit {
            lo = lo.max(qn.clone());
        } else {
            hi = hi.min(qn.clone());
        }
    }
    if lo >= hi {
        return Err(Error::Ambiguous(format!("{z} is not in the range of T")));
    }
    Ok(TmapEnclosure { lo, hi })
}

/// |S(z1) − S(z2)| to within 2^-precision, where S inverts T on its range.
pub fn difference_functional(q: &[Dyadic], z1: &Bits, z2: &Bits, precision: u64) -> Result<Dyadic> {
    if z1 == z2 {
        return Ok(Dyadic::zero());
    }
    let e1 = tmap_inverse(z1, q)?;
    let e2 = tmap_inverse(z2, q)?;
    let zero = Dyadic::zero();
    let dmin = (&e1.lo - &e2.hi).max(&e2.lo - &e1.hi).max(zero);
    let dmax = (&e1.hi - &e2.lo).max(&e2.hi - &e1.lo);
    let half_width = (&dmax - &dmin).half();
    if half_width > Dyadic::pow2_neg(precision) {
        return Err(Error::Ambiguous(format!(
            "difference known only to within {half_width}, need 2^-{precision}"
        )));
    }
    Ok((dmin + dmax).half())
}

/// T of each approximant of a non-decreasing sequence; 1s only accumulate.
pub fn tmap_ce_monotone(approximations: &[Dyadic], q: &[Dyadic], out_len: usize) -> Result<Vec<Bits>> {
    if let Some(i) = approximations.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::NonMonotone(format!(
            "approximation {} = {} exceeds the next one {}",
            i,
            approximations[i],
            approximations[i + 1]
        )));
    }
    let out: Vec<Bits> = approximations.iter().map(|x| tmap(x, q, out_len)).collect();
    for w in out.windows(2) {
        if w[0].iter().zip(w[1].iter()).any(|(a, b)| a && !b) {
            return Err(Error::InvariantViolation(format!(
                "bit flipped from 1 to 0 between {} and {}",
                w[0], w[1]
            )));
        }
    }
    Ok(out)
}
