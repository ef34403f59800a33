//! Text and JSON file formats for measures, functionals, machines, tests
//! and enumerations.
//!
//! Line formats skip blank lines and `#` comments. A lone `-` stands for
//! the empty string wherever a bit string is expected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::functional::{induce_approx, induce_exact, registry, Rule, TtFunctional, UseBound};
use crate::measure::{Bernoulli, Dirac, Lebesgue, MeasureRef, Mix, RationalBernoulli, Rounded};
use crate::randomness::{MonotoneMachine, TestKind, TestPresentation};
use crate::slowdown::{ToyPrefixMachine, ToyProgram};

/// A measure description as stored in JSON spec files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue,
    Bernoulli {
        p: Vec<Dyadic>,
    },
    /// Dyadic approximant of the i.i.d. measure with parameter num/den.
    BernoulliApprox {
        num: u64,
        den: u64,
        levels: usize,
    },
    Dirac {
        #[serde(default)]
        prefix: Bits,
        tail: Bits,
    },
    Mix {
        inner: Box<MeasureSpec>,
    },
    Induced {
        /// Registry name or path of a tt file.
        functional: String,
        base: Box<MeasureSpec>,
    },
    RationalBernoulli {
        num: u64,
        den: u64,
    },
    Rounded {
        inner: Box<MeasureSpec>,
    },
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("measure spec", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure specs serialize")
    }

    /// Builds the measure. Relative functional paths resolve against `dir`.
    pub fn build(&self, dir: Option<&Path>, budget: Budget) -> Result<MeasureRef> {
        Ok(match self {
            MeasureSpec::Lebesgue => Arc::new(Lebesgue),
            MeasureSpec::Bernoulli { p } => Arc::new(Bernoulli::new(p.clone())?),
            MeasureSpec::BernoulliApprox { num, den, levels } => {
                Arc::new(Bernoulli::approximating(*num, *den, *levels)?)
            }
            MeasureSpec::Dirac { prefix, tail } => Arc::new(Dirac::new(prefix.clone(), tail.clone())?),
            MeasureSpec::Mix { inner } => Arc::new(Mix::new(inner.build(dir, budget)?)),
            MeasureSpec::Induced { functional, base } => {
                let f = resolve_functional(functional, dir)?;
                let base = base.build(dir, budget)?;
                if base.is_exact() {
                    induce_exact(&f, base, budget)?
                } else {
                    induce_approx(&f, base, budget)
                }
            }
            MeasureSpec::RationalBernoulli { num, den } => Arc::new(RationalBernoulli::new(*num, *den)?),
            MeasureSpec::Rounded { inner } => Arc::new(Rounded::new(inner.build(dir, budget)?)),
        })
    }
}

pub fn load_measure(path: &Path, budget: Budget) -> Result<MeasureRef> {
    let text = read(path)?;
    MeasureSpec::from_json(&text)?.build(path.parent(), budget)
}

/// A registry name, or else a tt file path (relative to `dir` if given).
pub fn resolve_functional(name: &str, dir: Option<&Path>) -> Result<TtFunctional> {
    if let Some(f) = registry(name) {
        return Ok(f);
    }
    let path = match dir {
        Some(d) if Path::new(name).is_relative() => d.join(name),
        _ => PathBuf::from(name),
    };
    if !path.exists() {
        return Err(Error::parse(
            "functional",
            format!("{name:?} is neither a registry name nor a file"),
        ));
    }
    parse_tt(&read(&path)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::parse("file", format!("{}: {e}", path.display())))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_bits(token: &str) -> Result<Bits> {
    match token.trim() {
        "-" | "" => Ok(Bits::new()),
        t => t.parse(),
    }
}

fn show_bits(b: &Bits) -> String {
    if b.is_empty() {
        "-".into()
    } else {
        b.to_string()
    }
}

fn parse_affine(expr: &str) -> Result<(usize, usize)> {
    let bad = || Error::parse("use bound", format!("unsupported expression {expr:?}"));
    let mut a = 0;
    let mut b = 0;
    for term in expr.split('+').map(|t| t.replace([' ', '*'], "")) {
        if let Some(coef) = term.strip_suffix('n') {
            a += if coef.is_empty() { 1 } else { coef.parse().map_err(|_| bad())? };
        } else {
            b += term.parse::<usize>().map_err(|_| bad())?;
        }
    }
    if a == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

/// Parses a truth-table file:
///
/// ```text
/// usebound: n -> n+1
/// level 0: 0->,1->
/// level 1: 00->0,01->0,10->1,11->1
/// ```
///
/// `→` and `->` are both accepted. With `usebound: table` the use is read
/// off the input lengths.
pub fn parse_tt(text: &str) -> Result<TtFunctional> {
    let mut affine = None;
    let mut levels: BTreeMap<usize, Vec<(Bits, Bits)>> = BTreeMap::new();
    let mut name = "tt".to_string();
    for (no, line) in content_lines(text) {
        let bad = |d: &str| Error::parse("tt file", format!("line {no}: {d}"));
        if let Some(rest) = line.strip_prefix("name:") {
            name = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("usebound:") {
            let rest = rest.trim();
            if rest != "table" {
                let expr = rest
                    .strip_prefix("n")
                    .map(str::trim)
                    .and_then(|r| r.strip_prefix("->").or_else(|| r.strip_prefix('→')))
                    .ok_or_else(|| bad("expected `n -> expr` or `table`"))?;
                affine = Some(parse_affine(expr)?);
            }
        } else if let Some(rest) = line.strip_prefix("level") {
            let (n, entries) = rest.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let n: usize = n.trim().parse().map_err(|_| bad("bad level number"))?;
            let mut pairs = Vec::new();
            for entry in entries.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                let (i, o) = entry
                    .split_once("->")
                    .or_else(|| entry.split_once('→'))
                    .ok_or_else(|| bad("entry without arrow"))?;
                pairs.push((parse_bits(i)?, parse_bits(o)?));
            }
            if levels.insert(n, pairs).is_some() {
                return Err(bad("level listed twice"));
            }
        } else {
            return Err(bad("unrecognised line"));
        }
    }
    let mut phis = Vec::new();
    let mut tables = Vec::new();
    for (expected, (n, mut pairs)) in levels.into_iter().enumerate() {
        if n != expected {
            return Err(Error::parse("tt file", format!("level {expected} missing")));
        }
        let phi = match (affine, pairs.first()) {
            (Some((a, b)), _) => a * n + b,
            (None, Some((i, _))) => i.len(),
            (None, None) => return Err(Error::parse("tt file", format!("level {n} is empty"))),
        };
        if phi >= 32 {
            return Err(Error::parse("tt file", format!("level {n} reads {phi} bits")));
        }
        pairs.sort();
        let complete = pairs.len() == 1 << phi
            && pairs
                .iter()
                .enumerate()
                .all(|(k, (i, _))| i.len() == phi && i.to_index() == k as u64);
        if !complete {
            return Err(Error::parse(
                "tt file",
                format!("level {n} must list each input of length {phi} once"),
            ));
        }
        phis.push(phi);
        tables.push(pairs.into_iter().map(|(_, o)| o).collect());
    }
    TtFunctional::new(name, UseBound::Table(phis), Rule::Table(tables))
}

/// Writes the first `levels` + 1 levels of a functional as a tt file.
pub fn print_tt(f: &TtFunctional, levels: usize, budget: Budget) -> Result<String> {
    let mut s = format!("name: {}\n", f.name());
    match f.use_bound() {
        UseBound::Affine { a, b } => {
            let _ = writeln!(s, "usebound: n -> {a}n+{b}");
        }
        _ => s.push_str("usebound: table\n"),
    }
    for n in 0..=levels {
        let table = f.level_table(n, budget)?;
        let phi = f.phi(n).unwrap_or(0);
        let entries: Vec<String> = table
            .iter()
            .enumerate()
            .map(|(i, o)| format!("{}->{}", show_bits(&Bits::from_index(i as u64, phi)), show_bits(o)))
            .collect();
        let _ = writeln!(s, "level {n}: {}", entries.join(","));
    }
    Ok(s)
}

/// Lines `code output halt_stage`.
pub fn parse_toy_machine(text: &str) -> Result<ToyPrefixMachine> {
    let mut programs = Vec::new();
    for (no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [code, output, stage] = fields[..] else {
            return Err(Error::parse("toy machine", format!("line {no}: expected 3 fields")));
        };
        programs.push(ToyProgram {
            code: parse_bits(code)?,
            output: parse_bits(output)?,
            halt_stage: stage
                .parse()
                .map_err(|_| Error::parse("toy machine", format!("line {no}: bad stage {stage:?}")))?,
        });
    }
    ToyPrefixMachine::new(programs)
}

pub fn print_toy_machine(m: &ToyPrefixMachine) -> String {
    m.programs()
        .iter()
        .map(|p| format!("{} {} {}\n", show_bits(&p.code), show_bits(&p.output), p.halt_stage))
        .collect()
}

/// One dyadic per line; entries must be distinct and inside (0,1).
pub fn parse_q(text: &str) -> Result<Vec<Dyadic>> {
    let mut q = Vec::new();
    for (no, line) in content_lines(text) {
        let v: Dyadic = line.parse()?;
        if v <= Dyadic::zero() || v >= Dyadic::one() {
            return Err(Error::parse("q file", format!("line {no}: {v} outside (0,1)")));
        }
        if q.contains(&v) {
            return Err(Error::parse("q file", format!("line {no}: {v} repeated")));
        }
        q.push(v);
    }
    Ok(q)
}

pub fn print_q(q: &[Dyadic]) -> String {
    q.iter().map(|v| format!("{v}\n")).collect()
}

/// `kind: schnorr|martin_lof` (default martin_lof), then `i: σ,σ,…`.
pub fn parse_test(text: &str) -> Result<TestPresentation> {
    let mut kind = TestKind::MartinLof;
    let mut components = BTreeMap::new();
    for (no, line) in content_lines(text) {
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse("test file", format!("line {no}: missing ':'")))?;
        if head.trim() == "kind" {
            kind = rest.trim().parse()?;
            continue;
        }
        let i: usize = head
            .trim()
            .parse()
            .map_err(|_| Error::parse("test file", format!("line {no}: bad index {head:?}")))?;
        let strings = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_bits)
            .collect::<Result<Vec<_>>>()?;
        components.entry(i).or_insert_with(Vec::new).extend(strings);
    }
    Ok(TestPresentation::new(kind, components))
}

pub fn print_test(t: &TestPresentation) -> String {
    let mut s = format!("kind: {}\n", t.kind.as_str());
    for (i, strings) in &t.components {
        let list: Vec<String> = strings.iter().map(show_bits).collect();
        let _ = writeln!(s, "{i}: {}", list.join(","));
    }
    s
}

/// Lines `program committed_output`.
pub fn parse_monotone_machine(text: &str) -> Result<MonotoneMachine> {
    let mut pairs = Vec::new();
    for (no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [p, o] = fields[..] else {
            return Err(Error::parse("monotone machine", format!("line {no}: expected 2 fields")));
        };
        pairs.push((parse_bits(p)?, parse_bits(o)?));
    }
    MonotoneMachine::new(pairs)
}

pub fn print_monotone_machine(m: &MonotoneMachine) -> String {
    m.pairs()
        .iter()
        .map(|(p, o)| format!("{} {}\n", show_bits(p), show_bits(o)))
        .collect()
}
