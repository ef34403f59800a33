//! Non-decreasing tt-functionals Θ that push an atomless exact measure onto
//! a generalized Bernoulli measure close to Lebesgue.
//!
//! Level n of Θ cuts the input space into 2^n consecutive dyadic intervals
//! ("regions"), one per output string. Every level-(n-1) region is split at a
//! dyadic point z whose cumulative μ-mass divides the region's mass in the
//! same ratio p_n : (1 - p_n). All regions of a level must share p_n, which
//! is what makes μ_Θ a generalized Bernoulli measure.

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::functional::{Rule, TtFunctional, UseBound};
use crate::measure::{probe_positive, Bernoulli, Measure};

#[derive(Debug, Clone)]
pub struct BernoullizeConfig {
    pub depth: usize,
    pub epsilon: Dyadic,
    /// Longest cut string considered.
    pub max_cut_depth: usize,
    /// Number of candidate cut points examined per level.
    pub candidate_limit: usize,
}

impl BernoullizeConfig {
    pub fn new(depth: usize) -> Self {
        BernoullizeConfig {
            depth,
            epsilon: Dyadic::pow2_neg(3),
            max_cut_depth: (depth + 10).min(40),
            candidate_limit: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanLevel {
    pub level: usize,
    pub p: Dyadic,
    /// For every output ρ of length `level`, in order, the cylinders whose
    /// union is the region Θ maps into [ρ].
    pub cut_sets: Vec<(Bits, Vec<Bits>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoullizePlan {
    pub epsilon: Dyadic,
    pub levels: Vec<PlanLevel>,
}

/// Cumulative mass of a dyadic point: F(0.s) = Σ μ(s↾k · 0) over the 1-bits of s.
pub fn cumulative(mu: &dyn Measure, s: &Bits) -> Result<Dyadic> {
    let mut total = Dyadic::zero();
    for (k, bit) in s.iter().enumerate() {
        if bit {
            total = total + mu.mass(&s.prefix(k).child(false))?;
        }
    }
    Ok(total)
}

/// The shortest string s with |s| ≤ `max_depth` and F(0.s) = `target`.
pub fn find_cut(mu: &dyn Measure, target: &Dyadic, max_depth: usize) -> Result<Option<Bits>> {
    let mut sigma = Bits::new();
    let mut lo = Dyadic::zero();
    loop {
        if &lo == target {
            return Ok(Some(sigma.trim_trailing_zeros()));
        }
        if sigma.len() >= max_depth {
            return Ok(None);
        }
        let c = &lo + mu.mass(&sigma.child(false))?;
        if target < &c {
            sigma.push(false);
        } else {
            sigma.push(true);
            lo = c;
        }
    }
}

/// Dyadic point → the string naming it with exactly `len` bits.
fn point_bits(z: &Dyadic, len: usize) -> Bits {
    let shifted = z.mul_pow2(len as i64);
    let index = shifted.numerator().to_u64().unwrap_or(0);
    Bits::from_index(index, len)
}

/// Prefix-free cylinders covering `[a, b)`, largest first from the left.
pub fn canonical_cylinders(a: &Dyadic, b: &Dyadic) -> Vec<Bits> {
    let mut out = Vec::new();
    let mut a = a.clone();
    while &a < b {
        let mut e = a.exponent();
        while &a + Dyadic::pow2_neg(e) > *b {
            e += 1;
        }
        out.push(point_bits(&a, e as usize));
        a = a + Dyadic::pow2_neg(e);
    }
    out
}

struct Region {
    a: Dyadic,
    b: Dyadic,
    fa: Dyadic,
    fb: Dyadic,
}

fn in_band(p: &Dyadic, level: usize, epsilon: &Dyadic) -> bool {
    let half = Dyadic::pow2_neg(1);
    p >= epsilon
        && p <= &(Dyadic::one() - epsilon)
        && (p - &half).square() <= Dyadic::pow2_neg(level as u64)
}

/// Cut points strictly inside a region, with their cumulative masses, down
/// to the deepest level whose point count stays under `limit`.
fn region_points(
    mu: &dyn Measure,
    r: &Region,
    max_depth: usize,
    limit: usize,
) -> Result<Vec<(Dyadic, Dyadic)>> {
    let mut depth = 0;
    while depth < max_depth {
        let next = depth + 1;
        let count = (&r.b - &r.a).mul_pow2(next as i64);
        if count > Dyadic::from_int(limit as i64) {
            break;
        }
        depth = next;
    }
    let mut out = Vec::new();
    // DFS over cylinders meeting (a, b); the point of node σ is 0.σ1.
    let mut stack = vec![(Bits::new(), Dyadic::zero())];
    while let Some((sigma, lo)) = stack.pop() {
        if sigma.len() >= depth {
            continue;
        }
        let start = sigma.value();
        let end = &start + Dyadic::pow2_neg(sigma.len() as u64);
        if end <= r.a || start >= r.b {
            continue;
        }
        let mid = &start + Dyadic::pow2_neg(sigma.len() as u64 + 1);
        let f_mid = &lo + mu.mass(&sigma.child(false))?;
        if mid > r.a && mid < r.b {
            out.push((mid, f_mid.clone()));
        }
        stack.push((sigma.child(true), f_mid));
        stack.push((sigma.child(false), lo));
    }
    Ok(out)
}

/// Greedy construction of Θ to `cfg.depth` levels.
pub fn build_theta(mu: &dyn Measure, cfg: &BernoullizeConfig) -> Result<(BernoullizePlan, TtFunctional)> {
    if !mu.is_exact() {
        return Err(Error::NotExact);
    }
    if !mu.declared_atomless() {
        return Err(Error::InvalidParameter(
            "bernoullize needs a measure declared atomless".into(),
        ));
    }
    let half = Dyadic::pow2_neg(1);
    if cfg.epsilon <= Dyadic::zero() || cfg.epsilon >= half {
        return Err(Error::InvalidParameter(format!(
            "epsilon {} outside (0, 1/2)",
            cfg.epsilon
        )));
    }
    let probe_depth = cfg.max_cut_depth.min(12);
    if probe_positive(mu, probe_depth, Budget::DEFAULT)?.is_zero() {
        return Err(Error::NotPositive { depth: probe_depth });
    }

    let mut boundaries = vec![Dyadic::zero(), Dyadic::one()];
    let mut cumul = vec![Dyadic::zero(), Dyadic::one()];
    let mut levels = Vec::with_capacity(cfg.depth);
    for level in 1..=cfg.depth {
        let regions: Vec<Region> = (0..boundaries.len() - 1)
            .map(|i| Region {
                a: boundaries[i].clone(),
                b: boundaries[i + 1].clone(),
                fa: cumul[i].clone(),
                fb: cumul[i + 1].clone(),
            })
            .collect();
        let largest = regions
            .iter()
            .max_by(|x, y| (&x.fb - &x.fa).cmp(&(&y.fb - &y.fa)))
            .expect("at least one region");
        let width = &largest.fb - &largest.fa;
        let mut candidates: Vec<Dyadic> = region_points(mu, largest, cfg.max_cut_depth, cfg.candidate_limit)?
            .into_iter()
            .filter_map(|(_, f)| (&f - &largest.fa).checked_div(&width))
            .filter(|p| in_band(p, level, &cfg.epsilon))
            .collect();
        candidates.sort_by(|x, y| {
            (x - &half)
                .abs()
                .cmp(&(y - &half).abs())
                .then_with(|| x.cmp(y))
        });
        candidates.dedup();

        let mut chosen = None;
        'candidates: for p in &candidates {
            let mut cuts = Vec::with_capacity(regions.len());
            for r in &regions {
                let target = &r.fa + p * (&r.fb - &r.fa);
                match find_cut(mu, &target, cfg.max_cut_depth)? {
                    Some(s) => cuts.push((s.value(), target)),
                    None => continue 'candidates,
                }
            }
            chosen = Some((p.clone(), cuts));
            break;
        }
        let Some((p, cuts)) = chosen else {
            return Err(Error::ConstructionFailure {
                level,
                detail: format!(
                    "no split ratio shared by all {} regions among {} candidates (cut depth {})",
                    regions.len(),
                    candidates.len(),
                    cfg.max_cut_depth
                ),
            });
        };

        let mut next_b = Vec::with_capacity(2 * boundaries.len());
        let mut next_f = Vec::with_capacity(2 * boundaries.len());
        for (i, (z, fz)) in cuts.into_iter().enumerate() {
            next_b.push(boundaries[i].clone());
            next_f.push(cumul[i].clone());
            next_b.push(z);
            next_f.push(fz);
        }
        next_b.push(Dyadic::one());
        next_f.push(Dyadic::one());
        boundaries = next_b;
        cumul = next_f;

        let cut_sets = (0..boundaries.len() - 1)
            .map(|i| {
                (
                    Bits::from_index(i as u64, level),
                    canonical_cylinders(&boundaries[i], &boundaries[i + 1]),
                )
            })
            .collect();
        levels.push(PlanLevel { level, p, cut_sets });
    }
    let plan = BernoullizePlan {
        epsilon: cfg.epsilon.clone(),
        levels,
    };
    let theta = plan.functional()?;
    Ok((plan, theta))
}

impl BernoullizePlan {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn p(&self) -> Vec<Dyadic> {
        self.levels.iter().map(|l| l.p.clone()).collect()
    }

    /// The generalized Bernoulli measure with the plan's ratios. Beyond the
    /// plan depth it continues with p = 1/2.
    pub fn target_measure(&self) -> Result<Bernoulli> {
        let mut p = self.p();
        p.push(Dyadic::pow2_neg(1));
        Bernoulli::new(p)
    }

    /// Region boundaries at each level, recovered from the cut sets.
    fn boundaries(&self) -> Result<Vec<Vec<Dyadic>>> {
        let mut all = vec![vec![Dyadic::zero(), Dyadic::one()]];
        for l in &self.levels {
            let mut b = Vec::with_capacity(l.cut_sets.len() + 1);
            for (rho, cuts) in &l.cut_sets {
                let first = cuts.iter().min().ok_or_else(|| {
                    Error::InvalidFunctional(format!("empty cut set for {rho}"))
                })?;
                b.push(first.value());
            }
            b.push(Dyadic::one());
            if b.windows(2).any(|w| w[0] >= w[1]) || b[0] != Dyadic::zero() {
                return Err(Error::InvalidFunctional(format!(
                    "level {} regions are not ordered",
                    l.level
                )));
            }
            all.push(b);
        }
        Ok(all)
    }

    /// Θ as a table-free functional: level n reads φ(n) bits (the longest
    /// boundary so far) and outputs the index of the region containing them.
    pub fn functional(&self) -> Result<TtFunctional> {
        let boundaries = Arc::new(self.boundaries()?);
        let mut phis = Vec::with_capacity(boundaries.len());
        let mut running = 0usize;
        for b in boundaries.iter() {
            let longest = b.iter().map(|z| z.exponent() as usize).max().unwrap_or(0);
            running = running.max(longest);
            phis.push(running);
        }
        let rule = Rule::Fn(Arc::new(move |input: &Bits, n: usize| {
            let v = input.value();
            let level = &boundaries[n];
            let k = level.partition_point(|z| z <= &v).saturating_sub(1);
            Bits::from_index(k as u64, n)
        }));
        TtFunctional::new("theta", UseBound::Table(phis), rule)
    }

    /// Checks both ratio invariants and the cut-set structure.
    pub fn check_invariants(&self) -> Result<()> {
        for l in &self.levels {
            if !in_band(&l.p, l.level, &self.epsilon) {
                return Err(Error::InvariantViolation(format!(
                    "p_{} = {} outside its band",
                    l.level, l.p
                )));
            }
            for (rho, cuts) in &l.cut_sets {
                if let Some((x, y)) = crate::bits::find_prefix_violation(cuts) {
                    return Err(Error::InvariantViolation(format!(
                        "cut set of {rho} not prefix-free: {x} ≺ {y}"
                    )));
                }
            }
        }
        self.boundaries().map(|_| ())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("epsilon: {}\n", self.epsilon);
        for l in &self.levels {
            let _ = writeln!(s, "level {}: p={}", l.level, l.p);
            for (rho, cuts) in &l.cut_sets {
                let list: Vec<String> = cuts.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(s, "{rho}: {}", list.join(","));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::parse("bernoullize plan", format!("bad line {line:?}"));
        let mut epsilon = None;
        let mut levels: Vec<PlanLevel> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(e) = line.strip_prefix("epsilon:") {
                epsilon = Some(e.trim().parse()?);
            } else if let Some(rest) = line.strip_prefix("level ") {
                let (n, p) = rest.split_once(':').ok_or_else(|| bad(line))?;
                let p = p.trim().strip_prefix("p=").ok_or_else(|| bad(line))?;
                levels.push(PlanLevel {
                    level: n.trim().parse().map_err(|_| bad(line))?,
                    p: p.parse()?,
                    cut_sets: Vec::new(),
                });
            } else {
                let (rho, cuts) = line.split_once(':').ok_or_else(|| bad(line))?;
                let level = levels.last_mut().ok_or_else(|| bad(line))?;
                let cuts = cuts
                    .split(',')
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<Bits>>>()?;
                level.cut_sets.push((rho.trim().parse()?, cuts));
            }
        }
        Ok(BernoullizePlan {
            epsilon: epsilon.unwrap_or_else(|| Dyadic::pow2_neg(3)),
            levels,
        })
    }
}

/// Σ_{i<depth} (p_i - q_i)². Both sequences repeat their last entry.
pub fn kakutani_report(p: &[Dyadic], q: &[Dyadic], depth: usize) -> Result<Dyadic> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::InvalidParameter("empty parameter sequence".into()));
    }
    let at = |s: &[Dyadic], i: usize| s[i.min(s.len() - 1)].clone();
    Ok((0..depth).map(|i| (at(p, i) - at(q, i)).square()).sum())
}
