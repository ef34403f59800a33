//! A fixed battery of property checks across all modules, reported as a
//! deterministic pass/fail table.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernoullize::{build_theta, BernoullizeConfig};
use crate::bits::Bits;
use crate::budget::Budget;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::functional::{induce_exact, registry, reorder_monotone};
use crate::kautz::{partition, transport, Inverse, TransportStatus};
use crate::measure::{
    bernoulli, check_additivity, dirac, lebesgue, level_total, mix, Measure, MeasureRef,
};
use crate::randomness::{
    km, order_inverse, pullback_test, run_martingale, Martingale, MonotoneMachine, OrderFn,
    TestKind, TestPresentation,
};
use crate::slowdown::{gamma_coding, gamma_decode, standard_q, tmap, ToyPrefixMachine, ToyProgram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut s = format!("verify suite, seed {}\n", self.seed);
        for r in &self.rows {
            let mark = if r.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{mark}  {:width$}  {}", r.name, r.detail);
        }
        let passed = self.rows.iter().filter(|r| r.passed).count();
        let _ = writeln!(s, "{passed}/{} passed", self.rows.len());
        s
    }
}

type Check = fn(&mut ChaCha8Rng) -> Result<String>;

const CHECKS: &[(&str, Check)] = &[
    ("dyadic-text-round-trip", dyadic_round_trip),
    ("measure-additivity", additivity),
    ("induced-exactness", induced_exactness),
    ("pullback-conservation", pullback),
    ("kautz-partition", kautz_partition),
    ("kautz-round-trip", kautz_round_trip),
    ("bernoullize", bernoullize),
    ("slowdown-shapes", slowdown_shapes),
    ("gamma-round-trip", gamma_round_trip),
    ("tmap-monotone", tmap_monotone),
    ("km-monotone", km_monotone),
    ("martingale-fairness", martingale_fairness),
    ("order-inverse", order_galois),
];

/// Runs every check with its own generator derived from `seed`.
pub fn run_suite(seed: u64) -> SuiteReport {
    let rows = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            match check(&mut rng) {
                Ok(detail) => SuiteRow {
                    name,
                    passed: true,
                    detail,
                },
                Err(e) => SuiteRow {
                    name,
                    passed: false,
                    detail: e.to_string(),
                },
            }
        })
        .collect();
    SuiteReport { seed, rows }
}

fn fail(detail: String) -> Error {
    Error::InvariantViolation(detail)
}

fn quarter() -> MeasureRef {
    bernoulli(vec![Dyadic::from_ratio(1, 2)]).expect("1/4 is a valid parameter")
}

fn exact_measures() -> Vec<(&'static str, MeasureRef)> {
    vec![
        ("lebesgue", lebesgue()),
        ("bernoulli(1/4)", quarter()),
        ("mix(dirac(0^ω))", mix(dirac(Bits::new(), "0".parse().unwrap()).unwrap())),
    ]
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Bits {
    (0..len).map(|_| rng.gen::<bool>()).collect()
}

fn dyadic_round_trip(rng: &mut ChaCha8Rng) -> Result<String> {
    for _ in 0..500 {
        let v = Dyadic::from_ratio(rng.gen_range(-1_000_000..1_000_000), rng.gen_range(0..40));
        let back: Dyadic = v.to_string().parse()?;
        if back != v {
            return Err(fail(format!("{v} reparsed as {back}")));
        }
    }
    Ok("500 values".into())
}

fn additivity(_: &mut ChaCha8Rng) -> Result<String> {
    for (_, mu) in exact_measures() {
        check_additivity(&*mu, 10, 0)?;
    }
    Ok("3 measures to depth 10".into())
}

fn induced_exactness(_: &mut ChaCha8Rng) -> Result<String> {
    let budget = Budget::DEFAULT;
    let reordered = reorder_monotone(&registry("drop-first-complement").unwrap(), 6, budget)?;
    let functionals = [
        registry("identity").unwrap(),
        registry("drop-first-bit").unwrap(),
        registry("adaptive-scan").unwrap(),
        reordered,
    ];
    for (_, mu) in exact_measures() {
        for f in &functionals {
            let induced = induce_exact(f, mu.clone(), budget)?;
            check_additivity(&*induced, 6, 0)?;
            if level_total(&*induced, 6)? != Dyadic::one() {
                return Err(fail(format!("{}: total mass is not 1", f.name())));
            }
        }
    }
    Ok("4 functionals x 3 measures to depth 6".into())
}

fn pullback(_: &mut ChaCha8Rng) -> Result<String> {
    let comps = [
        (1, vec!["0"]),
        (2, vec!["00", "11"]),
        (3, vec!["000", "101", "110"]),
    ];
    let test = TestPresentation::new(
        TestKind::MartinLof,
        comps
            .iter()
            .map(|(i, ss)| (*i, ss.iter().map(|s| s.parse().unwrap()).collect()))
            .collect(),
    );
    let mut n = 0;
    for (_, mu) in exact_measures() {
        for name in ["identity", "drop-first-bit", "complement", "swap-first-two"] {
            pullback_test(&test, &registry(name).unwrap(), mu.clone(), Budget::DEFAULT)?;
            n += 1;
        }
    }
    Ok(format!("{n} pullbacks conserve mass"))
}

fn kautz_partition(_: &mut ChaCha8Rng) -> Result<String> {
    let mu = quarter();
    for n in 0..8 {
        for s in Bits::all(n) {
            let i = partition(&*mu, &s, 0)?;
            let (l, r) = (partition(&*mu, &s.child(false), 0)?, partition(&*mu, &s.child(true), 0)?);
            if i.width() != mu.mass(&s)? || l.lo() != i.lo() || l.hi() != r.lo() || r.hi() != i.hi() {
                return Err(fail(format!("partition of {s} is not nested exactly")));
            }
        }
    }
    Ok("bernoulli(1/4) to depth 8".into())
}

fn kautz_round_trip(rng: &mut ChaCha8Rng) -> Result<String> {
    let mu = quarter();
    let inv = Inverse::new(&*mu, 12)?;
    let mut hits = 0;
    for _ in 0..200 {
        let x = random_bits(rng, 96);
        let y = transport(&*mu, &x, 48, 256)?;
        if y.status != TransportStatus::Complete {
            hits += 1;
            continue;
        }
        let back = inv.run(&y.output, 16, 256)?;
        if back.status != TransportStatus::Complete {
            hits += 1;
        } else if back.output != x.prefix(16) {
            return Err(fail(format!("round trip of {x} gave {}", back.output)));
        }
    }
    Ok(format!("200 samples, {hits} endpoint hits"))
}

fn bernoullize(_: &mut ChaCha8Rng) -> Result<String> {
    let cases: [(&str, MeasureRef, usize); 2] = [("lebesgue", lebesgue(), 10), ("bernoulli(1/4)", quarter(), 1)];
    for (name, mu, depth) in cases {
        let (plan, theta) = build_theta(&*mu, &BernoullizeConfig::new(depth))?;
        plan.check_invariants()?;
        let target = plan.target_measure()?;
        let induced = induce_exact(&theta, mu, Budget::DEFAULT)?;
        for s in Bits::all(depth) {
            if induced.mass(&s)? != target.mass(&s)? {
                return Err(fail(format!("{name}: induced mass differs at {s}")));
            }
        }
    }
    Ok("lebesgue depth 10, bernoulli(1/4) depth 1".into())
}

fn toy_machine() -> ToyPrefixMachine {
    let prog = |c: &str, s| ToyProgram {
        code: c.parse().unwrap(),
        output: Bits::new(),
        halt_stage: s,
    };
    ToyPrefixMachine::new(vec![prog("00", 1), prog("010", 2), prog("0110", 4), prog("10", 6)])
        .expect("toy machine is prefix-free")
}

fn slowdown_shapes(_: &mut ChaCha8Rng) -> Result<String> {
    use crate::slowdown::{classify_output, slowdown, TailShape, DEFAULT_STAGE_BUDGET};
    let seq = toy_machine().stage_sequence();
    let below = slowdown(&seq, &"0101".repeat(10).parse()?, 60, DEFAULT_STAGE_BUDGET);
    let above = slowdown(&seq, &"11".repeat(10).parse()?, 60, DEFAULT_STAGE_BUDGET);
    match (classify_output(&below), classify_output(&above)) {
        (Some(TailShape::Periodic { repeats, .. }), Some(TailShape::Ones { .. })) if repeats >= 3 => {
            Ok("periodic below, ones above".into())
        }
        other => Err(fail(format!("unexpected shapes {other:?}"))),
    }
}

fn gamma_round_trip(rng: &mut ChaCha8Rng) -> Result<String> {
    for _ in 0..100 {
        let k = rng.gen_range(1..=16);
        let times: Vec<u64> = (0..k).map(|_| rng.gen_range(1..6)).collect();
        let c = random_bits(rng, k);
        let out = gamma_coding(&times, &c, usize::MAX);
        if gamma_decode(&out.rendered)? != c {
            return Err(fail(format!("{c} did not survive the round trip")));
        }
    }
    Ok("100 pairs".into())
}

fn tmap_monotone(_: &mut ChaCha8Rng) -> Result<String> {
    let q: Vec<Dyadic> = standard_q(3).into_iter().take(8).collect();
    let outs: Vec<Bits> = (0..256u64)
        .map(|i| tmap(&Dyadic::from_ratio(i as i64, 8), &q, 8))
        .collect();
    for w in outs.windows(2) {
        if w[0].iter().zip(w[1].iter()).any(|(a, b)| a && !b) {
            return Err(fail(format!("{} then {}", w[0], w[1])));
        }
    }
    Ok("256 points".into())
}

fn km_monotone(_: &mut ChaCha8Rng) -> Result<String> {
    let m = MonotoneMachine::new(
        [("0", "00"), ("1", "11"), ("01", "0011")]
            .iter()
            .map(|(p, o)| (p.parse().unwrap(), o.parse().unwrap()))
            .collect(),
    )?;
    for (_, out) in m.pairs() {
        for n in 0..out.len() {
            let (a, b) = (km(&m, &out.prefix(n), 8), km(&m, &out.prefix(n + 1), 8));
            if a > b {
                return Err(fail(format!("Km drops along {out}")));
            }
        }
    }
    Ok("3 programs".into())
}

fn martingale_fairness(_: &mut ChaCha8Rng) -> Result<String> {
    let ms = [
        Martingale::constant(lebesgue(), Dyadic::one()),
        Martingale::lambda_doubling(),
        Martingale::bernoulli_quarter_fair(),
    ];
    for m in &ms {
        m.check_fair(10, Budget::DEFAULT)?;
    }
    run_martingale(&ms[1], &"0000".parse()?)?;
    Ok("3 martingales to depth 10".into())
}

fn order_galois(_: &mut ChaCha8Rng) -> Result<String> {
    let g = OrderFn::new("isqrt", Arc::new(|k: u64| k.isqrt()));
    for n in 0..30 {
        let k = order_inverse(&g, n, 10_000)?;
        if g.at(k) < n || (k > 0 && g.at(k - 1) >= n) {
            return Err(fail(format!("inverse of {n} is {k}")));
        }
    }
    Ok("isqrt for n < 30".into())
}
