use cantor_core::slowdown::{
    classify_output, gamma_coding, gamma_decode, slowdown, standard_q, tmap, tmap_ce_monotone,
    tmap_stream, StageSequence, TailShape, ToyPrefixMachine, ToyProgram, DEFAULT_STAGE_BUDGET,
};
use cantor_core::{Bits, Dyadic};
use proptest::prelude::*;

fn prog(code: &str, stage: u64) -> ToyProgram {
    ToyProgram {
        code: code.parse().unwrap(),
        output: Bits::new(),
        halt_stage: stage,
    }
}

fn machine() -> ToyPrefixMachine {
    ToyPrefixMachine::new(vec![prog("00", 1), prog("010", 2), prog("0110", 4), prog("10", 6)]).unwrap()
}

/// Reference simulator: steps the machine stage by stage and writes the
/// output bit by bit, with no shared code.
fn simulate(programs: &[(usize, u64)], x: &str, out_len: usize, budget: u64) -> String {
    // Ω_s as a numerator over 2^32
    let omega = |s: u64| -> u64 {
        programs
            .iter()
            .filter(|(_, h)| *h <= s)
            .map(|(len, _)| 1u64 << (32 - len))
            .sum()
    };
    let mut out = String::new();
    let mut value = 0u64;
    for (i, c) in x.chars().enumerate() {
        if out.len() >= out_len {
            break;
        }
        if c == '1' {
            value += 1u64 << (31 - i);
        }
        let mut s = 0;
        let found = loop {
            if omega(s) >= value {
                break true;
            }
            if s >= budget {
                break false;
            }
            s += 1;
        };
        if !found {
            while out.len() < out_len {
                out.push('1');
            }
            break;
        }
        for _ in 0..s {
            out.push('1');
        }
        out.push('0');
    }
    out.truncate(out_len);
    out
}

#[test]
fn omega_stabilises_at_kraft_sum() {
    let m = machine();
    let seq = m.stage_sequence();
    for s in 0..20 {
        assert!(m.omega_approx(s) <= m.omega_approx(s + 1));
    }
    assert_eq!(m.omega_approx(m.stabilization_stage()), m.kraft_sum());
    assert_eq!(seq.limit(), &Dyadic::from_ratio(11, 4));
    assert!(StageSequence::new(vec![Dyadic::one(), Dyadic::zero()]).is_err());
}

#[test]
fn shapes_below_and_above_omega() {
    let seq = machine().stage_sequence();
    // 0.1010… < 11/16 < 0.11
    let below: Bits = "10".repeat(20).parse().unwrap();
    let above: Bits = format!("11{}", "0".repeat(30)).parse().unwrap();
    let out = slowdown(&seq, &below, 80, DEFAULT_STAGE_BUDGET);
    match classify_output(&out) {
        Some(TailShape::Periodic { k, repeats }) => {
            assert_eq!(k, 6);
            assert!(repeats >= 5);
        }
        other => panic!("{other:?}"),
    }
    let out = slowdown(&seq, &above, 80, DEFAULT_STAGE_BUDGET);
    // t_1 = 6 for 1/2, then 3/4 is never reached
    assert_eq!(out.first_unfound, Some(1));
    assert_eq!(classify_output(&out), Some(TailShape::Ones { len: 80 - 7 }));
}

#[test]
fn slowdown_is_a_tt_functional() {
    let seq = machine().stage_sequence();
    let f = cantor_core::slowdown::slowdown_functional(&seq, DEFAULT_STAGE_BUDGET);
    f.validate(12, cantor_core::Budget::DEFAULT).unwrap();
}

#[test]
fn tmap_is_monotone_on_8_bit_points() {
    let q: Vec<Dyadic> = standard_q(4).into_iter().take(8).collect();
    let mut prev = tmap(&Dyadic::zero(), &q, 8);
    for i in 1..256 {
        let next = tmap(&Dyadic::from_ratio(i, 8), &q, 8);
        assert!(prev.iter().zip(next.iter()).all(|(a, b)| !a || b));
        prev = next;
    }
}

proptest! {
    #[test]
    fn slowdown_matches_simulator(x in "[01]{1,24}", out_len in 1usize..80, budget in 0u64..8) {
        let m = machine();
        let programs: Vec<(usize, u64)> = m.programs().iter().map(|p| (p.code.len(), p.halt_stage)).collect();
        let got = slowdown(&m.stage_sequence(), &x.parse().unwrap(), out_len, budget);
        prop_assert_eq!(got.rendered.to_string(), simulate(&programs, &x, out_len, budget));
    }

    #[test]
    fn gamma_round_trips(
        first in 0u64..5,
        pairs in prop::collection::vec((1u64..6, any::<bool>()), 1..16),
    ) {
        let mut times = vec![first];
        times.extend(pairs.iter().skip(1).map(|(t, _)| *t));
        let c: Bits = pairs.iter().map(|(_, b)| *b).collect();
        let out = gamma_coding(&times, &c, usize::MAX);
        prop_assert_eq!(gamma_decode(&out.rendered).unwrap(), c);
    }

    #[test]
    fn ce_approximations_only_gain_ones(steps in prop::collection::vec(0i64..64, 1..12)) {
        let mut acc = 0;
        let approx: Vec<Dyadic> = steps
            .iter()
            .map(|s| {
                acc = (acc + s).min(1 << 10);
                Dyadic::from_ratio(acc, 10)
            })
            .collect();
        let q = standard_q(5);
        let out = tmap_ce_monotone(&approx, &q, q.len()).unwrap();
        for w in out.windows(2) {
            prop_assert!(w[0].iter().zip(w[1].iter()).all(|(a, b)| !a || b));
        }
    }

    #[test]
    fn stream_agrees_with_points(x in "[01]{1,14}") {
        let x: Bits = x.parse().unwrap();
        let q = standard_q(4);
        let streamed = tmap_stream(&x, &q, q.len());
        // every point in the cylinder shares the streamed prefix
        let lo = x.value();
        let hi = &lo + Dyadic::pow2_neg(x.len() as u64);
        for p in [lo.clone(), (&lo + &hi).half(), hi] {
            if p > lo {
                prop_assert!(streamed.is_prefix_of(&tmap(&p, &q, q.len())));
            }
        }
    }
}
