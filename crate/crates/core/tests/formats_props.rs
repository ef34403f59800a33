use cantor_core::formats::{parse_tt, print_tt, resolve_functional, MeasureSpec};
use cantor_core::functional::REGISTRY_NAMES;
use cantor_core::{Bits, Budget};

const SPECS: &[&str] = &[
    r#"{"kind":"lebesgue"}"#,
    r#"{"kind":"bernoulli","p":["1/2^2","3/2^3"]}"#,
    r#"{"kind":"dirac","prefix":"01","tail":"10"}"#,
    r#"{"kind":"mix","inner":{"kind":"dirac","tail":"0"}}"#,
    r#"{"kind":"bernoulli_approx","num":1,"den":3,"levels":10}"#,
    r#"{"kind":"induced","functional":"swap-first-two","base":{"kind":"bernoulli","p":["1/4"]}}"#,
];

#[test]
fn measure_specs_reload_identically() {
    for text in SPECS {
        let spec = MeasureSpec::from_json(text).unwrap();
        let again = MeasureSpec::from_json(&spec.to_json()).unwrap();
        let (a, b) = (
            spec.build(None, Budget::DEFAULT).unwrap(),
            again.build(None, Budget::DEFAULT).unwrap(),
        );
        for n in 0..=8 {
            for s in Bits::all(n) {
                assert_eq!(a.mass(&s).unwrap(), b.mass(&s).unwrap(), "{text} at {s}");
            }
        }
    }
}

#[test]
fn functionals_reload_identically() {
    for name in REGISTRY_NAMES {
        let f = resolve_functional(name, None).unwrap();
        let levels = (0..=6).take_while(|&n| f.phi(n).is_some()).last().unwrap();
        let g = parse_tt(&print_tt(&f, levels, Budget::DEFAULT).unwrap()).unwrap();
        for n in 0..=levels {
            assert_eq!(
                f.level_table(n, Budget::DEFAULT).unwrap(),
                g.level_table(n, Budget::DEFAULT).unwrap(),
                "{name} level {n}"
            );
        }
    }
    assert!(resolve_functional("no-such-functional", None).is_err());
}
