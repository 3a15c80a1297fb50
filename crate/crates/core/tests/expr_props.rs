mod common;

use nodalsl::parse_expression;
use proptest::prelude::*;
use rand::SeedableRng;

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn printed_corpus_reparses_to_a_fixed_point() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let src = common::random_expression(&mut rng, 4);
        let e = parse_expression(&src).unwrap_or_else(|err| panic!("{src}: {err}"));
        let printed = e.to_string();
        let again = parse_expression(&printed).unwrap();
        assert_eq!(again, e, "{src} -> {printed}");
        assert_eq!(again.to_string(), printed);
        for x in [0.0, 0.25, 0.5, 0.9, 1.0] {
            match (e.eval(x), again.eval(x)) {
                (Ok(a), Ok(b)) => assert!(same_value(a, b), "{src} at {x}"),
                (Err(a), Err(b)) => assert_eq!(a, b),
                (a, b) => panic!("{src} at {x}: {a:?} vs {b:?}"),
            }
        }
    }
}

proptest! {
    #[test]
    fn multiplication_binds_tighter(a in 0.0..1e3f64, b in 0.0..1e3f64, c in 0.0..1e3f64) {
        let e = parse_expression(&format!("{a:?}+{b:?}*{c:?}")).unwrap();
        prop_assert_eq!(e.eval(0.0).unwrap(), a + b * c);
        let e = parse_expression(&format!("{a:?}-{b:?}/({c:?}+1)")).unwrap();
        prop_assert_eq!(e.eval(0.0).unwrap(), a - b / (c + 1.0));
    }

    #[test]
    fn literals_survive_printing(v in prop::num::f64::POSITIVE | prop::num::f64::NORMAL) {
        prop_assume!(v.is_finite() && v >= 0.0);
        let e = parse_expression(&format!("{v:?}")).unwrap();
        let back = parse_expression(&e.to_string()).unwrap();
        prop_assert_eq!(back.eval(0.0).unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn variable_expressions_round_trip(a in -5.0..5.0f64, b in 0.1..3.0f64, x in 0.0..1.0f64) {
        let src = format!("{a:?}*cos({b:?}*pi*x) - x^2/({b:?}+abs(x))");
        let e = parse_expression(&src).unwrap();
        let back = parse_expression(&e.to_string()).unwrap();
        prop_assert_eq!(e.eval(x).unwrap().to_bits(), back.eval(x).unwrap().to_bits());
    }
}
