//! Property tests over random programs: text and bit round trips,
//! determinism, resumption, and dialect soundness.

mod common;

use addbss::encoding::{decode, encode, godel_index, machine_at};
use addbss::machine::{
    label_sequence, parse_program, resume, run_bounded, Dialect, DialectBase, OracleSpec,
    RunOutcome,
};
use addbss::reals::RealValue;
use common::{random_program, rv, GenConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn test_oracle() -> OracleSpec {
    // Membership: length-1 tuples holding an even integer.
    OracleSpec::new("even-singletons", |t: &[RealValue]| {
        t.len() == 1 && t[0].as_integer().is_some_and(|n| (&n % 2u8) == 0u8.into())
    })
}

#[test]
fn emit_parse_round_trip_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let p = random_program(&mut rng, GenConfig::with_oracle());
        let text = p.to_string();
        let back = parse_program(&text).expect("emitted text parses");
        assert_eq!(back, p, "round trip failed for:\n{}", text);
    }
}

#[test]
fn emit_parse_round_trip_on_the_separator() {
    let kappa = addbss::problems::kappa_program();
    assert_eq!(&parse_program(&kappa.to_string()).unwrap(), kappa);
}

#[test]
fn encode_decode_round_trip_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let p = random_program(&mut rng, GenConfig::with_oracle());
        let code = encode(&p).expect("generated constants are 0/1");
        assert_eq!(decode(&code), Some(p.clone()));
        let k = godel_index(&p).unwrap();
        assert_eq!(machine_at(&k.0, Dialect::with_oracle(DialectBase::AddOrd)), p);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let oracle = test_oracle();
    for _ in 0..60 {
        let p = random_program(&mut rng, GenConfig::with_oracle());
        let input = [rv(rng.gen_range(-3..=9))];
        let a = run_bounded(&p, &input, Some(&oracle), 300).unwrap();
        let b = run_bounded(&p, &input, Some(&oracle), 300).unwrap();
        assert_eq!(a, b);
        let la = label_sequence(&p, &input, Some(&oracle), 300).unwrap();
        let lb = label_sequence(&p, &input, Some(&oracle), 300).unwrap();
        assert_eq!(la, lb);
    }
}

#[test]
fn resumption_equals_straight_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let oracle = test_oracle();
    for _ in 0..60 {
        let p = random_program(&mut rng, GenConfig::with_oracle());
        let input = [rv(rng.gen_range(0..=6))];
        let t1 = rng.gen_range(0..=40u64);
        let t2 = rng.gen_range(0..=40u64);
        let straight = run_bounded(&p, &input, Some(&oracle), t1 + t2).unwrap();
        let split = match run_bounded(&p, &input, Some(&oracle), t1).unwrap() {
            RunOutcome::Running(s) => resume(s, &p, Some(&oracle), t2).unwrap(),
            halted => halted,
        };
        assert_eq!(straight, split);
    }
}

#[test]
fn eq_dialect_never_executes_order_or_oracle_tests() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..120 {
        let p = random_program(&mut rng, GenConfig::eq_dialect());
        assert_eq!(p.dialect(), Dialect::ADD_EQ);
        // No oracle attached: if an oracle test executed it would error.
        run_bounded(&p, &[rv(rng.gen_range(0..=5))], None, 200).unwrap();
    }
}

#[test]
fn godel_indices_are_injective() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut seen = std::collections::BTreeMap::new();
    for _ in 0..400 {
        let p = random_program(&mut rng, GenConfig::ord_dialect());
        let k = godel_index(&p).unwrap().0;
        if let Some(prev) = seen.insert(k, p.clone()) {
            assert_eq!(prev, p, "distinct programs share an index");
        }
    }
}

mod value_properties {
    use addbss::reals::{refine_interval, GeneratorId, RealValue};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use std::cmp::Ordering;

    fn rational() -> impl Strategy<Value = BigRational> {
        (-200i64..=200, 1i64..=60)
            .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn generator() -> impl Strategy<Value = GeneratorId> {
        prop_oneof![(1u64..=5).prop_map(GeneratorId::SqrtPrime), Just(GeneratorId::Pi)]
    }

    fn value() -> impl Strategy<Value = RealValue> {
        (rational(), proptest::collection::btree_map(generator(), rational(), 0..3))
            .prop_map(|(c, coeffs)| RealValue::from_parts(c, coeffs))
    }

    proptest! {
        #[test]
        fn combine_round_trips(a in value(), b in value()) {
            prop_assert_eq!(&(&(&a + &b) - &b), &a);
            prop_assert_eq!(&(&(&a - &b) + &b), &a);
        }

        #[test]
        fn sign_is_symbolic_and_antisymmetric(a in value()) {
            prop_assert_eq!((&a - &a).sign(), Ordering::Equal);
            prop_assert_eq!(a.sign(), (-&a).sign().reverse());
            prop_assert_eq!(a.sign() == Ordering::Equal, a.is_zero_value());
        }

        #[test]
        fn text_form_round_trips(a in value()) {
            let text = a.to_string();
            let parsed: RealValue = text.parse().unwrap();
            prop_assert_eq!(parsed, a, "text was {}", text);
        }

        #[test]
        fn refinement_is_nested(g in generator(), depth in 1u32..10) {
            let mut width = BigRational::new(BigInt::from(1), BigInt::from(2));
            let half = width.clone();
            let mut previous = refine_interval(g, &width);
            for _ in 0..depth {
                width *= &half;
                let next = refine_interval(g, &width);
                prop_assert!(next.width() <= width.clone());
                prop_assert!(next.lo >= previous.lo && next.hi <= previous.hi);
                previous = next;
            }
        }
    }
}
