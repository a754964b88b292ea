//! Property tests for symbol rewriting: normal forms, traces and certificates.

use std::sync::Arc;

use proptest::prelude::*;
use pseudoperfect::pseudo_perfect::PseudoBasis;
use pseudoperfect::symbols::{
    kato_rewrite, normalize, normalize_traced, replay, split_by_pseudoperfect, MilnorSymbol, SplitOptions,
};
use pseudoperfect::{hilbert2, Field};

fn load(name: &str) -> Arc<Field> {
    let text = std::fs::read_to_string(format!("{}/../../fields/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    Field::from_toml(&text).unwrap()
}

/// Value of an arity-2 symbol over `Q_2` under the Hilbert symbol.
fn hilbert_value(s: &MilnorSymbol) -> i8 {
    s.terms().iter().fold(1, |acc, t| {
        let v = hilbert2(&t.entries[0], &t.entries[1]).unwrap().sign;
        if t.coeff % 2 == 1 {
            acc * v
        } else {
            acc
        }
    })
}

fn nonzero() -> impl Strategy<Value = i64> {
    (1i64..200, any::<bool>()).prop_map(|(n, neg)| if neg { -n } else { n })
}

fn q2_symbol(k: &Arc<Field>, entries: &[(i64, i64)]) -> MilnorSymbol {
    let text: Vec<String> = entries.iter().map(|(a, b)| format!("{{{a},{b}}}")).collect();
    MilnorSymbol::parse(k, &text.join(" + ")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_idempotent(pairs in prop::collection::vec((nonzero(), nonzero()), 1..4)) {
        let k = load("q2.field");
        let n = normalize(&q2_symbol(&k, &pairs)).unwrap();
        let nn = normalize(&n).unwrap();
        prop_assert!(n.agrees_with(&nn), "{} vs {}", n, nn);
    }

    #[test]
    fn normalize_preserves_hilbert_value(pairs in prop::collection::vec((nonzero(), nonzero()), 1..4)) {
        let k = load("q2.field");
        let s = q2_symbol(&k, &pairs);
        prop_assert_eq!(hilbert_value(&normalize(&s).unwrap()), hilbert_value(&s));
    }

    #[test]
    fn normalize_trace_replays(pairs in prop::collection::vec((nonzero(), nonzero()), 1..4), odd in any::<bool>()) {
        let k = load(if odd { "q3.field" } else { "q2.field" });
        let s = q2_symbol(&k, &pairs);
        let (n, steps) = normalize_traced(&s).unwrap();
        prop_assert!(replay(&steps).is_ok());
        if let Some(last) = steps.last() {
            prop_assert!(last.after.agrees_with(&n));
            prop_assert!(steps[0].before.agrees_with(&s));
        }
    }

    #[test]
    fn kato_rewrite_preserves_hilbert_value(i in 1i64..6, j in 1i64..6, u in 0i64..64, w in 0i64..64) {
        let k = load("q2.field");
        let x = k.int((2 * u + 1) as i128).mul_uniformizer_pow(i);
        let y = k.int((2 * w + 1) as i128).mul_uniformizer_pow(j);
        let one = k.one();
        let (s, cert) = kato_rewrite(&x, &y).unwrap();
        prop_assert!(cert.level >= i + j);
        let lhs = hilbert2(&one.add(&x), &one.add(&y)).unwrap().sign;
        prop_assert_eq!(hilbert_value(&s), lhs);
    }

    /// Over `Q_2` every symbol dies in `Q_2(√2)`, and the certificate replays.
    #[test]
    fn split_certificates_replay_and_trivialize(a in nonzero(), b in nonzero()) {
        let k = load("q2.field");
        let s = q2_symbol(&k, &[(a, b)]);
        let basis = PseudoBasis::parse(&k, "2", 1).unwrap();
        let cert = split_by_pseudoperfect(&s, &basis, &SplitOptions { split_bound: 2 }).unwrap();
        prop_assert!(cert.replay().is_ok());
        prop_assert!(cert.outcome.is_trivialized(), "{}: {}", s, cert.outcome);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Certificates over an imperfect residue field replay step by step
    /// whatever the verdict.
    #[test]
    fn imperfect_certificates_replay(e in 1u32..3, f in 1u32..3, c in 0usize..3) {
        let k = load("res_f2ab.field");
        let second = ["1+b", "b", "1+a*b"][c];
        let s = MilnorSymbol::parse(&k, &format!("{{(1+a)^{e}, ({second})^{f}}}")).unwrap();
        let basis = PseudoBasis::parse(&k, "a,b,2", 1).unwrap();
        let cert = split_by_pseudoperfect(&s, &basis, &SplitOptions { split_bound: 1 }).unwrap();
        prop_assert!(cert.replay().is_ok(), "{}", s);
    }
}
