//! Property tests for the Hilbert and tame symbol oracles.
//!
//! Over `Q_2` the oracle is checked against the closed form
//! `(a, b) = (-1)^{ε(u)ε(v) + α·ω(v) + β·ω(u)}` for `a = 2^α u`, `b = 2^β v`.

use std::sync::Arc;

use proptest::prelude::*;
use pseudoperfect::{hilbert2, hilbert_ext, tame_symbol, Field, FieldDescriptor};

fn q2() -> Arc<Field> {
    Field::from_toml(include_str!("../../../fields/q2.field")).unwrap()
}

fn ext(name: &str) -> FieldDescriptor {
    let text = std::fs::read_to_string(format!("{}/../../fields/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    FieldDescriptor::from_toml(&text).unwrap()
}

/// Closed-form 2-adic Hilbert symbol of two nonzero integers.
fn closed_form(a: i64, b: i64) -> i8 {
    let split = |x: i64| (x.trailing_zeros() as i64, (x >> x.trailing_zeros()).rem_euclid(8));
    let eps = |u: i64| (u % 4 == 3) as i64;
    let omega = |u: i64| (u == 3 || u == 5) as i64;
    let ((al, u), (be, v)) = (split(a), split(b));
    if (eps(u) * eps(v) + al * omega(v) + be * omega(u)) % 2 == 0 {
        1
    } else {
        -1
    }
}

fn h(k: &Arc<Field>, a: i64, b: i64) -> i8 {
    hilbert2(&k.int(a as i128), &k.int(b as i128)).unwrap().sign
}

fn nonzero() -> impl Strategy<Value = i64> {
    (1i64..256, any::<bool>()).prop_map(|(n, neg)| if neg { -n } else { n })
}

#[test]
fn closed_form_table() {
    let k = q2();
    for a in -40i64..=40 {
        for b in -40i64..=40 {
            if a != 0 && b != 0 {
                assert_eq!(h(&k, a, b), closed_form(a, b), "({a}, {b})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_closed_form(a in nonzero(), b in nonzero()) {
        prop_assert_eq!(h(&q2(), a, b), closed_form(a, b));
    }

    #[test]
    fn bimultiplicative(a1 in nonzero(), a2 in nonzero(), b in nonzero()) {
        let k = q2();
        prop_assert_eq!(h(&k, a1 * a2, b), h(&k, a1, b) * h(&k, a2, b));
    }

    #[test]
    fn symmetric(a in nonzero(), b in nonzero()) {
        let k = q2();
        prop_assert_eq!(h(&k, a, b), h(&k, b, a));
    }

    #[test]
    fn steinberg_and_negation(a in nonzero()) {
        let k = q2();
        prop_assert_eq!(h(&k, a, -a), 1);
        if a != 1 {
            prop_assert_eq!(h(&k, a, 1 - a), 1);
        }
    }

    #[test]
    fn squares_are_killed(a in nonzero(), c in 1i64..64) {
        prop_assert_eq!(h(&q2(), a, c * c), 1);
    }

    #[test]
    fn witnesses_reverify(a in nonzero(), b in nonzero()) {
        let k = q2();
        let v = hilbert2(&k.int(a as i128), &k.int(b as i128)).unwrap();
        prop_assert_eq!(v.witness.is_some(), v.sign == 1);
        prop_assert!(v.verify_at_double_precision());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Every quadratic extension of a local field splits every quaternion
    /// algebra, so restriction is +1 whatever the value over `Q_2`.
    #[test]
    fn quadratic_restriction_is_trivial(a in -64i64..64, b in -64i64..64, which in 0usize..2) {
        prop_assume!(a != 0 && b != 0);
        let k = q2();
        let l = ext(["q2_sqrt2.field", "q2_sqrt5.field"][which]);
        let v = hilbert_ext(&k.int(a as i128), &k.int(b as i128), &l).unwrap();
        prop_assert_eq!(v.sign, 1);
        prop_assert!(v.verify_at_double_precision());
    }

    /// Tame symbol over `F_2(t)((2))`: `(2^m u, 2^n w) ↦ (-1)^{mn} ū^n w̄^{-m}`.
    #[test]
    fn tame_symbol_is_bimultiplicative(m in 0i64..3, n in 0i64..3, e in 1u32..4, f in 1u32..4) {
        let k = Field::from_toml(include_str!("../../../fields/res_f2t.field")).unwrap();
        let u = k.parse(&format!("(1+t)^{e}")).unwrap();
        let w = k.parse(&format!("t^{f}")).unwrap();
        let a = k.uniformizer_pow(m).mul(&u);
        let b = k.uniformizer_pow(n).mul(&w);
        let got = tame_symbol(&a, &b).unwrap();
        let ub = u.residue().unwrap();
        let wb = w.residue().unwrap();
        let want = ub.pow(n).unwrap().mul(&wb.pow(-m).unwrap());
        prop_assert_eq!(got, want);
    }
}
