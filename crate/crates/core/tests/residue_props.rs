//! Property tests for residue-field arithmetic, p-bases, gcds and the
//! cyclic-algebra splitting search.

use std::sync::Arc;

use proptest::prelude::*;
use pseudoperfect::poly::{Mono, Poly};
use pseudoperfect::residue::{
    artin_schreier_root, cyclic_split_check, pbasis_decompose, pbasis_recompose, pth_root, verify_witness,
    CyclicPAlgebra, ResidueElement, ResidueField, SplitCheck,
};

/// Coefficients of a bivariate polynomial, indexed by `(i, j)` with
/// `i, j < 3`.
fn poly_coeffs() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..5, 9)
}

fn poly(p: u64, cs: &[u64]) -> Poly {
    let terms = cs.iter().enumerate().map(|(k, &c)| (Mono::from_exps(&[(k / 3) as u32, (k % 3) as u32]), c % p));
    Poly::from_terms(p, terms.collect())
}

fn field(p: u64) -> Arc<ResidueField> {
    ResidueField::new(p, vec!["u".into(), "v".into()])
}

fn elem(rf: &Arc<ResidueField>, num: &[u64], den: &[u64]) -> Option<ResidueElement> {
    let d = poly(rf.p(), den);
    (!d.is_zero()).then(|| ResidueElement::new(rf, poly(rf.p(), num), d).unwrap())
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn field_axioms(p in prime(), a in poly_coeffs(), b in poly_coeffs(), c in poly_coeffs(), d in poly_coeffs()) {
        let rf = field(p);
        let one = vec![1, 0, 0, 0, 0, 0, 0, 0, 0];
        let (Some(x), Some(y), Some(z)) = (elem(&rf, &a, &b), elem(&rf, &c, &d), elem(&rf, &d, &one)) else {
            return Ok(());
        };
        prop_assert_eq!(x.add(&y), y.add(&x));
        prop_assert_eq!(x.mul(&y), y.mul(&x));
        prop_assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
        prop_assert!(x.sub(&x).is_zero());
        if !y.is_zero() {
            prop_assert_eq!(x.mul(&y).div(&y).unwrap(), x.clone());
        }
        // Frobenius is additive in characteristic p
        prop_assert_eq!(x.add(&y).frobenius(), x.frobenius().add(&y.frobenius()));
    }

    #[test]
    fn pbasis_round_trip(p in prime(), a in poly_coeffs(), b in poly_coeffs()) {
        let rf = field(p);
        let Some(x) = elem(&rf, &a, &b) else { return Ok(()) };
        let parts = pbasis_decompose(&x);
        prop_assert_eq!(pbasis_recompose(&rf, &parts), x.clone());
        prop_assert_eq!(pth_root(&x.frobenius()).unwrap(), x);
    }

    #[test]
    fn gcd_contains_planted_factor(p in prime(), a in poly_coeffs(), b in poly_coeffs(), c in poly_coeffs()) {
        let (a, b, c) = (poly(p, &a), poly(p, &b), poly(p, &c));
        prop_assume!(!a.is_zero() && !b.is_zero() && !c.is_zero());
        let (ac, bc) = (a.mul(&c), b.mul(&c));
        let g = ac.gcd(&bc);
        prop_assert!(ac.exact_div(&g).is_some(), "gcd {:?} does not divide", g);
        prop_assert!(bc.exact_div(&g).is_some());
        prop_assert!(g.exact_div(&c.monic()).is_some(), "planted factor lost");
        // cofactors are coprime
        let (ca, cb) = (ac.exact_div(&g).unwrap(), bc.exact_div(&g).unwrap());
        prop_assert!(ca.gcd(&cb).is_one());
    }

    #[test]
    fn artin_schreier_roots_solve(p in prime(), a in poly_coeffs()) {
        let rf = field(p);
        let z = ResidueElement::from_poly(&rf, poly(p, &a));
        let c = z.pow(p as i64).unwrap().sub(&z);
        let y = artin_schreier_root(&c).expect("planted root");
        prop_assert_eq!(y.pow(p as i64).unwrap().sub(&y), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Planted splittings are found within the planted degree and every
    /// returned witness checks out.
    #[test]
    fn planted_splittings_are_found(kind in 0usize..3, a in poly_coeffs(), b in poly_coeffs(), w in poly_coeffs()) {
        let p = 2;
        let rf = field(p);
        let w = ResidueElement::from_poly(&rf, poly(p, &w)).add(&ResidueElement::var(&rf, 0));
        let (r, s) = (ResidueElement::from_poly(&rf, poly(p, &a)), ResidueElement::from_poly(&rf, poly(p, &b)));
        let v = match kind {
            0 => r.frobenius(),
            1 => r.mul(&r).add(&r.mul(&s)).add(&w.mul(&s).mul(&s)),
            _ => ResidueElement::var(&rf, 1),
        };
        prop_assume!(!v.is_zero());
        // kind 2 plants w = r^p - r
        let w_alg = if kind == 2 { r.frobenius().sub(&r) } else { w };
        prop_assume!(!w_alg.is_zero());
        let Ok(alg) = CyclicPAlgebra::new(w_alg, v) else { return Ok(()) };
        match cyclic_split_check(&alg, 2) {
            SplitCheck::Split(witness) => prop_assert!(verify_witness(&alg, &witness)),
            SplitCheck::NotSplitWithinBound { .. } => prop_assert!(false, "planted splitting of {} missed", alg),
        }
    }
}
