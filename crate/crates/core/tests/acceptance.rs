//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudoperfect::oracle::{hilbert2, hilbert_ext};
use pseudoperfect::pseudo_perfect::bounds;
use pseudoperfect::residue::{
    char2_counterexample_search, cyclic_split_check, parse_residue, pbasis_decompose, pbasis_recompose, Char2Outcome,
    CyclicPAlgebra, ResidueElement, ResidueField, SplitCheck,
};
use pseudoperfect::symbols::{
    kato_rewrite, split_by_pseudoperfect, sum_pth_reduce, unit_expand, MilnorSymbol, Outcome, SplitOptions,
};
use pseudoperfect::verify::{random_residue, Sampler};
use pseudoperfect::{pth_root_1unit, CdvfElement, Field, FieldDescriptor, PseudoBasis};

type Check = Result<String, String>;

fn fields_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fields")
}

fn descriptor(name: &str) -> FieldDescriptor {
    let path = fields_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    FieldDescriptor::from_toml(&text).unwrap()
}

fn field(name: &str) -> Arc<Field> {
    Field::new(descriptor(name)).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// A random element of `2^i·Z_2^×`, `1 ≤ i ≤ 5`, as an exact integer.
fn random_2z2(q2: &Arc<Field>, rng: &mut ChaCha8Rng) -> CdvfElement {
    let i = rng.gen_range(1..=5);
    let odd = 2 * rng.gen_range(0i128..1 << 20) + 1;
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    q2.int(sign * (odd << i))
}

fn random_q2_nonzero(q2: &Arc<Field>, rng: &mut ChaCha8Rng) -> CdvfElement {
    let v = rng.gen_range(0..=3);
    let odd = 2 * rng.gen_range(0i128..1 << 16) + 1;
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    q2.int(sign * (odd << v))
}

fn criterion_1() -> Check {
    let q2 = field("q2.field");
    ensure(q2.precision() >= 10, || format!("precision {} < 10", q2.precision()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let one = q2.one();
    let n = 1000;
    for k in 0..n {
        let x = random_2z2(&q2, &mut rng);
        let y = random_2z2(&q2, &mut rng);
        let (sym, _) = kato_rewrite(&x, &y).map_err(|e| e.to_string())?;
        let lhs = hilbert2(&one.add(&x), &one.add(&y)).map_err(|e| e.to_string())?;
        let t = &sym.terms()[0];
        let rhs = hilbert2(&t.entries[0], &t.entries[1]).map_err(|e| e.to_string())?;
        ensure(lhs.sign == rhs.sign, || format!("sample {k}: x = {x}, y = {y}: {} vs {}", lhs.sign, rhs.sign))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{n}/{n} agreements in {took:.2?}"))
}

fn criterion_2() -> Check {
    let q2 = field("q2.field");
    let l = descriptor("q2_sqrt2.field");
    let basis = PseudoBasis::standard(&q2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 500;
    let mut done = 0;
    while done < n {
        let a = random_q2_nonzero(&q2, &mut rng);
        let b = random_q2_nonzero(&q2, &mut rng);
        if hilbert2(&a, &b).map_err(|e| e.to_string())?.sign == 1 {
            continue;
        }
        let ext = hilbert_ext(&a, &b, &l).map_err(|e| e.to_string())?;
        ensure(ext.sign == 1 && ext.verify_at_double_precision(), || format!("{{{a}, {b}}} stays nonsplit"))?;
        let sym = MilnorSymbol::from_entries(vec![a.clone(), b.clone()]).unwrap();
        let cert = split_by_pseudoperfect(&sym, &basis, &SplitOptions::default()).map_err(|e| e.to_string())?;
        ensure(cert.outcome.is_trivialized(), || format!("{{{a}, {b}}}: {}", cert.outcome))?;
        cert.replay().map_err(|e| format!("{{{a}, {b}}}: replay: {e}"))?;
        done += 1;
    }
    Ok(format!("{n}/{n} nonsplit symbols split over Q_2(√2) and trivialized"))
}

fn criterion_3() -> Check {
    let q2 = field("q2.field");
    let three = q2.int(3);
    ensure(three.eq_at_precision(&q2.int(1 + 1 + 1)), || "3 is not 1 + 1 + 1".into())?;
    let h = hilbert2(&three, &three).map_err(|e| e.to_string())?;
    ensure(h.sign == -1, || format!("hilbert2(3, 3) = {}", h.sign))?;
    let sym = MilnorSymbol::parse(&q2, "{3, 3}").unwrap();
    let cert = split_by_pseudoperfect(&sym, &PseudoBasis::standard(&q2, 0), &SplitOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(!cert.outcome.is_trivialized(), || "claimed Trivialized over K".into())?;
    let level = cert.tame.as_ref().map(|t| t.parts.level);
    ensure(level == Some(2), || format!("tame level {level:?}, expected e' = 2"))?;
    Ok(format!("hilbert2 = -1; over K: {} at tame level 2", cert.outcome))
}

fn criterion_4() -> Check {
    let mut lines = Vec::new();
    for (name, seed) in [("q2.field", 41), ("q3.field", 42), ("q5.field", 43)] {
        let k = field(name);
        let mut s = Sampler::new(&k, seed);
        let n = k.e_prime().floor().to_integer() + 1;
        let p = k.p() as i64;
        for i in 0..200 {
            let u = s.one_unit(n);
            let r = pth_root_1unit(&u, n).map_err(|e| format!("{name} sample {i}: {e}"))?;
            let v = r.pow(p).unwrap().sub(&u).vlow();
            ensure(v >= k.precision(), || format!("{name} sample {i}: v(r^p - u) = {v}"))?;
        }
        lines.push(format!("p = {p}: 200/200"));
    }
    Ok(lines.join(", "))
}

fn criterion_5() -> Check {
    for (name, seed) in [("q2.field", 51), ("q3.field", 52), ("res_f2t.field", 53)] {
        let k = field(name);
        let p = k.p() as i64;
        let mut s = Sampler::new(&k, seed);
        for i in 0..500 {
            let count = s.rng().gen_range(1..=3);
            let (gamma, bs) = s.sum_of_pth_powers(count);
            let (c, m) = sum_pth_reduce(&bs).map_err(|e| format!("{name} sample {i}: {e}"))?;
            let back = c.pow(p).unwrap().mul(&k.one().add(&m));
            ensure(back.eq_at_precision(&gamma), || format!("{name} sample {i}: c^p(1+m) != gamma"))?;
            ensure(m.vlow() >= k.e(), || format!("{name} sample {i}: v(m) = {}", m.vlow()))?;

            let alpha = s.unit();
            let ex = unit_expand(&alpha).map_err(|e| format!("{name} sample {i}: {e}"))?;
            let back = ex.sum().unwrap().mul(&ex.residual);
            ensure(back.eq_at_precision(&alpha), || format!("{name} sample {i}: unit_expand of {alpha}"))?;
        }
    }
    Ok("500/500 per field over Q_2, Q_3, F_2(t)".into())
}

fn criterion_6() -> Check {
    for bound in 0..=3 {
        let start = Instant::now();
        let out = char2_counterexample_search(bound).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure(matches!(out, Char2Outcome::NoneWithinBound { .. }), || format!("bound {bound}: {out:?}"))?;
        ensure(took < Duration::from_secs(600), || format!("bound {bound} took {took:?}"))?;
    }
    let rf = ResidueField::new(2, vec!["u".into(), "v".into()]);
    let w = parse_residue(&rf, "u*v*(1+u)^(-2)*(1+v)^(-2)").unwrap();
    let v = parse_residue(&rf, "u").unwrap();
    let alg = CyclicPAlgebra::new(w, v).unwrap();
    let check = cyclic_split_check(&alg, 4);
    ensure(matches!(check, SplitCheck::NotSplitWithinBound { bound: 4 }), || format!("{alg}: {check:?}"))?;

    let k = field("res_f2ab.field");
    let sym = MilnorSymbol::parse(&k, "{1+a, 1+b}").unwrap();
    let basis = PseudoBasis::parse(&k, "a,b,2", 1).unwrap();
    let cert = split_by_pseudoperfect(&sym, &basis, &SplitOptions::default()).map_err(|e| e.to_string())?;
    cert.replay().map_err(|e| e.to_string())?;
    let Outcome::Obstruction(classes) = &cert.outcome else { return Err(cert.outcome.to_string()) };
    let expected = "[√a√b(1+√a)^{-2}(1+√b)^{-2}, √a)";
    ensure(classes.iter().any(|c| c.to_string() == expected), || format!("got {}", cert.outcome))?;
    Ok(format!("NoneWithinBound for bounds 0-3; {alg} not split at bound 4; {}", cert.outcome))
}

fn criterion_7() -> Check {
    let mut lines = Vec::new();
    for (name, seed) in [("q2.field", 71), ("res_f2t.field", 72)] {
        let k = field(name);
        let basis = PseudoBasis::standard(&k, 1);
        let mut s = Sampler::new(&k, seed);
        s.degree = 1;
        for i in 0..200 {
            let entries: Vec<CdvfElement> = (0..3)
                .map(|_| {
                    let count = s.rng().gen_range(2..=3);
                    s.sum_of_pth_powers(count).0
                })
                .collect();
            let sym = MilnorSymbol::from_entries(entries).unwrap();
            let cert = split_by_pseudoperfect(&sym, &basis, &SplitOptions::default())
                .map_err(|e| format!("{name} sample {i} {sym}: {e}"))?;
            ensure(cert.outcome.is_trivialized(), || format!("{name} sample {i} {sym}: {}", cert.outcome))?;
        }
        lines.push(format!("{name}: 200/200"));
    }
    Ok(lines.join(", "))
}

fn criterion_8() -> Check {
    let q2 = bounds(&descriptor("q2.field"), 1, true).map_err(|e| e.to_string())?;
    let got = (q2.pseudo_rank, q2.br_p_dim_upper, q2.semiglobal_br_upper, q2.semiglobal_gssd2_upper);
    ensure(got == (1, 1, Some(2), Some(4)), || format!("Q_2: {got:?}"))?;
    let f3t = bounds(&descriptor("res_f3t.field"), 1, true).map_err(|e| e.to_string())?;
    let got = (f3t.pseudo_rank, f3t.br_p_dim_upper, f3t.semiglobal_br_upper, f3t.semiglobal_gssd2_upper);
    ensure(got == (2, 2, Some(3), Some(6)), || format!("F_3(t): {got:?}"))?;
    ensure(f3t.br_p_dim_lower == 1, || format!("F_3(t) lower bound {}", f3t.br_p_dim_lower))?;
    Ok("Q_2 {1, 1, 2, 4}; F_3(t) {2, 2, 3, 6}".into())
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let fields = [
        ResidueField::new(2, vec!["t".into()]),
        ResidueField::new(3, vec!["t".into()]),
        ResidueField::new(2, vec!["u".into(), "v".into()]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for rf in &fields {
        for i in 0..1000 {
            let x = random_residue(rf, &mut rng, 3, true);
            let parts = pbasis_decompose(&x);
            ensure(pbasis_recompose(rf, &parts) == x, || format!("round trip of {x}"))?;
            // κ^p-linearity: coefficients of c^p·x + y are c·a_s(x) + a_s(y)
            let c = random_residue(rf, &mut rng, 2, true);
            let y = random_residue(rf, &mut rng, 3, true);
            let z = c.frobenius().mul(&x).add(&y);
            let (dx, dy, dz) = (parts, pbasis_decompose(&y), pbasis_decompose(&z));
            let zero = ResidueElement::zero(rf);
            let keys: std::collections::BTreeSet<_> = dx.keys().chain(dy.keys()).chain(dz.keys()).collect();
            for s in keys {
                let want = c.mul(dx.get(s).unwrap_or(&zero)).add(dy.get(s).unwrap_or(&zero));
                let got = dz.get(s).unwrap_or(&zero);
                ensure(*got == want, || format!("sample {i}: linearity fails at {s:?} for {x}"))?;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("3000 round trips and linearity checks in {took:.2?}"))
}

fn main() {
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {n}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
