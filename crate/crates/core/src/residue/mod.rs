//! Rational function fields `F_p(t_1..t_n)`: p-basis decomposition, p-th
//! roots, Artin–Schreier equations and bounded splitting checks for cyclic
//! p-algebras.

mod artin_schreier;
mod linear;
mod norm_search;

pub use artin_schreier::{
    artin_schreier_root, artin_schreier_solve, cyclic_split_check, solve_additive, solve_additive_exact, verify_witness,
    CyclicPAlgebra, SplitCheck, SplitWitness,
};
pub use norm_search::{
    char2_counterexample_search, char2_counterexample_search_with_budget, char2_uv_field, Char2Outcome, NormEquation,
    NormSearchOutcome, DEFAULT_NODE_BUDGET,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{is_radical, Algebra, Expr};
use crate::poly::{inv_mod, Mono, Poly, MAX_VARS};

/// The field `F_p(vars)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResidueField {
    p: u64,
    vars: Vec<String>,
}

impl ResidueField {
    pub fn new(p: u64, vars: Vec<String>) -> Arc<ResidueField> {
        assert!(vars.len() <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        Arc::new(ResidueField { p, vars })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }
}

/// Parse an element of `field`.
pub fn parse_residue(field: &Arc<ResidueField>, s: &str) -> Result<ResidueElement> {
    Expr::parse(s)?.eval(&ResidueAlgebra(field.clone()))
}

struct ResidueAlgebra(Arc<ResidueField>);

impl Algebra for ResidueAlgebra {
    type Value = ResidueElement;
    fn int(&self, n: i128) -> Result<ResidueElement> {
        Ok(ResidueElement::constant(&self.0, n))
    }
    fn name(&self, name: &str) -> Result<ResidueElement> {
        let i = self
            .0
            .var_index(name)
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("unknown variable {name}") })?;
        Ok(ResidueElement::var(&self.0, i))
    }
    fn add(&self, a: &ResidueElement, b: &ResidueElement) -> Result<ResidueElement> {
        Ok(a.add(b))
    }
    fn sub(&self, a: &ResidueElement, b: &ResidueElement) -> Result<ResidueElement> {
        Ok(a.sub(b))
    }
    fn mul(&self, a: &ResidueElement, b: &ResidueElement) -> Result<ResidueElement> {
        Ok(a.mul(b))
    }
    fn div(&self, a: &ResidueElement, b: &ResidueElement) -> Result<ResidueElement> {
        a.div(b)
    }
    fn neg(&self, a: &ResidueElement) -> Result<ResidueElement> {
        Ok(a.neg())
    }
    fn pow(&self, a: &ResidueElement, k: i64) -> Result<ResidueElement> {
        a.pow(k)
    }
}

/// A rational function over `F_p`, kept as a reduced fraction with monic
/// denominator, so structural equality is field equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResidueElement {
    field: Arc<ResidueField>,
    num: Poly,
    den: Poly,
}

impl ResidueElement {
    pub fn new(field: &Arc<ResidueField>, num: Poly, den: Poly) -> Result<ResidueElement> {
        if den.is_zero() {
            return Err(Error::Precondition("zero denominator".into()));
        }
        let p = field.p;
        debug_assert!(num.modulus() == p && den.modulus() == p);
        if num.is_zero() {
            return Ok(ResidueElement::zero(field));
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g).unwrap(), den.exact_div(&g).unwrap())
        };
        let lc = den.leading().unwrap().1;
        if lc != 1 {
            let inv = inv_mod(lc, p).unwrap();
            num = num.scale(inv);
            den = den.scale(inv);
        }
        Ok(ResidueElement { field: field.clone(), num, den })
    }

    pub fn from_poly(field: &Arc<ResidueField>, num: Poly) -> ResidueElement {
        ResidueElement { field: field.clone(), num, den: Poly::one(field.p) }
    }

    pub fn zero(field: &Arc<ResidueField>) -> ResidueElement {
        ResidueElement::from_poly(field, Poly::zero(field.p))
    }

    pub fn one(field: &Arc<ResidueField>) -> ResidueElement {
        ResidueElement::constant(field, 1)
    }

    pub fn constant(field: &Arc<ResidueField>, c: i128) -> ResidueElement {
        ResidueElement::from_poly(field, Poly::constant(field.p, c))
    }

    pub fn var(field: &Arc<ResidueField>, i: usize) -> ResidueElement {
        ResidueElement::from_poly(field, Poly::var(field.p, i))
    }

    pub fn field(&self) -> &Arc<ResidueField> {
        &self.field
    }

    pub fn p(&self) -> u64 {
        self.field.p
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    fn check(&self, o: &ResidueElement) {
        assert!(Arc::ptr_eq(&self.field, &o.field) || self.field == o.field, "residue field mismatch");
    }

    /// A fraction already in lowest terms; only the denominator is made
    /// monic.
    fn from_coprime(field: &Arc<ResidueField>, mut num: Poly, mut den: Poly) -> ResidueElement {
        let lc = den.leading().expect("nonzero denominator").1;
        if lc != 1 {
            let inv = inv_mod(lc, field.p).unwrap();
            num = num.scale(inv);
            den = den.scale(inv);
        }
        if num.is_zero() {
            den = Poly::one(field.p);
        }
        ResidueElement { field: field.clone(), num, den }
    }

    pub fn add(&self, o: &ResidueElement) -> ResidueElement {
        self.check(o);
        if self.den == o.den {
            return ResidueElement::new(&self.field, self.num.add(&o.num), self.den.clone()).unwrap();
        }
        // Henrici: only the common part of the denominators can cancel
        let g = self.den.gcd(&o.den);
        if g.is_one() {
            let num = self.num.mul(&o.den).add(&o.num.mul(&self.den));
            return ResidueElement::from_coprime(&self.field, num, self.den.mul(&o.den));
        }
        let b = self.den.exact_div(&g).unwrap();
        let d = o.den.exact_div(&g).unwrap();
        let num = self.num.mul(&d).add(&o.num.mul(&b));
        let g2 = num.gcd(&g);
        let den = b.mul(&o.den.exact_div(&g2).unwrap());
        ResidueElement::from_coprime(&self.field, num.exact_div(&g2).unwrap(), den)
    }

    pub fn neg(&self) -> ResidueElement {
        ResidueElement { field: self.field.clone(), num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &ResidueElement) -> ResidueElement {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &ResidueElement) -> ResidueElement {
        self.check(o);
        // cross-cancel before multiplying to keep the gcd work small
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let n1 = self.num.exact_div(&g1).unwrap();
        let d2 = o.den.exact_div(&g1).unwrap();
        let n2 = o.num.exact_div(&g2).unwrap();
        let d1 = self.den.exact_div(&g2).unwrap();
        ResidueElement::from_coprime(&self.field, n1.mul(&n2), d1.mul(&d2))
    }

    pub fn inv(&self) -> Result<ResidueElement> {
        if self.is_zero() {
            return Err(Error::Precondition("division by zero in the residue field".into()));
        }
        ResidueElement::new(&self.field, self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &ResidueElement) -> Result<ResidueElement> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, k: i64) -> Result<ResidueElement> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let k = k.unsigned_abs() as u32;
        Ok(ResidueElement { field: self.field.clone(), num: base.num.pow(k), den: base.den.pow(k) })
    }

    /// `x^p`, computed by scaling exponents (coefficients lie in `F_p`).
    pub fn frobenius(&self) -> ResidueElement {
        let p = self.field.p as u32;
        let f = |q: &Poly| q.map_terms(|mo, c| Some((mo.pow(p), c)));
        ResidueElement { field: self.field.clone(), num: f(&self.num), den: f(&self.den) }
    }

    /// Human-readable form with linear factors pulled out, e.g.
    /// `√a√b(1+√a)^{-2}(1+√b)^{-2}`.
    pub fn display_factored(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let vars = &self.field.vars;
        let (nc, nmono, nf) = factor_for_display(&self.num, vars.len());
        let (dc, dmono, df) = factor_for_display(&self.den, vars.len());
        let p = self.field.p;
        let c = crate::poly::mul_mod(nc, inv_mod(dc, p).unwrap(), p);
        let mut pieces: Vec<String> = Vec::new();
        for i in 0..vars.len() {
            let k = nmono.exp(i) as i64 - dmono.exp(i) as i64;
            match k {
                0 => {}
                1 => pieces.push(vars[i].clone()),
                k => pieces.push(format!("{}^{{{k}}}", vars[i])),
            }
        }
        let mut fac: Vec<(String, i64)> = Vec::new();
        for (f, k) in nf {
            fac.push((f.render(vars, false), k as i64));
        }
        for (f, k) in df {
            fac.push((f.render(vars, false), -(k as i64)));
        }
        for (f, k) in fac {
            if k == 1 {
                pieces.push(format!("({f})"));
            } else {
                pieces.push(format!("({f})^{{{k}}}"));
            }
        }
        let mut out = String::new();
        let signed = if c > p / 2 && p > 2 { format!("-{}", p - c) } else { c.to_string() };
        if pieces.is_empty() {
            return signed;
        }
        if c != 1 {
            out.push_str(&signed);
        }
        for piece in pieces {
            let needs_star = match (out.chars().last(), piece.chars().next()) {
                (None, _) => false,
                (Some(_), Some(f)) if f == '(' || is_radical(f) => false,
                (Some(l), _) => l != ')' || !piece.starts_with('('),
            };
            if needs_star {
                out.push('*');
            }
            out.push_str(&piece);
        }
        out
    }
}

/// A representative of `x` modulo `(κ^×)^p` with the monomial and linear
/// factor exponents reduced into `[0, p)` and the scalar dropped.
pub fn reduce_mod_pth_powers(x: &ResidueElement) -> ResidueElement {
    let field = &x.field;
    if x.is_zero() {
        return x.clone();
    }
    let p = field.p;
    let nv = field.nvars();
    let (_, nmono, nf) = factor_for_display(&x.num, nv);
    let (_, dmono, df) = factor_for_display(&x.den, nv);
    let mut num = Poly::one(p);
    let mut put = |f: Poly, k: i64| {
        let k = k.rem_euclid(p as i64) as u32;
        if k > 0 {
            num = num.mul(&f.pow(k));
        }
    };
    for i in 0..nv {
        put(Poly::var(p, i), nmono.exp(i) as i64 - dmono.exp(i) as i64);
    }
    for (f, k) in nf {
        put(f, k as i64);
    }
    for (f, k) in df {
        put(f, -(k as i64));
    }
    ResidueElement::from_poly(field, num.monic())
}

/// Split off a scalar, a monomial and small linear factors `c + x_i`.
fn factor_for_display(poly: &Poly, nv: usize) -> (u64, Mono, Vec<(Poly, u32)>) {
    let p = poly.modulus();
    let lc = poly.leading().map_or(1, |t| t.1);
    let mut rest = poly.scale(inv_mod(lc, p).unwrap());
    let mut mono = Mono::ONE;
    for i in 0..nv {
        let x = Poly::var(p, i);
        while let Some(q) = rest.exact_div(&x) {
            rest = q;
            mono = mono.mul(Mono::var(i));
        }
    }
    let mut factors = Vec::new();
    for i in 0..nv {
        for c in 1..p {
            let lin = Poly::var(p, i).add(&Poly::constant(p, c as i128));
            let mut k = 0;
            while rest.deg_in(i) > 0 {
                match rest.exact_div(&lin) {
                    Some(q) => {
                        rest = q;
                        k += 1;
                    }
                    None => break,
                }
            }
            if k > 0 {
                factors.push((lin, k));
            }
        }
    }
    if !rest.is_constant() {
        factors.push((rest, 1));
    }
    (lc, mono, factors)
}

impl fmt::Display for ResidueElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = &self.field.vars;
        if self.den.is_one() {
            write!(f, "{}", self.num.render(vars, self.field.p > 2))
        } else {
            write!(f, "({})/({})", self.num.render(vars, self.field.p > 2), self.den.render(vars, false))
        }
    }
}

/// Exponent tuple `s` in `{0..p-1}^n`.
pub type BasisExponent = Vec<u32>;

/// Decompose `x = Σ_s a_s^p t^s` over the standard p-basis `{t_1..t_n}`.
/// Only nonzero coefficients are returned; the decomposition is unique.
pub fn pbasis_decompose(x: &ResidueElement) -> BTreeMap<BasisExponent, ResidueElement> {
    let field = x.field.clone();
    let p = field.p;
    let nv = field.nvars();
    // x = a·b^{p-1} / b^p, and the numerator splits by exponents mod p
    let numer = x.num.mul(&x.den.pow(p as u32 - 1));
    let mut buckets: BTreeMap<BasisExponent, Vec<(Mono, u64)>> = BTreeMap::new();
    for &(mono, c) in numer.terms() {
        let exps = mono.exps(nv);
        let s: Vec<u32> = exps.iter().map(|e| e % p as u32).collect();
        let root: Vec<u32> = exps.iter().map(|e| e / p as u32).collect();
        buckets.entry(s).or_default().push((Mono::from_exps(&root), c));
    }
    buckets
        .into_iter()
        .map(|(s, terms)| {
            let a = ResidueElement::new(&field, Poly::from_terms(p, terms), x.den.clone()).unwrap();
            (s, a)
        })
        .collect()
}

/// Rebuild `Σ_s a_s^p t^s` from a decomposition.
pub fn pbasis_recompose(
    field: &Arc<ResidueField>,
    parts: &BTreeMap<BasisExponent, ResidueElement>,
) -> ResidueElement {
    let p = field.p;
    parts.iter().fold(ResidueElement::zero(field), |acc, (s, a)| {
        let t = ResidueElement::from_poly(field, Poly::monomial(p, Mono::from_exps(s), 1));
        acc.add(&a.frobenius().mul(&t))
    })
}

/// The unique `y` with `y^p = x`, or `NotAPthPower`.
pub fn pth_root(x: &ResidueElement) -> Result<ResidueElement> {
    let parts = pbasis_decompose(x);
    let zero_s = vec![0; x.field.nvars()];
    match parts.len() {
        0 => Ok(ResidueElement::zero(&x.field)),
        1 if parts.contains_key(&zero_s) => Ok(parts[&zero_s].clone()),
        _ => Err(Error::NotAPthPower),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2t() -> Arc<ResidueField> {
        ResidueField::new(2, vec!["t".into()])
    }

    fn el(f: &Arc<ResidueField>, s: &str) -> ResidueElement {
        parse_residue(f, s).unwrap()
    }

    #[test]
    fn fractions_reduce_to_lowest_terms() {
        let f = f2t();
        let x = el(&f, "(t^2+1)/(t+1)");
        assert_eq!(x, el(&f, "t+1"));
        assert!(el(&f, "t/t").is_one());
    }

    #[test]
    fn decompose_basis_monomial() {
        let f = f2t();
        let parts = pbasis_decompose(&el(&f, "t"));
        assert_eq!(parts.len(), 1);
        assert!(parts[&vec![1]].is_one());
    }

    #[test]
    fn decompose_inverse_of_one_plus_t() {
        let f = f2t();
        let parts = pbasis_decompose(&el(&f, "1/(1+t)"));
        let expect = el(&f, "1/(1+t)");
        assert_eq!(parts[&vec![0]], expect);
        assert_eq!(parts[&vec![1]], expect);
        // a0^2 + a1^2 t = (1+t)/(1+t)^2
        assert_eq!(pbasis_recompose(&f, &parts), expect);
    }

    #[test]
    fn decompose_over_f3() {
        let f = ResidueField::new(3, vec!["t".into()]);
        let parts = pbasis_decompose(&el(&f, "t^2"));
        assert_eq!(parts.len(), 1);
        assert!(parts[&vec![2]].is_one());
    }

    #[test]
    fn pth_roots() {
        let f = f2t();
        assert_eq!(pth_root(&el(&f, "t^2")).unwrap(), el(&f, "t"));
        assert_eq!(pth_root(&el(&f, "(1+t)^4/t^2")).unwrap(), el(&f, "(1+t)^2/t"));
        assert_eq!(pth_root(&el(&f, "t")), Err(Error::NotAPthPower));
    }

    #[test]
    fn factored_display() {
        let f = ResidueField::new(2, vec!["√a".into(), "√b".into()]);
        let x = el(&f, "√a√b(1+√a)^{-2}(1+√b)^{-2}");
        assert_eq!(x.display_factored(), "√a√b(1+√a)^{-2}(1+√b)^{-2}");
        assert_eq!(el(&f, "√a").display_factored(), "√a");
        let g = ResidueField::new(3, vec!["u".into(), "v".into()]);
        assert_eq!(el(&g, "-u*v/(1+u)").display_factored(), "-1*u*v(1+u)^{-1}");
    }
}
