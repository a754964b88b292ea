//! Additive equations `z^p + λz = c` and splitting of cyclic p-algebras
//! `[w, v)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::linear::solve_mod_p;
use super::norm_search::{candidate_count, search_norm_equation, NormEquation, NormSearchOutcome, DEFAULT_NODE_BUDGET};
use super::{pth_root, ResidueElement, ResidueField};
use crate::error::{Error, Result};
use crate::poly::{Mono, Poly};

/// Solve `z^p + λ·z = c` with numerator and denominator of per-variable
/// degree at most `bound`.
///
/// Writing `z = P/Q` in lowest terms, the left side is already reduced with
/// denominator `Q^p`, so `Q` is forced to be the p-th root of `den(c)` and
/// `P` solves a linear system over `F_p`.
pub fn solve_additive(c: &ResidueElement, lambda: u64, bound: u32) -> Option<ResidueElement> {
    let field = c.field().clone();
    let p = field.p();
    let nv = field.nvars();
    if c.is_zero() {
        return Some(ResidueElement::zero(&field));
    }
    let den = ResidueElement::from_poly(&field, c.den().clone());
    let q = pth_root(&den).ok()?.num().clone();
    if (0..nv).any(|i| q.deg_in(i) > bound) {
        return None;
    }
    let qp1 = q.pow(p as u32 - 1).scale(lambda % p);
    let monos = monomials_up_to(nv, bound);
    let images: Vec<Poly> = monos
        .iter()
        .map(|&m| Poly::monomial(p, m.pow(p as u32), 1).add(&qp1.mul_mono(m)))
        .collect();
    let mut rows: HashMap<Mono, usize> = HashMap::new();
    for t in images.iter().flat_map(|im| im.terms()).chain(c.num().terms()) {
        let n = rows.len();
        rows.entry(t.0).or_insert(n);
    }
    let column = |poly: &Poly| {
        let mut col = vec![0; rows.len()];
        for &(m, a) in poly.terms() {
            col[rows[&m]] = a;
        }
        col
    };
    let cols: Vec<Vec<u64>> = images.iter().map(column).collect();
    let x = solve_mod_p(&cols, &column(c.num()), p)?;
    let pnum = Poly::from_terms(p, monos.iter().zip(&x).map(|(&m, &a)| (m, a)).collect());
    let z = ResidueElement::new(&field, pnum, q).ok()?;
    let check = z.pow(p as i64).unwrap().add(&z.mul(&ResidueElement::constant(&field, lambda as i128)));
    (check == *c).then_some(z)
}

/// A root of `X^p − X − c` within the degree bound.
pub fn artin_schreier_solve(c: &ResidueElement, bound: u32) -> Option<ResidueElement> {
    solve_additive(c, c.p() - 1, bound)
}

/// Decide whether `c ∈ ℘(κ)`, returning a root of `X^p − X − c` if so.
pub fn artin_schreier_root(c: &ResidueElement) -> Option<ResidueElement> {
    solve_additive_exact(c, c.p() - 1)
}

/// Decide `z^p + λ·z = c` for `λ ≠ 0`.
///
/// In each variable, `deg P > deg Q` forces `deg(P^p + λP·Q^{p−1}) = p·deg P`,
/// so a root has `deg P ≤ max(deg Q, deg num(c)/p)` and the bounded search at
/// that bound is complete.
pub fn solve_additive_exact(c: &ResidueElement, lambda: u64) -> Option<ResidueElement> {
    let field = c.field();
    let p = field.p() as u32;
    let dq = (0..field.nvars()).map(|i| c.den().deg_in(i) / p).max().unwrap_or(0);
    let dp = (0..field.nvars()).map(|i| c.num().deg_in(i) / p).max().unwrap_or(0);
    solve_additive(c, lambda, dq.max(dp))
}

/// Monomials with every exponent at most `bound`, in descending order.
pub(crate) fn monomials_up_to(nv: usize, bound: u32) -> Vec<Mono> {
    let mut out = vec![Mono::ONE];
    for i in 0..nv {
        out = out
            .into_iter()
            .flat_map(|m| (0..=bound).map(move |k| m.mul(Mono::var_pow(i, k))))
            .collect();
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// The cyclic algebra `[w, v)`: `x^p − x = w`, `y^p = v`, `yxy⁻¹ = x + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicPAlgebra {
    w: ResidueElement,
    v: ResidueElement,
}

impl CyclicPAlgebra {
    pub fn new(w: ResidueElement, v: ResidueElement) -> Result<CyclicPAlgebra> {
        if v.is_zero() {
            return Err(Error::Precondition("[w, v) needs v != 0".into()));
        }
        if w.field() != v.field() {
            return Err(Error::FieldMismatch);
        }
        Ok(CyclicPAlgebra { w, v })
    }

    pub fn w(&self) -> &ResidueElement {
        &self.w
    }

    pub fn v(&self) -> &ResidueElement {
        &self.v
    }

    pub fn field(&self) -> &Arc<ResidueField> {
        self.w.field()
    }
}

impl fmt::Display for CyclicPAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.w.display_factored(), self.v.display_factored())
    }
}

/// Why an algebra splits; every variant is checked exactly before it is
/// returned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitWitness {
    /// `z^p − z = w`.
    WInImageOfP { z: ResidueElement },
    /// `root^p = v`.
    VIsPthPower { root: ResidueElement },
    /// p = 2: `z² + zy + w·y² = v`, i.e. `v` is the norm of `z + y·x`.
    Norm { z: ResidueElement, y: ResidueElement },
    /// `v = c^p·(w + a^p − a)`, the norm of `c·(x + a)`.
    NormOfLinear { a: ResidueElement, c: ResidueElement },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitCheck {
    Split(SplitWitness),
    /// No witness with per-variable degree at most `bound` exists. This is a
    /// bounded statement, not a proof that the algebra is nonsplit.
    NotSplitWithinBound { bound: u32 },
}

impl SplitCheck {
    pub fn is_split(&self) -> bool {
        matches!(self, SplitCheck::Split(_))
    }
}

/// Bounded search for a splitting witness of `[w, v)`.
pub fn cyclic_split_check(alg: &CyclicPAlgebra, bound: u32) -> SplitCheck {
    let field = alg.field().clone();
    if let Some(z) = artin_schreier_root(&alg.w) {
        return SplitCheck::Split(SplitWitness::WInImageOfP { z });
    }
    if let Ok(root) = pth_root(&alg.v) {
        return SplitCheck::Split(SplitWitness::VIsPthPower { root });
    }
    if field.p() == 2 {
        split_check_char2(alg, bound)
    } else {
        split_check_linear_norms(alg, bound)
    }
}

fn split_check_char2(alg: &CyclicPAlgebra, bound: u32) -> SplitCheck {
    let field = alg.field();
    let (wn, wd) = (alg.w.num().clone(), alg.w.den().clone());
    // write w = A/D² with polynomials A, D
    let (d, a) = match pth_root(&ResidueElement::from_poly(field, wd.clone())) {
        Ok(r) => (r.num().clone(), wn),
        Err(_) => (wd.clone(), wn.mul(&wd)),
    };
    let eq = NormEquation { v1: alg.v.num().clone(), v2: alg.v.den().clone(), d, a };
    // walk the bound down until the search fits the node budget, so the
    // reported bound is always one that was searched exhaustively
    let nv = field.nvars();
    let mut b = bound;
    while b > 0 && !matches!(candidate_count(&eq, nv, b), Ok(n) if n <= DEFAULT_NODE_BUDGET) {
        b -= 1;
    }
    loop {
        match search_norm_equation(&eq, nv, b, DEFAULT_NODE_BUDGET) {
            Ok(NormSearchOutcome::Found { f, g, h }) => {
                let el = |x: &Poly| ResidueElement::from_poly(field, x.clone());
                let witness = if g.is_zero() {
                    // f² + Dfh + Ah² = 0 makes f/(hD) an Artin–Schreier root of w
                    let z = el(&f).div(&el(&h).mul(&el(&eq.d))).unwrap();
                    SplitWitness::WInImageOfP { z }
                } else {
                    let z = el(&f).div(&el(&g)).unwrap();
                    let y = el(&h).mul(&el(&eq.d)).div(&el(&g)).unwrap();
                    SplitWitness::Norm { z, y }
                };
                assert!(verify_witness(alg, &witness), "norm search produced an invalid witness");
                return SplitCheck::Split(witness);
            }
            Ok(NormSearchOutcome::NoneWithinBound { .. }) => return SplitCheck::NotSplitWithinBound { bound: b },
            Err(_) if b > 0 => b -= 1,
            Err(_) => return SplitCheck::NotSplitWithinBound { bound: 0 },
        }
    }
}

/// Cap on candidate counts for the experimental odd-p search.
const ODD_P_CANDIDATES: u64 = 1 << 16;

/// Experimental odd-p search: `v` is a norm of `c(x + a)` iff
/// `v/(w + ℘(a))` is a p-th power, which is decided exactly for each
/// polynomial `a` in the (possibly reduced) bound.
fn split_check_linear_norms(alg: &CyclicPAlgebra, bound: u32) -> SplitCheck {
    let field = alg.field();
    let p = field.p();
    let nv = field.nvars();
    let mut b = bound;
    while b > 0 && (p as f64).powf(((b + 1) as f64).powi(nv as i32)) > ODD_P_CANDIDATES as f64 {
        b -= 1;
    }
    let monos = monomials_up_to(nv, b);
    let mut coeffs = vec![0u64; monos.len()];
    loop {
        let a = ResidueElement::from_poly(
            field,
            Poly::from_terms(p, monos.iter().zip(&coeffs).map(|(&m, &c)| (m, c)).collect()),
        );
        let norm_base = alg.w.add(&a.pow(p as i64).unwrap()).sub(&a);
        if !norm_base.is_zero() {
            if let Ok(c) = pth_root(&alg.v.div(&norm_base).unwrap()) {
                let witness = SplitWitness::NormOfLinear { a, c };
                debug_assert!(verify_witness(alg, &witness));
                return SplitCheck::Split(witness);
            }
        }
        // odometer over F_p^{monos}
        let mut i = 0;
        loop {
            if i == coeffs.len() {
                return SplitCheck::NotSplitWithinBound { bound: b };
            }
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            i += 1;
        }
    }
}

/// Exact check of a splitting witness.
pub fn verify_witness(alg: &CyclicPAlgebra, witness: &SplitWitness) -> bool {
    let field = alg.field();
    let p = field.p() as i64;
    match witness {
        SplitWitness::WInImageOfP { z } => z.pow(p).unwrap().sub(z) == alg.w,
        SplitWitness::VIsPthPower { root } => root.pow(p).unwrap() == alg.v,
        SplitWitness::Norm { z, y } => {
            p == 2 && z.mul(z).add(&z.mul(y)).add(&alg.w.mul(y).mul(y)) == alg.v
        }
        SplitWitness::NormOfLinear { a, c } => {
            c.pow(p).unwrap().mul(&alg.w.add(&a.pow(p).unwrap()).sub(a)) == alg.v
        }
    }
}
