//! Exhaustive search for solutions of the characteristic-2 norm equation
//!
//! ```text
//! V2·(f² + D·f·h + A·h²) = V1·g²,   (f, g, h) ≠ 0,
//! ```
//!
//! over `F_2[t_1..t_n]` with per-variable degree bounds.
//!
//! For fixed `h` the equation is `F_2`-linear in `(f, g)` (squaring is
//! additive in characteristic 2), so the search enumerates `h` only and
//! decides each slice by Gaussian elimination on bitsets. Specializing one
//! variable to 0 or 1 gives a smaller equation that every solution must also
//! satisfy; specializations that only admit `h̄ = 0` cut the `h` space down
//! to a linear subspace, the others act as lookup filters.

use std::sync::Arc;

use super::artin_schreier::monomials_up_to;
use super::ResidueField;
use crate::error::{Error, Result};
use crate::poly::{Mono, Poly};

/// Default node budget: the number of `h` candidates one search may visit.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Largest specialized slice enumerated to build a filter.
const FILTER_MAX_BITS: usize = 16;

/// Coefficients of `V2·(f² + D·f·h + A·h²) = V1·g²` over `F_2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormEquation {
    pub v1: Poly,
    pub v2: Poly,
    pub d: Poly,
    pub a: Poly,
}

impl NormEquation {
    fn specialize(&self, var: usize, c: u64) -> NormEquation {
        NormEquation {
            v1: self.v1.specialize(var, c),
            v2: self.v2.specialize(var, c),
            d: self.d.specialize(var, c),
            a: self.a.specialize(var, c),
        }
    }

    /// Exact check of a candidate triple.
    pub fn holds(&self, f: &Poly, g: &Poly, h: &Poly) -> bool {
        let lhs = f.mul(f).add(&self.d.mul(f).mul(h)).add(&self.a.mul(h).mul(h));
        self.v2.mul(&lhs) == self.v1.mul(g).mul(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormSearchOutcome {
    Found { f: Poly, g: Poly, h: Poly },
    NoneWithinBound { bound: u32, explored: u64 },
}

/// Dense exponent grid used to index bitset coordinates.
struct Grid {
    strides: Vec<usize>,
    size: usize,
    words: usize,
}

impl Grid {
    fn new(maxdeg: &[u32]) -> Grid {
        let mut strides = Vec::with_capacity(maxdeg.len());
        let mut size = 1;
        for &d in maxdeg {
            strides.push(size);
            size *= d as usize + 1;
        }
        Grid { strides, size, words: size.div_ceil(64) }
    }

    fn bits(&self, poly: &Poly) -> Vec<u64> {
        let mut out = vec![0u64; self.words];
        for &(m, c) in poly.terms() {
            if c & 1 == 1 {
                let idx: usize = self.strides.iter().enumerate().map(|(i, s)| m.exp(i) as usize * s).sum();
                out[idx / 64] ^= 1 << (idx % 64);
            }
        }
        out
    }
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn highest_bit(v: &[u64]) -> Option<usize> {
    v.iter().enumerate().rev().find(|(_, &w)| w != 0).map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// Incremental XOR basis with combination tracking.
#[derive(Clone)]
struct XorBasis {
    words: usize,
    slot: Vec<u32>,
    vecs: Vec<u64>,
    combos: Vec<u128>,
}

const NO_SLOT: u32 = u32::MAX;

impl XorBasis {
    fn new(size: usize, words: usize) -> XorBasis {
        XorBasis { words, slot: vec![NO_SLOT; size], vecs: Vec::new(), combos: Vec::new() }
    }

    /// Reduce `x`; returns `Ok(combo)` if it reduces to zero, otherwise the
    /// pivot bit of the residue.
    fn reduce(&self, x: &mut [u64], combo: &mut u128) -> std::result::Result<(), usize> {
        while let Some(hb) = highest_bit(x) {
            let s = self.slot[hb];
            if s == NO_SLOT {
                return Err(hb);
            }
            let s = s as usize;
            xor_into(x, &self.vecs[s * self.words..(s + 1) * self.words]);
            *combo ^= self.combos[s];
        }
        Ok(())
    }

    /// Insert; returns `Some(combo)` for a dependency (a kernel vector).
    fn insert(&mut self, mut x: Vec<u64>, mut combo: u128) -> Option<u128> {
        match self.reduce(&mut x, &mut combo) {
            Ok(()) => Some(combo),
            Err(pivot) => {
                self.slot[pivot] = self.combos.len() as u32;
                self.vecs.extend_from_slice(&x);
                self.combos.push(combo);
                None
            }
        }
    }

    fn truncate(&mut self, n: usize, touched: &[usize]) {
        for &b in touched {
            self.slot[b] = NO_SLOT;
        }
        self.vecs.truncate(n * self.words);
        self.combos.truncate(n);
    }
}

/// The linear slices of one equation over a fixed monomial support.
struct System {
    k: usize,
    words: usize,
    fsq: Vec<Vec<u64>>,
    cross: Vec<Vec<Vec<u64>>>,
    rhs_unit: Vec<Vec<u64>>,
    gbasis: XorBasis,
    gkernel: Option<u128>,
}

impl System {
    fn new(eq: &NormEquation, nv: usize, monos: &[Mono], bound: u32) -> System {
        let k = monos.len();
        let v2d = eq.v2.mul(&eq.d);
        let v2a = eq.v2.mul(&eq.a);
        let maxdeg: Vec<u32> = (0..nv)
            .map(|i| 2 * bound + [&v2d, &eq.v2, &v2a, &eq.v1].iter().map(|q| q.deg_in(i)).max().unwrap())
            .collect();
        let grid = Grid::new(&maxdeg);
        let sq = |m: Mono| Poly::monomial(2, m.pow(2), 1);
        let fsq = monos.iter().map(|&m| grid.bits(&eq.v2.mul(&sq(m)))).collect();
        let cross = monos
            .iter()
            .map(|&nu| monos.iter().map(|&mu| grid.bits(&v2d.mul_mono(nu.mul(mu)))).collect())
            .collect();
        let rhs_unit = monos.iter().map(|&m| grid.bits(&v2a.mul(&sq(m)))).collect();
        let mut gbasis = XorBasis::new(grid.size, grid.words);
        let mut gkernel = None;
        for (j, &m) in monos.iter().enumerate() {
            if let Some(c) = gbasis.insert(grid.bits(&eq.v1.mul(&sq(m))), 1u128 << (k + j)) {
                gkernel.get_or_insert(c);
            }
        }
        System { k, words: grid.words, fsq, cross, rhs_unit, gbasis, gkernel }
    }

    /// Column and right-hand-side contributions of an `h` direction.
    fn delta(&self, hmask: u64) -> (Vec<Vec<u64>>, Vec<u64>) {
        let mut cols = vec![vec![0u64; self.words]; self.k];
        let mut rhs = vec![0u64; self.words];
        for nu in (0..self.k).filter(|&nu| hmask >> nu & 1 == 1) {
            for (mu, col) in cols.iter_mut().enumerate() {
                xor_into(col, &self.cross[nu][mu]);
            }
            xor_into(&mut rhs, &self.rhs_unit[nu]);
        }
        (cols, rhs)
    }

    /// Solve the slice for the current `h` (given by its cross columns and
    /// right-hand side). Returns the `(f, g)` combination of a solution,
    /// which must be nonzero when `h = 0`.
    fn solve(&self, scratch: &mut XorBasis, hcols: &[Vec<u64>], rhs: &[u64], h_zero: bool) -> Option<u128> {
        let base = self.gbasis.combos.len();
        let mut touched = Vec::new();
        let mut kernel = if h_zero { self.gkernel } else { None };
        for mu in 0..self.k {
            let mut col = self.fsq[mu].clone();
            xor_into(&mut col, &hcols[mu]);
            let mut combo = 1u128 << mu;
            match scratch.reduce(&mut col, &mut combo) {
                Ok(()) => {
                    kernel.get_or_insert(combo);
                }
                Err(pivot) => {
                    scratch.slot[pivot] = scratch.combos.len() as u32;
                    scratch.vecs.extend_from_slice(&col);
                    scratch.combos.push(combo);
                    touched.push(pivot);
                }
            }
            if h_zero && kernel.is_some() {
                break;
            }
        }
        let out = if h_zero {
            kernel
        } else {
            let mut r = rhs.to_vec();
            let mut combo = 0u128;
            scratch.reduce(&mut r, &mut combo).ok().map(|_| combo)
        };
        scratch.truncate(base, &touched);
        out
    }
}

/// Gray-code walk over the span of `basis` (as `u64` masks over the `h`
/// monomials). The visitor gets the current mask, columns and rhs and
/// returns `true` to stop.
fn walk(
    sys: &System,
    basis: &[u64],
    mut visit: impl FnMut(u64, u64, &[Vec<u64>], &[u64]) -> bool,
) -> bool {
    let deltas: Vec<(Vec<Vec<u64>>, Vec<u64>)> = basis.iter().map(|&b| sys.delta(b)).collect();
    let mut cols = vec![vec![0u64; sys.words]; sys.k];
    let mut rhs = vec![0u64; sys.words];
    let mut h = 0u64;
    let total: u64 = 1 << basis.len();
    for step in 0..total {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            h ^= basis[j];
            for (c, d) in cols.iter_mut().zip(&deltas[j].0) {
                xor_into(c, d);
            }
            xor_into(&mut rhs, &deltas[j].1);
        }
        if visit(step, h, &cols, &rhs) {
            return true;
        }
    }
    false
}

/// Specialization `x_var = c` as a linear map on `h` masks.
struct Specialization {
    bits: usize,
    images: Vec<u64>,
    /// Admissible specialized `h̄`, as a bitmap over all `2^{k'}` masks.
    admissible: Vec<u64>,
    only_zero: bool,
    everything: bool,
}

impl Specialization {
    fn image(&self, hmask: u64) -> u64 {
        (0..self.images.len()).filter(|&j| hmask >> j & 1 == 1).fold(0, |acc, j| acc ^ self.images[j])
    }

    fn admits(&self, img: u64) -> bool {
        self.admissible[(img / 64) as usize] >> (img % 64) & 1 == 1
    }
}

fn build_specialization(
    eq: &NormEquation,
    nv: usize,
    monos: &[Mono],
    bound: u32,
    var: usize,
    c: u64,
) -> Option<Specialization> {
    let sub: Vec<Mono> = monos.iter().copied().filter(|m| m.exp(var) == 0).collect();
    if sub.len() > FILTER_MAX_BITS {
        return None;
    }
    let images = monos
        .iter()
        .map(|m| {
            if c == 0 && m.exp(var) > 0 {
                0
            } else {
                1u64 << sub.iter().position(|s| *s == m.without(var)).unwrap()
            }
        })
        .collect();
    let seq = eq.specialize(var, c);
    let sys = System::new(&seq, nv, &sub, bound);
    let mut scratch = sys.gbasis.clone();
    let basis: Vec<u64> = (0..sub.len()).map(|j| 1u64 << j).collect();
    let mut admissible = vec![0u64; (1usize << sub.len()).div_ceil(64)];
    let mut count = 0u64;
    walk(&sys, &basis, |_, h, cols, rhs| {
        // h̄ = 0 is always admissible (take f̄ = ḡ = 0)
        if h == 0 || sys.solve(&mut scratch, cols, rhs, false).is_some() {
            admissible[(h / 64) as usize] |= 1 << (h % 64);
            count += 1;
        }
        false
    });
    Some(Specialization {
        bits: sub.len(),
        images,
        admissible,
        only_zero: count == 1,
        everything: count == 1 << sub.len(),
    })
}

/// Null space of the constraint rows, as `u64` masks over `k` unknowns.
fn nullspace(rows: &[u64], k: usize) -> Vec<u64> {
    let mut piv_rows: Vec<(usize, u64)> = Vec::new();
    for &r in rows {
        let mut r = r;
        for &(p, pr) in &piv_rows {
            if r >> p & 1 == 1 {
                r ^= pr;
            }
        }
        if r != 0 {
            let p = r.trailing_zeros() as usize;
            for pr in piv_rows.iter_mut() {
                if pr.1 >> p & 1 == 1 {
                    pr.1 ^= r;
                }
            }
            piv_rows.push((p, r));
        }
    }
    let pivots: Vec<usize> = piv_rows.iter().map(|x| x.0).collect();
    (0..k)
        .filter(|j| !pivots.contains(j))
        .map(|free| {
            let mut v = 1u64 << free;
            for &(p, pr) in &piv_rows {
                if pr >> free & 1 == 1 {
                    v |= 1 << p;
                }
            }
            v
        })
        .collect()
}

/// Size of the `h` space the search would walk at `bound`, and the data to
/// walk it.
struct Plan {
    monos: Vec<Mono>,
    basis: Vec<u64>,
    filters: Vec<Specialization>,
}

fn plan(eq: &NormEquation, nv: usize, bound: u32) -> Result<Plan> {
    let monos = monomials_up_to(nv, bound);
    if 2 * monos.len() > 128 {
        return Err(Error::Precondition(format!(
            "norm search supports at most 64 monomials per unknown, bound {bound} gives {}",
            monos.len()
        )));
    }
    let mut constraints = Vec::new();
    let mut filters = Vec::new();
    for var in 0..nv {
        for c in 0..2 {
            let Some(s) = build_specialization(eq, nv, &monos, bound, var, c) else { continue };
            if s.only_zero {
                for j in 0..s.bits {
                    let row = (0..monos.len()).filter(|&i| s.images[i] >> j & 1 == 1).fold(0u64, |a, i| a | 1 << i);
                    constraints.push(row);
                }
            } else if !s.everything {
                filters.push(s);
            }
        }
    }
    let basis = nullspace(&constraints, monos.len());
    Ok(Plan { monos, basis, filters })
}

/// Number of `h` candidates the search visits at `bound`.
pub(crate) fn candidate_count(eq: &NormEquation, nv: usize, bound: u32) -> Result<u64> {
    let p = plan(eq, nv, bound)?;
    Ok(1u64.checked_shl(p.basis.len() as u32).unwrap_or(u64::MAX))
}

/// Exhaustive search at `bound`, visiting at most `budget` candidates.
pub(crate) fn search_norm_equation(eq: &NormEquation, nv: usize, bound: u32, budget: u64) -> Result<NormSearchOutcome> {
    let plan = plan(eq, nv, bound)?;
    let total = 1u64.checked_shl(plan.basis.len() as u32).unwrap_or(u64::MAX);
    if plan.basis.len() >= 63 {
        return Err(Error::SearchBudgetExceeded { budget, explored: 0, total });
    }
    let sys = System::new(eq, nv, &plan.monos, bound);
    let k = plan.monos.len();
    let mut scratch = sys.gbasis.clone();
    let filter_deltas: Vec<Vec<u64>> =
        plan.filters.iter().map(|s| plan.basis.iter().map(|&b| s.image(b)).collect()).collect();
    let mut images = vec![0u64; plan.filters.len()];
    let mut explored = 0u64;
    let mut found: Option<(u64, u128)> = None;
    let mut over_budget = false;
    walk(&sys, &plan.basis, |step, h, cols, rhs| {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            for (img, d) in images.iter_mut().zip(&filter_deltas) {
                *img ^= d[j];
            }
        }
        if explored == budget {
            over_budget = true;
            return true;
        }
        explored += 1;
        if plan.filters.iter().zip(&images).any(|(s, &img)| !s.admits(img)) {
            return false;
        }
        if let Some(combo) = sys.solve(&mut scratch, cols, rhs, h == 0) {
            found = Some((h, combo));
            return true;
        }
        false
    });
    if over_budget {
        return Err(Error::SearchBudgetExceeded { budget, explored, total });
    }
    match found {
        None => Ok(NormSearchOutcome::NoneWithinBound { bound, explored }),
        Some((hmask, combo)) => {
            let pick = |mask: u128, off: usize| {
                Poly::from_terms(
                    2,
                    (0..k).filter(|&i| mask >> (i + off) & 1 == 1).map(|i| (plan.monos[i], 1)).collect(),
                )
            };
            let (f, g, h) = (pick(combo, 0), pick(combo, k), pick(hmask as u128, 0));
            assert!(eq.holds(&f, &g, &h), "norm search slice solution failed exact verification");
            Ok(NormSearchOutcome::Found { f, g, h })
        }
    }
}

/// Outcome of [`char2_counterexample_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Char2Outcome {
    NoneWithinBound { bound: u32, explored: u64 },
    /// A verified solution, reduced by `gcd(f, h)` when that divides `g`.
    Solution { f: Poly, g: Poly, h: Poly },
}

/// The field `F_2(u, v)` the counterexample equation lives in.
pub fn char2_uv_field() -> Arc<ResidueField> {
    ResidueField::new(2, vec!["u".into(), "v".into()])
}

fn char2_equation() -> NormEquation {
    let u = Poly::var(2, 0);
    let v = Poly::var(2, 1);
    let one = Poly::one(2);
    NormEquation {
        v1: v.clone(),
        v2: one.clone(),
        d: one.add(&u).mul(&one.add(&v)),
        a: u.mul(&v),
    }
}

/// Search `f² + (1+u)(1+v)fh + uvh² = vg²` over `F_2[u,v]` with every
/// per-variable degree at most `bound`, using [`DEFAULT_NODE_BUDGET`].
pub fn char2_counterexample_search(bound: u32) -> Result<Char2Outcome> {
    char2_counterexample_search_with_budget(bound, DEFAULT_NODE_BUDGET)
}

pub fn char2_counterexample_search_with_budget(bound: u32, budget: u64) -> Result<Char2Outcome> {
    let eq = char2_equation();
    match search_norm_equation(&eq, 2, bound, budget)? {
        NormSearchOutcome::NoneWithinBound { bound, explored } => Ok(Char2Outcome::NoneWithinBound { bound, explored }),
        NormSearchOutcome::Found { f, g, h } => {
            let d = f.gcd(&h);
            let reduced = match (f.exact_div(&d), g.exact_div(&d), h.exact_div(&d)) {
                (Some(f2), Some(g2), Some(h2)) if !d.is_one() && eq.holds(&f2, &g2, &h2) => (f2, g2, h2),
                _ => (f, g, h),
            };
            Ok(Char2Outcome::Solution { f: reduced.0, g: reduced.1, h: reduced.2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all (f, g, h) for tiny bounds.
    fn brute_force(eq: &NormEquation, nv: usize, bound: u32) -> bool {
        let monos = monomials_up_to(nv, bound);
        let k = monos.len();
        assert!(3 * k <= 20);
        let pick = |mask: u64| {
            Poly::from_terms(2, (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| (monos[i], 1)).collect())
        };
        (1u64..1 << (3 * k)).any(|m| eq.holds(&pick(m), &pick(m >> k), &pick(m >> (2 * k))))
    }

    #[test]
    fn counterexample_equation_has_no_small_solutions() {
        let eq = char2_equation();
        for b in 0..=1 {
            assert!(!brute_force(&eq, 2, b));
            assert!(matches!(char2_counterexample_search(b), Ok(Char2Outcome::NoneWithinBound { .. })));
        }
    }

    #[test]
    fn agrees_with_brute_force_on_small_equations() {
        let x = Poly::var(2, 0);
        let one = Poly::one(2);
        let cases = [
            // v = x + x² = norm of x + y·x_AS with w = 0 is split
            NormEquation { v1: x.add(&x.mul(&x)), v2: one.clone(), d: one.clone(), a: Poly::zero(2) },
            NormEquation { v1: x.clone(), v2: one.clone(), d: one.clone(), a: one.clone() },
            NormEquation { v1: x.clone(), v2: one.clone(), d: one.clone(), a: x.clone() },
            NormEquation { v1: x.add(&one), v2: x.clone(), d: x.clone(), a: x.add(&one) },
        ];
        for eq in &cases {
            for b in 0..=2 {
                let brute = brute_force(eq, 1, b);
                let fast = matches!(search_norm_equation(eq, 1, b, 1 << 20), Ok(NormSearchOutcome::Found { .. }));
                assert_eq!(brute, fast, "{eq:?} at bound {b}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        match char2_counterexample_search_with_budget(3, 10) {
            Err(Error::SearchBudgetExceeded { explored, total, .. }) => {
                assert_eq!(explored, 10);
                assert!(total > 10);
            }
            other => panic!("{other:?}"),
        }
    }

    fn bivariate(bits: u16) -> Poly {
        let monos = monomials_up_to(2, 1);
        Poly::from_terms(2, (0..monos.len()).filter(|&i| bits >> i & 1 == 1).map(|i| (monos[i], 1)).collect())
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Planting `(f, g, h)` via `V1 = N(f, h)`, `V2 = g²` must be found
        /// at the planted degree, and what is found must solve the equation.
        #[test]
        fn planted_solutions_are_found(fb in 0u16..16, gb in 1u16..16, hb in 0u16..16, db in 0u16..16, ab in 0u16..16) {
            let (f, g, h, d, a) = (bivariate(fb), bivariate(gb), bivariate(hb), bivariate(db), bivariate(ab));
            let norm = f.mul(&f).add(&d.mul(&f).mul(&h)).add(&a.mul(&h).mul(&h));
            proptest::prop_assume!(!norm.is_zero());
            let eq = NormEquation { v1: norm, v2: g.mul(&g), d, a };
            proptest::prop_assert!(eq.holds(&f, &g, &h));
            match search_norm_equation(&eq, 2, 1, 1 << 20).unwrap() {
                NormSearchOutcome::Found { f, g, h } => {
                    proptest::prop_assert!(eq.holds(&f, &g, &h));
                    proptest::prop_assert!(!(f.is_zero() && g.is_zero() && h.is_zero()));
                }
                other => proptest::prop_assert!(false, "missed planted solution: {other:?}"),
            }
        }
    }

    #[test]
    fn nullspace_basis() {
        // x0 + x1 = 0 over three unknowns
        let ns = nullspace(&[0b011], 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert_eq!((v & 1) ^ (v >> 1 & 1), 0);
        }
    }
}
