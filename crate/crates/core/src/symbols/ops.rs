//! Symbol operations: normalization, Kato's rewrite, unit expansion,
//! filtration levels and the tame parts at level `e'`.

use std::sync::Arc;

use num_rational::Ratio;

use super::ladder::{pth_power_ladder, PthPowerStatus};
use super::rules::{Rule, Step, Tracer};
use super::{above_e_prime, agrees, one_unit_level, MilnorSymbol};
use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::poly::{Mono, Poly};
use crate::residue::{pbasis_decompose, reduce_mod_pth_powers, CyclicPAlgebra, ResidueElement};

/// Canonical form: entries split into units and the uniformizer, p-th
/// powers and Steinberg pairs removed, entries sorted, like terms merged.
pub fn normalize(s: &MilnorSymbol) -> Result<MilnorSymbol> {
    Ok(normalize_traced(s)?.0)
}

pub fn normalize_traced(s: &MilnorSymbol) -> Result<(MilnorSymbol, Vec<Step>)> {
    let mut tr = Tracer::new(s.clone());
    normalize_into(&mut tr)?;
    Ok((tr.symbol, tr.steps))
}

pub(crate) fn normalize_into(tr: &mut Tracer) -> Result<()> {
    for t in tr.symbol.terms() {
        for (k, x) in t.entries.iter().enumerate() {
            if x.valuation().exact().is_none() {
                return Err(Error::ZeroEntry(k));
            }
        }
    }
    let mut t = 0;
    while t < tr.symbol.terms().len() {
        if normalize_term(tr, t)? {
            t += 1;
        }
    }
    for t in 0..tr.symbol.terms().len() {
        sort_entries(tr, t)?;
    }
    let mut a = 0;
    while a < tr.symbol.terms().len() {
        let same = (a + 1..tr.symbol.terms().len()).find(|&b| {
            let (x, y) = (&tr.symbol.terms()[a], &tr.symbol.terms()[b]);
            x.entries.iter().zip(&y.entries).all(|(u, v)| agrees(u, v))
        });
        match same {
            Some(b) => {
                let before = tr.symbol.terms().len();
                tr.apply(Rule::Combine { a, b })?;
                if tr.symbol.terms().len() == before - 2 {
                    continue;
                }
            }
            None => a += 1,
        }
    }
    Ok(())
}

fn is_uniformizer(x: &CdvfElement) -> bool {
    x.valuation().exact() == Some(1) && x.eq_at_precision(&x.field().uniformizer())
}

fn steinberg_pair(entries: &[CdvfElement]) -> Option<(usize, usize)> {
    let field = entries.first()?.field().clone();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let (x, y) = (&entries[i], &entries[j]);
            let one_minus = field.one().sub(x);
            if agrees(y, &x.neg()) || (!one_minus.is_zero_at_precision() && agrees(y, &one_minus)) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Returns whether term `t` survives; on `false` the term is gone and `t`
/// now indexes the next one.
fn normalize_term(tr: &mut Tracer, t: usize) -> Result<bool> {
    let field = tr.symbol.field().clone();
    'restart: loop {
        let entries = tr.symbol.terms()[t].entries.clone();
        if let Some((i, j)) = steinberg_pair(&entries) {
            tr.apply(Rule::Steinberg { term: t, i, j })?;
            return Ok(false);
        }
        for (k, x) in entries.iter().enumerate() {
            let (m, u) = x.val_unit_split().map_err(|_| Error::ZeroEntry(k))?;
            if m != 0 && !is_uniformizer(x) {
                let factors = vec![(field.uniformizer(), m), (u, 1)];
                tr.apply(Rule::Multilinearity { term: t, entry: k, factors })?;
                continue 'restart;
            }
        }
        for (k, x) in entries.iter().enumerate() {
            if x.is_unit() {
                let l = pth_power_ladder(x)?;
                if l.status == PthPowerStatus::PthPower {
                    tr.apply(Rule::PthPowerKill { term: t, entry: k, root: l.root })?;
                    return Ok(false);
                }
            }
        }
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if agrees(&entries[i], &entries[j]) && !agrees(&entries[j], &field.int(-1)) {
                    tr.apply(Rule::RepeatedEntry { term: t, i, j })?;
                    continue 'restart;
                }
            }
        }
        return Ok(true);
    }
}

fn sort_key(x: &CdvfElement) -> (bool, String) {
    (!is_uniformizer(x), x.render())
}

fn sort_entries(tr: &mut Tracer, t: usize) -> Result<()> {
    let n = tr.symbol.arity();
    for pass in 0..n {
        for i in 0..n.saturating_sub(1 + pass) {
            let e = &tr.symbol.terms()[t].entries;
            if sort_key(&e[i]) > sort_key(&e[i + 1]) {
                tr.apply(Rule::Swap { term: t, i, j: i + 1 })?;
            }
        }
    }
    Ok(())
}

/// Whether a congruence is an equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    /// Only known modulo `U^{modulus_level} K_2`.
    CongruenceOnly { modulus_level: i64 },
}

#[derive(Clone, Debug)]
pub struct FiltrationCertificate {
    /// The symbol lies in `U^level K_n`; capped at `⌊e'⌋ + 1`.
    pub level: i64,
    pub exactness: Exactness,
    /// `level > e'`, so the class vanishes mod p.
    pub zero_class: bool,
    /// Entry adjustments by p-th powers that realize the level.
    pub trace: Vec<Step>,
}

fn level_cap(field: &Field) -> i64 {
    field.e_prime().floor().to_integer() + 1
}

/// `{1+x, 1+y} ≡ {1+xy, −x⁻¹}` modulo `U^{i+j+1} K_2`, `i = v(x)`,
/// `j = v(y)`; exact when `i + j + 1 > e'`.
pub fn kato_rewrite(x: &CdvfElement, y: &CdvfElement) -> Result<(MilnorSymbol, FiltrationCertificate)> {
    let field = x.field().clone();
    let (Some(i), Some(j)) = (x.valuation().exact(), y.valuation().exact()) else {
        return Err(Error::ZeroOrBelowPrecision);
    };
    if i < 1 || j < 1 {
        return Err(Error::Precondition(format!("need v(x), v(y) >= 1, got {i} and {j}")));
    }
    let one = field.one();
    let sym = MilnorSymbol::from_entries(vec![one.add(&x.mul(y)), x.inv()?.neg()])?;
    let level = i + j;
    let exactness =
        if above_e_prime(&field, level + 1) { Exactness::Exact } else { Exactness::CongruenceOnly { modulus_level: level + 1 } };
    let mut trace = Vec::new();
    if exactness == Exactness::Exact {
        let before = MilnorSymbol::from_entries(vec![one.add(x), one.add(y)])?;
        trace.push(Step { rule: Rule::KatoRewrite { term: 0 }, before, after: sym.clone() });
    }
    let cert = FiltrationCertificate { level, exactness, zero_class: above_e_prime(&field, level), trace };
    Ok((sym, cert))
}

/// Level of `U^m K_2` containing a symbol, from the levels its entries
/// reach after removing p-th powers.
pub fn filtration_certificate(s: &MilnorSymbol) -> Result<FiltrationCertificate> {
    let field = s.field().clone();
    let cap = level_cap(&field);
    let mut tr = Tracer::new(s.clone());
    let mut level = cap;
    let mut t = 0;
    'terms: while t < tr.symbol.terms().len() {
        let mut levels = Vec::new();
        for k in 0..s.arity() {
            let x = tr.symbol.terms()[t].entries[k].clone();
            if x.valuation().exact().is_none() {
                return Err(Error::ZeroEntry(k));
            }
            if !x.is_unit() {
                levels.push(0);
                continue;
            }
            let l = pth_power_ladder(&x)?;
            let moved = !agrees(&l.root, &field.one());
            if l.status == PthPowerStatus::PthPower {
                tr.apply(Rule::PthPowerKill { term: t, entry: k, root: l.root })?;
                continue 'terms;
            }
            if moved {
                tr.apply(Rule::PthPowerKill { term: t, entry: k, root: l.root })?;
            }
            levels.push(match l.status {
                PthPowerStatus::Stuck { level } | PthPowerStatus::Unknown { level } => level,
                PthPowerStatus::PthPower => unreachable!(),
            });
        }
        let ones: Vec<i64> = levels.iter().copied().filter(|&l| l >= 1).collect();
        let term_level = if ones.len() >= 2 { ones.iter().sum() } else { levels.iter().copied().max().unwrap_or(0) };
        level = level.min(term_level.min(cap));
        t += 1;
    }
    Ok(FiltrationCertificate {
        level,
        exactness: Exactness::Exact,
        zero_class: above_e_prime(&field, level),
        trace: tr.steps,
    })
}

/// One piece `a^p · t^s · π^j` of a unit expansion.
#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub s: Vec<u32>,
    pub j: i64,
    pub a: CdvfElement,
}

/// `α = (Σ a^p t^s π^j)·residual` with `residual ∈ U^{⌈e'⌉+1}`.
#[derive(Clone, Debug)]
pub struct UnitExpansion {
    pub field: Arc<Field>,
    pub terms: Vec<ExpansionTerm>,
    pub residual: CdvfElement,
}

pub(crate) fn basis_monomial(field: &Arc<Field>, s: &[u32]) -> CdvfElement {
    CdvfElement::exact(field, Poly::monomial(field.modulus(), Mono::from_exps(s), 1))
}

impl UnitExpansion {
    /// `Σ a^p t^s π^j`.
    pub fn sum(&self) -> Result<CdvfElement> {
        let p = self.field.p() as i64;
        self.terms.iter().try_fold(self.field.zero(), |acc, t| {
            let piece = t.a.pow(p)?.mul(&basis_monomial(&self.field, &t.s)).mul_uniformizer_pow(t.j);
            Ok(acc.add(&piece))
        })
    }
}

/// Peel off residues level by level: at level `j` the residue of
/// `(α − S)/π^j` is written over the p-basis and its lift added to `S`.
pub fn unit_expand(alpha: &CdvfElement) -> Result<UnitExpansion> {
    let field = alpha.field().clone();
    if !alpha.is_unit() {
        return Err(Error::NotAUnit);
    }
    let p = field.p() as i64;
    let top = field.e_prime().ceil().to_integer();
    let mut sum = field.zero();
    let mut terms = Vec::new();
    for j in 0..=top {
        let c = alpha.sub(&sum).mul_uniformizer_pow(-j);
        let cbar = c.residue()?;
        for (s, a) in pbasis_decompose(&cbar) {
            let a = field.lift(&a);
            let piece = a.pow(p)?.mul(&basis_monomial(&field, &s)).mul_uniformizer_pow(j);
            sum = sum.add(&piece);
            terms.push(ExpansionTerm { s, j, a });
        }
    }
    let residual = alpha.div(&sum)?;
    Ok(UnitExpansion { field, terms, residual })
}

/// For a unit `γ = Σ b^p`: `c = Σ b` and `m` with `γ = c^p(1 + m)`;
/// `v(m) ≥ e` because `γ − c^p ∈ pO`.
pub fn sum_pth_reduce(b: &[CdvfElement]) -> Result<(CdvfElement, CdvfElement)> {
    let field = b.first().ok_or(Error::Precondition("empty witness list".into()))?.field().clone();
    let p = field.p() as i64;
    let gamma = b.iter().try_fold(field.zero(), |acc, x| x.pow(p).map(|xp| acc.add(&xp)))?;
    if !gamma.is_unit() {
        return Err(Error::NotAUnit);
    }
    let c = b.iter().fold(field.zero(), |acc, x| acc.add(x));
    if !c.is_unit() {
        return Err(Error::NotAUnit);
    }
    let cp = c.pow(p)?;
    let m = gamma.sub(&cp).div(&cp)?;
    Ok((c, m))
}

/// Second argument of `ι²`: a unit lift or the uniformizer.
#[derive(Clone, Debug)]
pub enum IotaTarget {
    Unit(CdvfElement),
    Uniformizer,
}

/// `{1 + 4x, y}` or `{1 + 4x, π}` for a residue `x̄`, p = 2. A zero residue
/// gives the zero symbol.
pub fn iota2(field: &Arc<Field>, x: &ResidueElement, target: &IotaTarget) -> Result<MilnorSymbol> {
    if field.p() != 2 {
        return Err(Error::OddPNotSupported);
    }
    if x.is_zero() {
        return Ok(MilnorSymbol::zero(field, 2));
    }
    let first = field.one().add(&field.lift(x).mul_uniformizer_pow(2 * field.e()));
    let second = match target {
        IotaTarget::Unit(y) => {
            if !y.is_unit() {
                return Err(Error::NotAUnit);
            }
            y.clone()
        }
        IotaTarget::Uniformizer => field.uniformizer(),
    };
    MilnorSymbol::from_entries(vec![first, second])
}

/// Classes read off a symbol at the tame level `e'` (p = 2): the Brauer
/// part `Σ [ū, w̄)` from unit second entries and the Artin–Schreier part
/// `Σ m·ū` from powers of the uniformizer.
#[derive(Clone, Debug)]
pub struct TameParts {
    pub level: i64,
    pub brauer: Vec<CyclicPAlgebra>,
    pub artin_schreier: Option<ResidueElement>,
}

/// Read the tame parts of a symbol whose terms are `{1 + 4u, w}` (either
/// order) with `v(4u) ≥ e'`. Terms deeper than `e'` contribute nothing.
pub fn tame_extract(s: &MilnorSymbol) -> Result<TameParts> {
    let field = s.field().clone();
    if field.p() != 2 {
        return Err(Error::OddPNotSupported);
    }
    if s.arity() != 2 {
        return Err(Error::NotInTameForm(format!("arity {} is not 2", s.arity())));
    }
    let ep = field.e_prime().to_integer();
    let rf = field.residue_field().clone();
    let mut brauer: Vec<(ResidueElement, ResidueElement)> = Vec::new();
    let mut as_part = ResidueElement::zero(&rf);
    for t in s.terms() {
        if t.coeff % 2 == 0 {
            continue;
        }
        let order = [(0, 1), (1, 0)].into_iter().find(|&(a, _)| one_unit_level(&t.entries[a]).is_some_and(|l| l >= ep));
        let Some((a, b)) = order else {
            let shown = MilnorSymbol::from_entries(t.entries.clone())?;
            return Err(Error::NotInTameForm(format!("{shown} has no entry in U^{ep}")));
        };
        let d = t.entries[a].sub(&field.one());
        if above_e_prime(&field, d.vlow()) {
            continue;
        }
        let u = d.mul_uniformizer_pow(-ep).residue()?;
        let (m, w0) = t.entries[b].val_unit_split()?;
        if m % 2 != 0 {
            as_part = as_part.add(&u);
        }
        let v = reduce_mod_pth_powers(&w0.residue()?);
        if v.is_one() {
            continue;
        }
        match brauer.iter_mut().find(|(_, v2)| *v2 == v) {
            Some(entry) => entry.0 = entry.0.add(&u),
            None => brauer.push((u, v)),
        }
    }
    let brauer = brauer
        .into_iter()
        .filter(|(w, _)| !w.is_zero())
        .map(|(w, v)| CyclicPAlgebra::new(w, v))
        .collect::<Result<Vec<_>>>()?;
    let artin_schreier = (!as_part.is_zero()).then_some(as_part);
    Ok(TameParts { level: ep, brauer, artin_schreier })
}

pub(crate) fn e_prime_is(field: &Field, level: i64) -> bool {
    field.e_prime() == Ratio::from_integer(level)
}
