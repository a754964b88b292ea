//! Restriction of a symbol to a pseudo-perfect extension, with a replayable
//! certificate of the outcome.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use super::ladder::{pth_power_ladder, PthPowerStatus};
use super::ops::{e_prime_is, normalize_into, tame_extract, unit_expand, TameParts, UnitExpansion};
use super::rules::{replay, Rule, Step, Tracer};
use super::{above_e_prime, agrees, one_unit_level, MilnorSymbol};
use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::hensel::pth_root_1unit;
use crate::poly::{Mono, Poly};
use crate::pseudo_perfect::{build_pp_extension, PpExtension, PseudoBasis};
use crate::residue::{artin_schreier_root, cyclic_split_check, CyclicPAlgebra, ResidueElement, SplitCheck, SplitWitness};

#[derive(Clone, Copy, Debug)]
pub struct SplitOptions {
    /// Per-variable degree bound for splitting witnesses of residue
    /// algebras.
    pub split_bound: u32,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { split_bound: 3 }
    }
}

#[derive(Clone, Debug)]
pub enum ObstructionClass {
    /// A residue algebra with no splitting witness up to `searched_bound`.
    Cyclic { algebra: CyclicPAlgebra, searched_bound: u32 },
    /// A class of `κ/℘(κ)` that is not in the image of `℘`.
    ArtinSchreier { class: ResidueElement },
}

impl fmt::Display for ObstructionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObstructionClass::Cyclic { algebra, .. } => write!(f, "{algebra}"),
            ObstructionClass::ArtinSchreier { class } => write!(f, "AS({})", class.display_factored()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Trivialized,
    Obstruction(Vec<ObstructionClass>),
    Inconclusive(String),
}

impl Outcome {
    pub fn is_trivialized(&self) -> bool {
        matches!(self, Outcome::Trivialized)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Trivialized => f.write_str("Trivialized"),
            Outcome::Obstruction(classes) => {
                let cs: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
                write!(f, "Obstruction {}", cs.join(" + "))
            }
            Outcome::Inconclusive(why) => write!(f, "Inconclusive: {why}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum TameVerdict {
    Split(SplitWitness),
    /// The descriptor asserts `Br_p(κ) = 0`.
    TrivialByFlag,
    NotSplitWithinBound(u32),
    /// Artin–Schreier part: `z^p − z` equals the class.
    InImageOfP(ResidueElement),
    NotInImageOfP,
}

#[derive(Clone, Debug)]
pub struct TameReport {
    pub parts: TameParts,
    pub brauer: Vec<TameVerdict>,
    pub artin_schreier: Option<TameVerdict>,
}

#[derive(Clone, Debug)]
pub struct SplitCertificate {
    pub input: MilnorSymbol,
    pub basis: String,
    pub extension: PpExtension,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub tame: Option<TameReport>,
}

impl SplitCertificate {
    /// The symbol after the last step.
    pub fn final_symbol(&self) -> &MilnorSymbol {
        self.steps.last().map_or(&self.input, |s| &s.after)
    }

    /// Re-run every step and check that the outcome matches what is left.
    pub fn replay(&self) -> Result<()> {
        if let Some(first) = self.steps.first() {
            if !first.before.agrees_with(&self.input) {
                return Err(Error::Precondition("trace does not start at the input".into()));
            }
        }
        replay(&self.steps)?;
        let rest = self.final_symbol();
        match (&self.outcome, &self.tame) {
            (Outcome::Trivialized, None) if !rest.is_empty() => {
                Err(Error::Precondition(format!("trivialized but {rest} remains")))
            }
            (Outcome::Trivialized | Outcome::Obstruction(_), Some(report)) => {
                let again = tame_extract(rest)?;
                let same = again.brauer == report.parts.brauer && again.artin_schreier == report.parts.artin_schreier;
                if !same {
                    return Err(Error::Precondition("tame parts do not match the final symbol".into()));
                }
                for (alg, verdict) in report.parts.brauer.iter().zip(&report.brauer) {
                    if let TameVerdict::Split(w) = verdict {
                        if !crate::residue::verify_witness(alg, w) {
                            return Err(Error::Precondition(format!("bad splitting witness for {alg}")));
                        }
                    }
                }
                if let (Some(c), Some(TameVerdict::InImageOfP(z))) = (&report.parts.artin_schreier, &report.artin_schreier) {
                    if z.pow(c.p() as i64)?.sub(z) != *c {
                        return Err(Error::Precondition("bad Artin–Schreier root".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Restrict `s` to `L = K(Λ^{1/p^ℓ})` and decide whether it dies there.
///
/// Over `K`, each unit entry is written as a sum of p-th powers of elements
/// of `L` times a deep 1-unit; in `L` the sum collapses to a 1-unit of level
/// at least `e_L`. Kato's rewrite then pushes every term past `e'_L` except,
/// at p = 2, terms sitting exactly at `e'_L`, which are read off as residue
/// classes and checked for splitting.
pub fn split_by_pseudoperfect(s: &MilnorSymbol, basis: &PseudoBasis, opts: &SplitOptions) -> Result<SplitCertificate> {
    let k = s.field().clone();
    if **basis.field() != *k {
        return Err(Error::InvalidPseudoBasis("pseudo-basis is over a different field".into()));
    }
    let ext = build_pp_extension(k.descriptor(), basis)?;
    let level = basis.level();
    let mut tr = Tracer::new(s.clone());
    normalize_into(&mut tr)?;
    let l = if level == 0 {
        k.clone()
    } else {
        let l = Field::new(ext.descriptor.clone())?;
        let expansions = expand_entries(&mut tr)?;
        tr.apply(Rule::BaseChange { to: l.clone() })?;
        reduce_sums(&mut tr, &k, &l, expansions)?;
        l
    };
    let mut tame_terms = false;
    let mut stalled: Option<String> = None;
    let mut t = 0;
    while t < tr.symbol.terms().len() {
        match fold_term(&mut tr, t)? {
            Fold::Killed => continue,
            Fold::Stalled(lvl) if lvl >= 1 && e_prime_is(&l, lvl) && l.p() == 2 => {
                let n = tr.symbol.arity();
                if n != 2 {
                    if level > 0 {
                        return Err(Error::ArityUnsupported(n));
                    }
                    stalled.get_or_insert(format!("arity {n} term at the tame level {lvl}"));
                }
                tame_terms = true;
            }
            Fold::Stalled(lvl) => {
                stalled.get_or_insert(format!("a term stops at level {lvl}, below e' = {}", l.e_prime()));
            }
        }
        t += 1;
    }
    let (outcome, tame) = if let Some(why) = stalled {
        (Outcome::Inconclusive(why), None)
    } else if !tame_terms {
        (Outcome::Trivialized, None)
    } else {
        let lvl = l.e_prime().to_integer();
        tr.apply(Rule::TameExtraction { level: lvl })?;
        decide_tame(&l, tame_extract(&tr.symbol)?, opts)
    };
    Ok(SplitCertificate { input: s.clone(), basis: basis.to_string(), extension: ext, steps: tr.steps, outcome, tame })
}

/// Split every unit entry over `K` into `Σ a^p t^s π^j` and a deep 1-unit,
/// killing the latter. Returns the expansions per term and entry.
fn expand_entries(tr: &mut Tracer) -> Result<Vec<Vec<Option<UnitExpansion>>>> {
    let k = tr.symbol.field().clone();
    let n = tr.symbol.arity();
    let top = k.e_prime().ceil().to_integer() + 1;
    let mut all = Vec::new();
    for t in 0..tr.symbol.terms().len() {
        let mut row = Vec::with_capacity(n);
        for entry in 0..n {
            let x = tr.symbol.terms()[t].entries[entry].clone();
            if !x.is_unit() {
                row.push(None);
                continue;
            }
            let expansion = unit_expand(&x)?;
            let root = pth_root_1unit(&expansion.residual, top)?;
            let count = tr.symbol.terms().len();
            tr.apply(Rule::UnitExpandSubstitution { term: t, entry, expansion: expansion.clone() })?;
            tr.apply(Rule::PthPowerKill { term: t + 1, entry, root })?;
            if tr.symbol.terms().len() != count {
                return Err(Error::PrecisionExhausted("residual of a unit expansion did not vanish".into()));
            }
            row.push(Some(expansion));
        }
        all.push(row);
    }
    Ok(all)
}

/// `t^{s/p}·π_K^{j/p}` in `L`.
fn root_of_basis_piece(k: &Arc<Field>, l: &Arc<Field>, s: &[u32], j: i64) -> Result<CdvfElement> {
    let p = k.p() as u32;
    let mut mono = Mono::ONE;
    for (i, &si) in s.iter().enumerate() {
        if si == 0 {
            continue;
        }
        let img = l.name_image(&k.var_names()[i]).ok_or(Error::FieldMismatch)?;
        let [(m, 1)] = img.terms() else { return Err(Error::FieldMismatch) };
        let nv = l.nvars() + 1;
        let exps: Vec<u32> = m.exps(nv).iter().map(|&x| x / p * si).collect();
        mono = mono.mul(Mono::from_exps(&exps));
    }
    let t = CdvfElement::exact(l, Poly::monomial(l.modulus(), mono, 1));
    let r = (l.e() / k.e()) as i64;
    Ok(t.mul_uniformizer_pow(j * r / p as i64))
}

/// In `L`: kill uniformizer entries of `K` (they are p-th powers) and turn
/// each expanded entry into the 1-unit `Σ b^p / (Σ b)^p`.
fn reduce_sums(
    tr: &mut Tracer,
    k: &Arc<Field>,
    l: &Arc<Field>,
    mut expansions: Vec<Vec<Option<UnitExpansion>>>,
) -> Result<()> {
    let p = l.p() as i64;
    let r = l.e() / k.e();
    let mut t = 0;
    while t < tr.symbol.terms().len() {
        let n = tr.symbol.arity();
        let pi_entry = (0..n).find(|&i| !tr.symbol.terms()[t].entries[i].is_unit());
        if let Some(entry) = pi_entry {
            let root = l.uniformizer_pow(r / p);
            tr.apply(Rule::PthPowerKill { term: t, entry, root })?;
            expansions.remove(t);
            continue;
        }
        for entry in 0..n {
            let Some(exp) = &expansions[t][entry] else { continue };
            let witnesses = exp
                .terms
                .iter()
                .map(|piece| Ok(piece.a.transport(l)?.mul(&root_of_basis_piece(k, l, &piece.s, piece.j)?)))
                .collect::<Result<Vec<_>>>()?;
            tr.apply(Rule::SumPthReduce { term: t, entry, witnesses })?;
        }
        t += 1;
    }
    Ok(())
}

enum Fold {
    Killed,
    /// The term survives with its first entry at this level (0 if it is not
    /// a 1-unit).
    Stalled(i64),
}

/// Raise every unit entry with the ladder, then fold pairs of 1-units with
/// Kato's rewrite until the first entry passes `e'` or no pair is left.
fn fold_term(tr: &mut Tracer, t: usize) -> Result<Fold> {
    let field = tr.symbol.field().clone();
    let n = tr.symbol.arity();
    for entry in 0..n {
        if climb(tr, t, entry)? {
            return Ok(Fold::Killed);
        }
    }
    let level_of = |tr: &Tracer, i: usize| one_unit_level(&tr.symbol.terms()[t].entries[i]).unwrap_or(0);
    loop {
        let Some(a) = (0..n).find(|&i| level_of(tr, i) >= 1) else { return Ok(Fold::Stalled(0)) };
        if a != 0 {
            tr.apply(Rule::Swap { term: t, i: 0, j: a })?;
        }
        let i = level_of(tr, 0);
        if above_e_prime(&field, i) {
            tr.apply(Rule::LevelKill { term: t, entry: 0 })?;
            return Ok(Fold::Killed);
        }
        let b = (1..n).find(|&j| level_of(tr, j) >= 1);
        let Some(b) = b.filter(|&b| above_e_prime(&field, i + level_of(tr, b) + 1)) else {
            if Ratio::from_integer(i) < field.e_prime() && trade_uniformizer(tr, t)? {
                if climb(tr, t, 1)? {
                    return Ok(Fold::Killed);
                }
                continue;
            }
            return Ok(Fold::Stalled(i));
        };
        if b != 1 {
            tr.apply(Rule::Swap { term: t, i: 1, j: b })?;
        }
        tr.apply(Rule::KatoRewrite { term: t })?;
        if climb(tr, t, 0)? {
            return Ok(Fold::Killed);
        }
    }
}

/// With a 1-unit `1+x` first, replace a non-unit entry by a unit: split it
/// as `π^m·u`, then trade `π` for `−x/π^{v(x)}`. Returns whether anything
/// changed.
fn trade_uniformizer(tr: &mut Tracer, t: usize) -> Result<bool> {
    let field = tr.symbol.field().clone();
    let p = field.p() as i64;
    let entries = &tr.symbol.terms()[t].entries;
    let i = one_unit_level(&entries[0]).unwrap_or(0);
    let Some(k) = (1..entries.len()).find(|&k| !entries[k].is_unit()) else { return Ok(false) };
    if i % p == 0 {
        return Ok(false);
    }
    if k != 1 {
        tr.apply(Rule::Swap { term: t, i: 1, j: k })?;
    }
    let z = tr.symbol.terms()[t].entries[1].clone();
    if !agrees(&z, &field.uniformizer()) {
        let (m, u) = z.val_unit_split()?;
        tr.apply(Rule::Multilinearity { term: t, entry: 1, factors: vec![(field.uniformizer(), m), (u, 1)] })?;
        if m % p == 0 {
            return Ok(true);
        }
    }
    tr.apply(Rule::SteinbergTrade { term: t })?;
    Ok(true)
}

/// Divide a unit entry by the largest p-th power the ladder finds. Returns
/// whether the term died.
fn climb(tr: &mut Tracer, t: usize, entry: usize) -> Result<bool> {
    let x = tr.symbol.terms()[t].entries[entry].clone();
    if !x.is_unit() {
        return Ok(false);
    }
    let l = pth_power_ladder(&x)?;
    if l.status == PthPowerStatus::PthPower || !agrees(&l.root, &x.field().one()) {
        let before = tr.symbol.terms().len();
        tr.apply(Rule::PthPowerKill { term: t, entry, root: l.root })?;
        return Ok(tr.symbol.terms().len() < before);
    }
    Ok(false)
}

fn decide_tame(l: &Arc<Field>, parts: TameParts, opts: &SplitOptions) -> (Outcome, Option<TameReport>) {
    let mut classes = Vec::new();
    let mut brauer = Vec::new();
    for alg in &parts.brauer {
        let verdict = if l.descriptor().residue_brauer_p_trivial() {
            TameVerdict::TrivialByFlag
        } else {
            match cyclic_split_check(alg, opts.split_bound) {
                SplitCheck::Split(w) => TameVerdict::Split(w),
                SplitCheck::NotSplitWithinBound { bound } => {
                    classes.push(ObstructionClass::Cyclic { algebra: alg.clone(), searched_bound: bound });
                    TameVerdict::NotSplitWithinBound(bound)
                }
            }
        };
        brauer.push(verdict);
    }
    let artin_schreier = parts.artin_schreier.as_ref().map(|c| match artin_schreier_root(c) {
        Some(z) => TameVerdict::InImageOfP(z),
        None => {
            classes.push(ObstructionClass::ArtinSchreier { class: c.clone() });
            TameVerdict::NotInImageOfP
        }
    });
    let outcome = if classes.is_empty() { Outcome::Trivialized } else { Outcome::Obstruction(classes) };
    (outcome, Some(TameReport { parts, brauer, artin_schreier }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(field: &str, symbol: &str, basis: &str, level: u32) -> SplitCertificate {
        let k = Field::from_toml(field).unwrap();
        let s = MilnorSymbol::parse(&k, symbol).unwrap();
        let b = PseudoBasis::parse(&k, basis, level).unwrap();
        let cert = split_by_pseudoperfect(&s, &b, &SplitOptions::default()).unwrap();
        cert.replay().unwrap();
        cert
    }

    #[test]
    fn three_three_over_q2() {
        let q2 = "prime = 2\nresidue_brauer_p_trivial = true\n";
        let cert = run(q2, "{3, 3}", "2", 1);
        assert!(cert.outcome.is_trivialized(), "{}", cert.outcome);
        let cert = run(q2, "{3, 3}", "2", 0);
        let Outcome::Obstruction(classes) = &cert.outcome else { panic!("{}", cert.outcome) };
        assert_eq!(classes.len(), 1);
        assert!(matches!(&classes[0], ObstructionClass::ArtinSchreier { class } if class.is_one()));
        assert_eq!(cert.tame.as_ref().unwrap().parts.level, 2);
    }

    #[test]
    fn two_variable_obstruction() {
        let f = "prime = 2\nresidue_vars = [\"a\", \"b\"]\n";
        let cert = run(f, "{1+a, 1+b}", "a,b,2", 1);
        let Outcome::Obstruction(classes) = &cert.outcome else { panic!("{}", cert.outcome) };
        assert_eq!(classes[0].to_string(), "[√a√b(1+√a)^{-2}(1+√b)^{-2}, √a)");
        let names: Vec<&str> = cert.steps.iter().map(|s| s.rule.name()).collect();
        for rule in ["unit-expand", "base-change", "sum-pth-reduce", "kato-rewrite", "tame-extraction"] {
            assert!(names.contains(&rule), "{names:?}");
        }
    }

    #[test]
    fn flag_trivializes_the_residue_part() {
        let f = "prime = 2\nresidue_vars = [\"a\", \"b\"]\nresidue_brauer_p_trivial = true\n";
        assert!(run(f, "{1+a, 1+b}", "a,b,2", 1).outcome.is_trivialized());
    }

    #[test]
    fn odd_prime_and_higher_arity() {
        let cert = run("prime = 3\nresidue_vars = [\"t\"]\n", "{1+t, t+2}", "t,3", 1);
        assert!(cert.outcome.is_trivialized(), "{}", cert.outcome);
        let cert = run("prime = 2\nresidue_vars = [\"t\"]\n", "{1+t, t, 3+t^2}", "t,2", 1);
        assert!(cert.outcome.is_trivialized(), "{}", cert.outcome);
    }
}
