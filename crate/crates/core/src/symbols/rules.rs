//! Named rewrite rules on symbols and the replayable trace built from them.

use std::fmt;
use std::sync::Arc;

use super::ops::UnitExpansion;
use super::{above_e_prime, agrees, one_unit_level, MilnorSymbol, SymbolTerm};
use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::Field;

/// One rewrite. Every rule preserves the class in `K_n/p` (or its image in
/// `K_n(L)/p` for `BaseChange`).
#[derive(Clone, Debug)]
pub enum Rule {
    /// Restrict every entry to the extension field.
    BaseChange { to: Arc<Field> },
    /// `entry = Π f^k`: the term becomes one term per factor with
    /// coefficient multiplied by `k`.
    Multilinearity { term: usize, entry: usize, factors: Vec<(CdvfElement, i64)> },
    /// Divide the entry by `root^p`; drop the term if what is left lies in
    /// `U^m` with `m > e'`.
    PthPowerKill { term: usize, entry: usize, root: CdvfElement },
    /// Entries `i` and `j` satisfy `x_i + x_j = 1` or `x_i + x_j = 0`.
    Steinberg { term: usize, i: usize, j: usize },
    /// `{…, x, …, x, …} = {…, x, …, −1, …}`.
    RepeatedEntry { term: usize, i: usize, j: usize },
    /// Exchange two entries, negating the coefficient.
    Swap { term: usize, i: usize, j: usize },
    /// Merge term `b` into term `a` when their entries agree.
    Combine { a: usize, b: usize },
    /// `entry = S·residual` with `S = Σ a^p t^s π^j`: split into the two
    /// factors.
    UnitExpandSubstitution { term: usize, entry: usize, expansion: UnitExpansion },
    /// `entry = Σ b^p = c^p(1 + m)` with `c = Σ b`: replace it by `1 + m`.
    SumPthReduce { term: usize, entry: usize, witnesses: Vec<CdvfElement> },
    /// `{1+x, 1+y, …} = {1+xy, −x⁻¹, …}`, used only when
    /// `v(x) + v(y) + 1 > e'` so that the congruence is an equality.
    KatoRewrite { term: usize },
    /// `{1+x, π, …} = −i⁻¹·{1+x, −x/π^i, …}` for `i = v(x)` prime to p,
    /// from `{1+x, −x} = 0`.
    SteinbergTrade { term: usize },
    /// The entry lies in `U^m` with `m > e'`, so it is a p-th power.
    LevelKill { term: usize, entry: usize },
    /// Marks the point where the tame parts are read off; the symbol is
    /// unchanged.
    TameExtraction { level: i64 },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::BaseChange { .. } => "base-change",
            Rule::Multilinearity { .. } => "multilinearity",
            Rule::PthPowerKill { .. } => "pth-power-kill",
            Rule::Steinberg { .. } => "steinberg",
            Rule::RepeatedEntry { .. } => "repeated-entry",
            Rule::Swap { .. } => "swap",
            Rule::Combine { .. } => "combine",
            Rule::UnitExpandSubstitution { .. } => "unit-expand",
            Rule::SumPthReduce { .. } => "sum-pth-reduce",
            Rule::KatoRewrite { .. } => "kato-rewrite",
            Rule::SteinbergTrade { .. } => "steinberg-trade",
            Rule::LevelKill { .. } => "level-kill",
            Rule::TameExtraction { .. } => "tame-extraction",
        }
    }

    /// Apply to `s`, checking the rule's side conditions.
    pub fn apply(&self, s: &MilnorSymbol) -> Result<MilnorSymbol> {
        let fail = |m: String| Err(Error::Precondition(format!("{}: {m}", self.name())));
        let field = s.field().clone();
        let p = field.p();
        let mut out = s.clone();
        let term_at = |t: usize| s.terms().get(t).ok_or_else(|| Error::Precondition(format!("no term {t}")));
        let entry_at = |t: usize, k: usize| -> Result<&CdvfElement> {
            term_at(t)?.entries.get(k).ok_or_else(|| Error::Precondition(format!("no entry {k} in term {t}")))
        };
        match self {
            Rule::BaseChange { to } => {
                let mut terms = Vec::with_capacity(s.terms().len());
                for t in s.terms() {
                    let entries = t.entries.iter().map(|x| x.transport(to)).collect::<Result<Vec<_>>>()?;
                    terms.push(SymbolTerm { coeff: t.coeff, entries });
                }
                return Ok(s.with_field(to, terms));
            }
            Rule::Multilinearity { term, entry, factors } => {
                let x = entry_at(*term, *entry)?;
                let prod = factors.iter().try_fold(field.one(), |acc, (f, k)| f.pow(*k).map(|fk| acc.mul(&fk)))?;
                if !agrees(x, &prod) {
                    return fail(format!("{x} is not the product of the factors"));
                }
                let base = term_at(*term)?.clone();
                let new: Vec<SymbolTerm> = factors
                    .iter()
                    .filter_map(|(f, k)| {
                        let c = (base.coeff as i128 * *k as i128).rem_euclid(p as i128) as u64;
                        (c != 0).then(|| {
                            let mut entries = base.entries.clone();
                            entries[*entry] = f.clone();
                            SymbolTerm { coeff: c, entries }
                        })
                    })
                    .collect();
                out.terms_mut().splice(*term..=*term, new);
            }
            Rule::PthPowerKill { term, entry, root } => {
                let x = entry_at(*term, *entry)?;
                let y = x.div(&root.pow(p as i64)?)?;
                if one_unit_level(&y).is_some_and(|l| above_e_prime(&field, l)) {
                    out.terms_mut().remove(*term);
                } else {
                    out.terms_mut()[*term].entries[*entry] = y;
                }
            }
            Rule::Steinberg { term, i, j } => {
                let (x, y) = (entry_at(*term, *i)?, entry_at(*term, *j)?);
                let one_minus = field.one().sub(x);
                let holds = agrees(y, &x.neg()) || (!one_minus.is_zero_at_precision() && agrees(y, &one_minus));
                if i == j || !holds {
                    return fail(format!("{x} and {y} are not a Steinberg pair"));
                }
                out.terms_mut().remove(*term);
            }
            Rule::RepeatedEntry { term, i, j } => {
                if i == j || !agrees(entry_at(*term, *i)?, entry_at(*term, *j)?) {
                    return fail("entries differ".into());
                }
                out.terms_mut()[*term].entries[*j] = field.int(-1);
            }
            Rule::Swap { term, i, j } => {
                entry_at(*term, *i.max(j))?;
                if i == j {
                    return fail("swap needs two positions".into());
                }
                let t = &mut out.terms_mut()[*term];
                t.entries.swap(*i, *j);
                t.coeff = (p - t.coeff) % p;
                if t.coeff == 0 {
                    out.terms_mut().remove(*term);
                }
            }
            Rule::Combine { a, b } => {
                let (ta, tb) = (term_at(*a)?, term_at(*b)?);
                if a >= b || !ta.entries.iter().zip(&tb.entries).all(|(x, y)| agrees(x, y)) {
                    return fail("terms differ".into());
                }
                let c = (ta.coeff + tb.coeff) % p;
                out.terms_mut().remove(*b);
                if c == 0 {
                    out.terms_mut().remove(*a);
                } else {
                    out.terms_mut()[*a].coeff = c;
                }
            }
            Rule::UnitExpandSubstitution { term, entry, expansion } => {
                let x = entry_at(*term, *entry)?;
                let sum = expansion.sum()?;
                if !agrees(x, &sum.mul(&expansion.residual)) {
                    return fail(format!("{x} is not S·residual"));
                }
                let base = term_at(*term)?.clone();
                let mut with_sum = base.clone();
                with_sum.entries[*entry] = sum;
                let mut with_res = base;
                with_res.entries[*entry] = expansion.residual.clone();
                out.terms_mut().splice(*term..=*term, [with_sum, with_res]);
            }
            Rule::SumPthReduce { term, entry, witnesses } => {
                let x = entry_at(*term, *entry)?;
                let gamma = witnesses.iter().try_fold(field.zero(), |acc, b| b.pow(p as i64).map(|bp| acc.add(&bp)))?;
                if !agrees(x, &gamma) {
                    return fail(format!("{x} is not the sum of p-th powers of the witnesses"));
                }
                let c = witnesses.iter().fold(field.zero(), |acc, b| acc.add(b));
                out.terms_mut()[*term].entries[*entry] = x.div(&c.pow(p as i64)?)?;
            }
            Rule::KatoRewrite { term } => {
                let t = term_at(*term)?;
                if t.entries.len() < 2 {
                    return fail("needs two entries".into());
                }
                let x = t.entries[0].sub(&field.one());
                let y = t.entries[1].sub(&field.one());
                let (Some(i), Some(j)) = (x.valuation().exact(), y.valuation().exact()) else {
                    return fail("entries are 1 at precision".into());
                };
                if i < 1 || j < 1 || !above_e_prime(&field, i + j + 1) {
                    return fail(format!("levels {i} + {j} do not make the rewrite exact"));
                }
                let t = &mut out.terms_mut()[*term];
                t.entries[0] = field.one().add(&x.mul(&y));
                t.entries[1] = x.inv()?.neg();
            }
            Rule::SteinbergTrade { term } => {
                let t = term_at(*term)?;
                if t.entries.len() < 2 || !agrees(&t.entries[1], &field.uniformizer()) {
                    return fail("second entry is not the uniformizer".into());
                }
                let x = t.entries[0].sub(&field.one());
                let i = match x.valuation().exact() {
                    Some(i) if i >= 1 && i % p as i64 != 0 => i,
                    _ => return fail(format!("{} is not a 1-unit of level prime to p", t.entries[0])),
                };
                let inv_i = (1..p).find(|k| (k * i as u64) % p == 1).expect("i is prime to p");
                let t = &mut out.terms_mut()[*term];
                t.coeff = t.coeff * (p - inv_i) % p;
                t.entries[1] = x.mul_uniformizer_pow(-i).neg();
            }
            Rule::LevelKill { term, entry } => {
                let x = entry_at(*term, *entry)?;
                if !one_unit_level(x).is_some_and(|l| above_e_prime(&field, l)) {
                    return fail(format!("{x} is not in U^m for m > e'"));
                }
                out.terms_mut().remove(*term);
            }
            Rule::TameExtraction { .. } => {}
        }
        Ok(out)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::BaseChange { to } => write!(f, "base-change to {to}"),
            Rule::Multilinearity { term, entry, factors } => {
                let fs: Vec<String> = factors.iter().map(|(x, k)| format!("({x})^{k}")).collect();
                write!(f, "multilinearity term {term} entry {entry} = {}", fs.join("·"))
            }
            Rule::PthPowerKill { term, entry, root } => {
                write!(f, "pth-power-kill term {term} entry {entry} by ({root})^p")
            }
            Rule::Steinberg { term, i, j } => write!(f, "steinberg term {term} entries {i}, {j}"),
            Rule::RepeatedEntry { term, i, j } => write!(f, "repeated-entry term {term} entries {i}, {j}"),
            Rule::Swap { term, i, j } => write!(f, "swap term {term} entries {i}, {j}"),
            Rule::Combine { a, b } => write!(f, "combine terms {a}, {b}"),
            Rule::UnitExpandSubstitution { term, entry, expansion } => {
                write!(f, "unit-expand term {term} entry {entry}: {} pieces", expansion.terms.len())
            }
            Rule::SumPthReduce { term, entry, witnesses } => {
                let ws: Vec<String> = witnesses.iter().map(|w| w.to_string()).collect();
                write!(f, "sum-pth-reduce term {term} entry {entry} with b = [{}]", ws.join(", "))
            }
            Rule::KatoRewrite { term } => write!(f, "kato-rewrite term {term}"),
            Rule::SteinbergTrade { term } => write!(f, "steinberg-trade term {term}"),
            Rule::LevelKill { term, entry } => write!(f, "level-kill term {term} entry {entry}"),
            Rule::TameExtraction { level } => write!(f, "tame-extraction at level {level}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub rule: Rule,
    pub before: MilnorSymbol,
    pub after: MilnorSymbol,
}

/// Re-apply every rule and check that the steps chain.
pub fn replay(steps: &[Step]) -> Result<()> {
    for (k, step) in steps.iter().enumerate() {
        if k > 0 && !steps[k - 1].after.agrees_with(&step.before) {
            return Err(Error::Precondition(format!("step {k} does not start where step {} ended", k - 1)));
        }
        let redo = step.rule.apply(&step.before)?;
        if !redo.agrees_with(&step.after) {
            return Err(Error::Precondition(format!("step {k} ({}) does not reproduce its result", step.rule.name())));
        }
    }
    Ok(())
}

/// Applies rules to a running symbol and records each step.
pub(crate) struct Tracer {
    pub symbol: MilnorSymbol,
    pub steps: Vec<Step>,
}

impl Tracer {
    pub fn new(symbol: MilnorSymbol) -> Tracer {
        Tracer { symbol, steps: Vec::new() }
    }

    pub fn apply(&mut self, rule: Rule) -> Result<()> {
        let after = rule.apply(&self.symbol)?;
        let before = std::mem::replace(&mut self.symbol, after.clone());
        self.steps.push(Step { rule, before, after });
        Ok(())
    }
}
