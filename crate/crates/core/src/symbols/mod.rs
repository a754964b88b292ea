//! Milnor K-theory symbols modulo p: a symbol is a formal `Z/p`-combination
//! of terms `{x_1, …, x_n}` with entries in a modeled field.

mod ladder;
mod ops;
mod pipeline;
mod rules;

pub use ladder::{pth_power_ladder, Ladder, PthPowerStatus};
pub use ops::{
    filtration_certificate, iota2, kato_rewrite, normalize, normalize_traced, sum_pth_reduce, tame_extract, unit_expand,
    Exactness, ExpansionTerm, FiltrationCertificate, IotaTarget, TameParts, UnitExpansion,
};
pub use pipeline::{
    split_by_pseudoperfect, ObstructionClass, Outcome, SplitCertificate, SplitOptions, TameReport, TameVerdict,
};
pub use rules::{replay, Rule, Step};

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Clone, Debug)]
pub struct SymbolTerm {
    /// Coefficient in `[0, p)`.
    pub coeff: u64,
    pub entries: Vec<CdvfElement>,
}

#[derive(Clone, Debug)]
pub struct MilnorSymbol {
    field: Arc<Field>,
    arity: usize,
    terms: Vec<SymbolTerm>,
}

impl MilnorSymbol {
    pub fn zero(field: &Arc<Field>, arity: usize) -> MilnorSymbol {
        MilnorSymbol { field: field.clone(), arity, terms: Vec::new() }
    }

    /// The single term `{entries}`.
    pub fn from_entries(entries: Vec<CdvfElement>) -> Result<MilnorSymbol> {
        let field = entries.first().ok_or(Error::Precondition("a symbol needs at least one entry".into()))?.field().clone();
        if entries.iter().any(|x| **x.field() != *field) {
            return Err(Error::FieldMismatch);
        }
        Ok(MilnorSymbol { field, arity: entries.len(), terms: vec![SymbolTerm { coeff: 1, entries }] })
    }

    /// Build from terms, reducing coefficients mod p and dropping zero ones.
    pub fn from_terms(field: &Arc<Field>, arity: usize, terms: Vec<SymbolTerm>) -> Result<MilnorSymbol> {
        let p = field.p();
        let mut out = MilnorSymbol::zero(field, arity);
        for mut t in terms {
            if t.entries.len() != arity {
                return Err(Error::Precondition(format!("term of arity {} in a symbol of arity {arity}", t.entries.len())));
            }
            if t.entries.iter().any(|x| **x.field() != **field) {
                return Err(Error::FieldMismatch);
            }
            t.coeff %= p;
            if t.coeff != 0 {
                out.terms.push(t);
            }
        }
        Ok(out)
    }

    /// Parse text such as `{3, 5}` or `2{1+a, b} - {a, 2}`.
    pub fn parse(field: &Arc<Field>, s: &str) -> Result<MilnorSymbol> {
        let p = field.p() as i128;
        let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        let bytes: Vec<(usize, char)> = s.char_indices().collect();
        let mut i = 0;
        let skip_ws = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].1.is_whitespace() {
                *i += 1;
            }
        };
        let pos_of = |i: usize| bytes.get(i).map_or(s.len(), |b| b.0);
        let mut terms = Vec::new();
        let mut arity = None;
        loop {
            skip_ws(&mut i);
            if i == bytes.len() {
                break;
            }
            let mut sign = 1;
            if bytes[i].1 == '+' || bytes[i].1 == '-' {
                if bytes[i].1 == '-' {
                    sign = -1;
                }
                i += 1;
                skip_ws(&mut i);
            } else if !terms.is_empty() {
                return Err(err(pos_of(i), "expected + or - between terms"));
            }
            let start = i;
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            let coeff: i128 = if i > start {
                let digits: String = bytes[start..i].iter().map(|b| b.1).collect();
                digits.parse().map_err(|_| err(pos_of(start), "coefficient too large"))?
            } else {
                1
            };
            skip_ws(&mut i);
            if i < bytes.len() && bytes[i].1 == '*' {
                i += 1;
                skip_ws(&mut i);
            }
            if i == bytes.len() || bytes[i].1 != '{' {
                return Err(err(pos_of(i), "expected {"));
            }
            i += 1;
            let mut depth = 0i32;
            let mut entry_start = i;
            let mut entries = Vec::new();
            loop {
                if i == bytes.len() {
                    return Err(err(s.len(), "unclosed {"));
                }
                let c = bytes[i].1;
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' | '}' if depth == 0 => {
                        let text = &s[pos_of(entry_start)..pos_of(i)];
                        if text.trim().is_empty() {
                            return Err(err(pos_of(entry_start), "empty symbol entry"));
                        }
                        let x = field.parse(text).map_err(|e| match e {
                            Error::Parse { pos, msg } => Error::Parse { pos: pos + pos_of(entry_start), msg },
                            other => other,
                        })?;
                        entries.push(x);
                        entry_start = i + 1;
                        if c == '}' {
                            i += 1;
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            match arity {
                None => arity = Some(entries.len()),
                Some(n) if n != entries.len() => return Err(err(pos_of(start), "terms of different arity")),
                _ => {}
            }
            let coeff = (sign * coeff).rem_euclid(p) as u64;
            terms.push(SymbolTerm { coeff, entries });
        }
        let arity = arity.ok_or_else(|| err(0, "empty symbol"))?;
        MilnorSymbol::from_terms(field, arity, terms)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// No terms left. Says nothing about the class of a nonempty symbol.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term-for-term agreement: same coefficients, entries equal at the
    /// available precision.
    pub fn agrees_with(&self, o: &MilnorSymbol) -> bool {
        *self.field == *o.field
            && self.arity == o.arity
            && self.terms.len() == o.terms.len()
            && self.terms.iter().zip(&o.terms).all(|(a, b)| {
                a.coeff == b.coeff && a.entries.iter().zip(&b.entries).all(|(x, y)| agrees(x, y))
            })
    }

    pub(crate) fn terms_mut(&mut self) -> &mut Vec<SymbolTerm> {
        &mut self.terms
    }

    pub(crate) fn with_field(&self, field: &Arc<Field>, terms: Vec<SymbolTerm>) -> MilnorSymbol {
        MilnorSymbol { field: field.clone(), arity: self.arity, terms }
    }
}

impl fmt::Display for MilnorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if t.coeff != 1 {
                write!(f, "{}", t.coeff)?;
            }
            let parts: Vec<String> = t.entries.iter().map(CdvfElement::render).collect();
            write!(f, "{{{}}}", parts.join(", "))?;
        }
        Ok(())
    }
}

/// Equality that is good enough for classes mod p-th powers: `a = b·w` with
/// `w ∈ U^m`, `m > e'`, known at the available precision.
pub(crate) fn agrees(a: &CdvfElement, b: &CdvfElement) -> bool {
    let Some(va) = a.valuation().exact() else { return false };
    let prec = a.prec().min(b.prec());
    let d = a.sub(b);
    d.vlow() >= prec && Ratio::from_integer(prec - va) > a.field().e_prime()
}

/// `v(x − 1)`, capped at the precision for elements equal to 1.
pub(crate) fn one_unit_level(x: &CdvfElement) -> Option<i64> {
    if !x.is_unit() {
        return None;
    }
    let d = x.sub(&x.field().one());
    let v = d.vlow();
    (v >= 1).then_some(v)
}

pub fn above_e_prime(field: &Field, level: i64) -> bool {
    Ratio::from_integer(level) > field.e_prime()
}
