//! Pseudo-bases, pseudo-perfect extensions and the period-index bound
//! formulas driven by the pseudo-rank.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::{log_p, Field, FieldDescriptor, TowerKind, TowerRecord};
use crate::poly::Poly;

/// A lift of a residue p-basis together with a uniformizer, with the root
/// level `ℓ` used to build `K(Λ^{1/p^ℓ})`.
///
/// Only the model's own generators are accepted: the unit lifts must be
/// exactly the current residue generators (in any order) and the
/// uniformizer must be the current uniformizer.
#[derive(Clone, Debug)]
pub struct PseudoBasis {
    field: Arc<Field>,
    unit_lifts: Vec<usize>,
    level: u32,
}

impl PseudoBasis {
    pub fn new(field: &Arc<Field>, unit_lifts: &[CdvfElement], uniformizer: &CdvfElement, level: u32) -> Result<PseudoBasis> {
        let bad = |m: String| Err(Error::InvalidPseudoBasis(m));
        let m = field.modulus();
        let mut idx = Vec::new();
        for x in unit_lifts {
            let var = (0..field.nvars()).find(|&i| {
                x.vlow() == 0 && x.den().is_one() && *x.num() == Poly::var(m, i) && x.valuation().exact() == Some(0)
            });
            match var {
                Some(i) if !idx.contains(&i) => idx.push(i),
                Some(i) => return bad(format!("generator {} listed twice", field.var_names()[i])),
                None => return bad(format!("{x} is not one of the residue generators {:?}", field.var_names())),
            }
        }
        if idx.len() != field.nvars() {
            return bad(format!(
                "unit lifts must cover the p-basis {:?} of the residue field",
                field.var_names()
            ));
        }
        if !(uniformizer.valuation().exact() == Some(1) && uniformizer.eq_at_precision(&field.uniformizer())) {
            return bad(format!("{uniformizer} is not the uniformizer {}", field.uniformizer_name()));
        }
        Ok(PseudoBasis { field: field.clone(), unit_lifts: idx, level })
    }

    /// All residue generators plus the uniformizer.
    pub fn standard(field: &Arc<Field>, level: u32) -> PseudoBasis {
        PseudoBasis { field: field.clone(), unit_lifts: (0..field.nvars()).collect(), level }
    }

    /// Parse a comma-separated list such as `a,b,2`.
    pub fn parse(field: &Arc<Field>, list: &str, level: u32) -> Result<PseudoBasis> {
        let mut lifts = Vec::new();
        let mut uni = None;
        for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let x = field.parse(part)?;
            match x.valuation().exact() {
                Some(0) => lifts.push(x),
                Some(1) if uni.is_none() => uni = Some(x),
                _ => return Err(Error::InvalidPseudoBasis(format!("{part} is neither a unit nor a uniformizer"))),
            }
        }
        let uni = uni.ok_or_else(|| Error::InvalidPseudoBasis("no uniformizer given".into()))?;
        PseudoBasis::new(field, &lifts, &uni, level)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Model variable indices of the unit lifts, in the given order.
    pub fn unit_lift_vars(&self) -> &[usize] {
        &self.unit_lifts
    }

    pub fn with_level(&self, level: u32) -> PseudoBasis {
        PseudoBasis { level, ..self.clone() }
    }
}

impl fmt::Display for PseudoBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&str> = self.unit_lifts.iter().map(|&i| self.field.var_names()[i].as_str()).collect();
        names.push(self.field.uniformizer_name());
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// `R_ps = R_p(κ) + dim R`; the p-rank of `F_p(t_1..t_n)` is `n`.
pub fn pseudo_rank(d: &FieldDescriptor, ring_dim: u32) -> Result<u32> {
    if ring_dim < 1 {
        return Err(Error::Precondition("ring dimension must be at least 1".into()));
    }
    Ok(d.residue_vars().len() as u32 + ring_dim)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PpExtension {
    pub descriptor: FieldDescriptor,
    /// `[L:K] = p^{ℓ·R_ps}`.
    pub degree: u64,
    pub e: i64,
    pub level: u32,
    /// Set for `ℓ > 1`, where the degree follows from iterating the
    /// level-1 count rather than being stated directly.
    pub degree_is_derived: bool,
}

/// `L = K(Λ^{1/p^ℓ})`: a root of each unit lift, then a root of the
/// uniformizer. Precision is scaled so that `K`-precision survives the
/// inclusion.
pub fn build_pp_extension(d: &FieldDescriptor, basis: &PseudoBasis) -> Result<PpExtension> {
    let field = basis.field();
    if field.descriptor() != d {
        return Err(Error::InvalidPseudoBasis("pseudo-basis belongs to a different descriptor".into()));
    }
    let p = d.prime();
    let l = basis.level();
    if l == 0 {
        return Ok(PpExtension { descriptor: d.clone(), degree: 1, e: d.e(), level: 0, degree_is_derived: false });
    }
    let deg = p.checked_pow(l).ok_or_else(|| Error::Precondition("root degree overflows".into()))?;
    let mut records: Vec<TowerRecord> =
        basis.unit_lift_vars().iter().map(|&i| TowerRecord::root_of_unit(&field.var_names()[i], deg)).collect();
    records.push(TowerRecord::root_of_uniformizer(deg));
    let draft = d.extended(&records, None)?;
    let n = (d.precision() * deg as i64).max(draft.default_precision());
    let descriptor = draft.with_precision(n)?;
    let r_ps = pseudo_rank(d, 1)?;
    let degree = p
        .checked_pow(l * r_ps)
        .ok_or_else(|| Error::Precondition("extension degree overflows".into()))?;
    Ok(PpExtension { e: descriptor.e(), descriptor, degree, level: l, degree_is_derived: l > 1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PpStatus {
    PreservedInPP,
    NotApplicable,
}

/// Whether `L·E` stays pseudo-perfect over `E` for an extension `E/K` of
/// degree `ext_degree`: it does when the degree is prime to p.
pub fn coprime_compositum(d: &FieldDescriptor, ext_degree: u64, l: &FieldDescriptor) -> PpStatus {
    let level_one = is_level_one_pp(d, l);
    if level_one && ext_degree > 0 && gcd(ext_degree, d.prime()) == 1 {
        PpStatus::PreservedInPP
    } else {
        PpStatus::NotApplicable
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `l` extends `d` by p-th roots of every residue generator and then of the
/// uniformizer.
fn is_level_one_pp(d: &FieldDescriptor, l: &FieldDescriptor) -> bool {
    let p = d.prime();
    let Some(extra) = l.tower().strip_prefix(d.tower()) else { return false };
    if l.prime() != p || l.residue_vars() != d.residue_vars() || extra.is_empty() {
        return false;
    }
    let (last, units) = extra.split_last().unwrap();
    let Ok(field) = Field::new(d.clone()) else { return false };
    let mut seen: Vec<&str> = Vec::new();
    for r in units {
        let el = r.element.as_deref().unwrap_or("");
        if r.kind != TowerKind::RootOfUnit || r.degree != p || !field.var_names().iter().any(|v| v == el) || seen.contains(&el) {
            return false;
        }
        seen.push(el);
    }
    seen.len() == field.nvars() && last.kind == TowerKind::RootOfUniformizer && last.degree == p
}

/// `[F(ζ_p):F]·p^exponent`, with the field degree left symbolic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct UniformBound {
    pub p: u64,
    pub exponent: u32,
}

impl fmt::Display for UniformBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[F(ζ_{}):F]·{}^{}", self.p, self.p, self.exponent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub prime: u64,
    pub pseudo_rank: u32,
    /// `R_p(κ)`, a known lower bound for the Brauer p-dimension.
    pub br_p_dim_lower: u32,
    pub br_p_dim_upper: u32,
    /// Upper bound for `gssd^i_p(K)`, every `i ≥ 2`.
    pub gssd_upper: u32,
    pub semiglobal_br_upper: Option<u32>,
    pub semiglobal_gssd2_upper: Option<u32>,
    pub uniform_bound: Option<UniformBound>,
    /// At p = 2 the upper bounds need `H²(κ, Z/2(1)) = 0`; set when the
    /// descriptor does not assert it.
    pub conditional_at_2: bool,
}

pub fn bounds(d: &FieldDescriptor, ring_dim: u32, semiglobal: bool) -> Result<BoundsReport> {
    let r = pseudo_rank(d, ring_dim)?;
    let p = d.prime();
    Ok(BoundsReport {
        prime: p,
        pseudo_rank: r,
        br_p_dim_lower: d.residue_vars().len() as u32,
        br_p_dim_upper: r,
        gssd_upper: r,
        semiglobal_br_upper: semiglobal.then_some(r + 1),
        semiglobal_gssd2_upper: semiglobal.then_some(2 * (r + 1)),
        uniform_bound: semiglobal.then_some(UniformBound { p, exponent: 2 * (r + 1) }),
        conditional_at_2: p == 2 && !d.residue_brauer_p_trivial(),
    })
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cond = if self.conditional_at_2 { " (conditional: needs H^2(κ, Z/2(1)) = 0)" } else { "" };
        let p = self.prime;
        writeln!(f, "pseudo-rank R_ps = {}", self.pseudo_rank)?;
        writeln!(f, "Br_{p} dim in [{}, {}]{cond}", self.br_p_dim_lower, self.br_p_dim_upper)?;
        writeln!(f, "gssd^i_{p} <= {} for i >= 2{cond}", self.gssd_upper)?;
        if let (Some(b), Some(g), Some(u)) = (self.semiglobal_br_upper, self.semiglobal_gssd2_upper, self.uniform_bound) {
            writeln!(f, "semi-global Br_{p} dim <= {b}{cond}")?;
            writeln!(f, "semi-global gssd^2_{p} <= {g}{cond}")?;
            writeln!(f, "uniform bound {u}{cond}")?;
        }
        Ok(())
    }
}

/// `log_p` of the recorded degree, for checks against `p^{R_ps}`.
pub fn degree_exponent(ext: &PpExtension, p: u64) -> Option<u32> {
    log_p(ext.degree, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(s: &str) -> FieldDescriptor {
        FieldDescriptor::from_toml(s).unwrap()
    }

    #[test]
    fn pseudo_rank_examples() {
        assert_eq!(pseudo_rank(&desc("prime = 2\n"), 1).unwrap(), 1);
        assert_eq!(pseudo_rank(&desc("prime = 2\nresidue_vars = [\"a\", \"b\"]\n"), 1).unwrap(), 3);
        assert_eq!(pseudo_rank(&desc("prime = 3\n"), 2).unwrap(), 2);
    }

    #[test]
    fn q2_extension() {
        let d = desc("prime = 2\n");
        let f = Field::new(d.clone()).unwrap();
        let basis = PseudoBasis::parse(&f, "2", 1).unwrap();
        let ext = build_pp_extension(&d, &basis).unwrap();
        assert_eq!(ext.e, 2);
        assert_eq!(ext.degree, 2);
        let l = Field::new(ext.descriptor).unwrap();
        assert_eq!(l.uniformizer_name(), "√2");
        assert!(l.var_names().is_empty());
    }

    #[test]
    fn two_variable_extension() {
        let d = desc("prime = 2\nresidue_vars = [\"a\", \"b\"]\n");
        let f = Field::new(d.clone()).unwrap();
        let basis = PseudoBasis::parse(&f, "a,b,2", 1).unwrap();
        let ext = build_pp_extension(&d, &basis).unwrap();
        assert_eq!(ext.degree, 8);
        let l = Field::new(ext.descriptor.clone()).unwrap();
        assert_eq!(l.var_names(), &["√a".to_string(), "√b".to_string()]);
        assert_eq!(l.uniformizer_name(), "√2");
        assert_eq!(pseudo_rank(&ext.descriptor, 1).unwrap(), 3);
        let id = build_pp_extension(&d, &basis.with_level(0)).unwrap();
        assert_eq!(id.descriptor, d);
        assert_eq!(id.degree, 1);
    }

    #[test]
    fn invalid_bases() {
        let f = Field::from_toml("prime = 2\nresidue_vars = [\"a\", \"b\"]\n").unwrap();
        assert!(matches!(PseudoBasis::parse(&f, "a,2", 1), Err(Error::InvalidPseudoBasis(_))));
        assert!(matches!(PseudoBasis::parse(&f, "a,b", 1), Err(Error::InvalidPseudoBasis(_))));
        assert!(matches!(PseudoBasis::parse(&f, "a,a+b,2", 1), Err(Error::InvalidPseudoBasis(_))));
        assert!(PseudoBasis::parse(&f, "b,a,2", 1).is_ok());
    }

    #[test]
    fn compositum() {
        let d = desc("prime = 2\n");
        let f = Field::new(d.clone()).unwrap();
        let l = build_pp_extension(&d, &PseudoBasis::standard(&f, 1)).unwrap().descriptor;
        assert_eq!(coprime_compositum(&d, 3, &l), PpStatus::PreservedInPP);
        assert_eq!(coprime_compositum(&d, 2, &l), PpStatus::NotApplicable);
        assert_eq!(coprime_compositum(&d, 1, &l), PpStatus::PreservedInPP);
    }

    #[test]
    fn bounds_examples() {
        let q2 = desc("prime = 2\nresidue_brauer_p_trivial = true\n");
        let b = bounds(&q2, 1, true).unwrap();
        assert_eq!(
            (b.pseudo_rank, b.br_p_dim_lower, b.br_p_dim_upper, b.gssd_upper),
            (1, 0, 1, 1)
        );
        assert_eq!((b.semiglobal_br_upper, b.semiglobal_gssd2_upper), (Some(2), Some(4)));
        assert_eq!(b.uniform_bound.unwrap().to_string(), "[F(ζ_2):F]·2^4");
        assert!(!b.conditional_at_2);
        let f3t = desc("prime = 3\nresidue_vars = [\"t\"]\n");
        let b = bounds(&f3t, 1, true).unwrap();
        assert_eq!((b.pseudo_rank, b.br_p_dim_lower, b.br_p_dim_upper), (2, 1, 2));
        assert_eq!((b.semiglobal_br_upper, b.semiglobal_gssd2_upper), (Some(3), Some(6)));
        let f2ab = desc("prime = 2\nresidue_vars = [\"a\", \"b\"]\n");
        assert!(bounds(&f2ab, 1, true).unwrap().conditional_at_2);
    }
}
