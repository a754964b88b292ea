//! Field descriptors and the arithmetic model behind [`CdvfElement`].
//!
//! A descriptor presents `K` as a tower over the base field with uniformizer
//! `p` and residue field `F_p(t_1..t_n)`. The model keeps one variable per
//! residue generator plus a uniformizer variable `ϖ` with `ϖ^e = p`, so
//! `O_K / p^M` is a quotient of `(Z/p^M)[t, ϖ]` localized at units.
//!
//! Supported adjunctions are roots of a single residue variable (which
//! replaces that variable) and roots of the current uniformizer (which
//! multiplies `e`). Other tower records parse but are rejected with
//! `UnsupportedTower` when the model is built.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::expr::{Algebra, Expr};
use crate::poly::{Mono, Poly, MAX_VARS};
use crate::residue::{ResidueElement, ResidueField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TowerKind {
    RootOfUniformizer,
    RootOfUnit,
}

/// One adjunction `x^degree = element`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerRecord {
    pub kind: TowerKind,
    /// For roots of the uniformizer this defaults to the current uniformizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
    pub degree: u64,
    /// Generator name; defaults to radical notation such as `√t` or `∜2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl TowerRecord {
    pub fn root_of_unit(element: &str, degree: u64) -> TowerRecord {
        TowerRecord { kind: TowerKind::RootOfUnit, element: Some(element.into()), degree, name: None }
    }

    pub fn root_of_uniformizer(degree: u64) -> TowerRecord {
        TowerRecord { kind: TowerKind::RootOfUniformizer, element: None, degree, name: None }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    prime: u64,
    #[serde(default)]
    residue_vars: Vec<String>,
    #[serde(default)]
    tower: Vec<TowerRecord>,
    precision: Option<i64>,
    zeta_p_present: Option<bool>,
    #[serde(default)]
    residue_brauer_p_trivial: bool,
}

/// A finitely presented mixed-characteristic complete discrete valued field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FieldDescriptor {
    prime: u64,
    residue_vars: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tower: Vec<TowerRecord>,
    precision: i64,
    zeta_p_present: bool,
    residue_brauer_p_trivial: bool,
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `Some(ℓ)` when `n = p^ℓ`.
pub(crate) fn log_p(n: u64, p: u64) -> Option<u32> {
    let mut k = 0;
    let mut m = n;
    while m > 1 && m % p == 0 {
        m /= p;
        k += 1;
    }
    (m == 1).then_some(k)
}

fn valid_name(s: &str) -> bool {
    matches!(Expr::parse(s), Ok(Expr::Name(n)) if n == s)
}

impl FieldDescriptor {
    /// Validate and build a descriptor. `precision = None` selects the
    /// default `max(8, 4·⌈e'⌉)`.
    pub fn new(
        prime: u64,
        residue_vars: Vec<String>,
        tower: Vec<TowerRecord>,
        precision: Option<i64>,
        zeta_p_present: Option<bool>,
        residue_brauer_p_trivial: bool,
    ) -> Result<FieldDescriptor> {
        let bad = |m: String| Err(Error::InvalidDescriptor(m));
        if !is_prime(prime) {
            return bad(format!("prime = {prime} is not prime"));
        }
        for (i, v) in residue_vars.iter().enumerate() {
            if !valid_name(v) {
                return bad(format!("residue variable {v:?} is not a valid name"));
            }
            if residue_vars[..i].contains(v) {
                return bad(format!("residue variable {v} repeated"));
            }
        }
        if residue_vars.len() >= MAX_VARS {
            return bad(format!("at most {} residue variables are supported", MAX_VARS - 1));
        }
        for r in &tower {
            if r.degree < 2 || log_p(r.degree, prime).is_none() {
                return bad(format!("tower degree {} is not a positive power of {prime}", r.degree));
            }
            if r.kind == TowerKind::RootOfUnit && r.element.is_none() {
                return bad("root_of_unit records need an element".into());
            }
            if let Some(n) = &r.name {
                if !valid_name(n) {
                    return bad(format!("generator name {n:?} is not a valid name"));
                }
            }
        }
        let zeta = zeta_p_present.unwrap_or(prime == 2);
        if prime == 2 && !zeta {
            return bad("zeta_p_present must be true for p = 2".into());
        }
        let mut d = FieldDescriptor {
            prime,
            residue_vars,
            tower,
            precision: 0,
            zeta_p_present: zeta,
            residue_brauer_p_trivial,
        };
        d.precision = match precision {
            Some(n) if n < 1 => return bad(format!("precision must be >= 1, got {n}")),
            Some(n) => n,
            None => d.default_precision(),
        };
        Ok(d)
    }

    pub fn from_toml(s: &str) -> Result<FieldDescriptor> {
        let raw: RawDescriptor = toml::from_str(s).map_err(|e| Error::InvalidDescriptor(e.to_string()))?;
        FieldDescriptor::new(
            raw.prime,
            raw.residue_vars,
            raw.tower,
            raw.precision,
            raw.zeta_p_present,
            raw.residue_brauer_p_trivial,
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn residue_vars(&self) -> &[String] {
        &self.residue_vars
    }

    pub fn tower(&self) -> &[TowerRecord] {
        &self.tower
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn zeta_p_present(&self) -> bool {
        self.zeta_p_present
    }

    pub fn residue_brauer_p_trivial(&self) -> bool {
        self.residue_brauer_p_trivial
    }

    /// Absolute ramification index: the product of uniformizer-root degrees.
    pub fn e(&self) -> i64 {
        self.tower
            .iter()
            .filter(|r| r.kind == TowerKind::RootOfUniformizer)
            .map(|r| r.degree as i64)
            .product()
    }

    /// `e' = e·p/(p−1)`, exactly.
    pub fn e_prime(&self) -> Ratio<i64> {
        Ratio::new(self.e() * self.prime as i64, self.prime as i64 - 1)
    }

    pub fn default_precision(&self) -> i64 {
        8.max(4 * self.e_prime().ceil().to_integer())
    }

    pub fn with_precision(&self, n: i64) -> Result<FieldDescriptor> {
        if n < 1 {
            return Err(Error::InvalidDescriptor(format!("precision must be >= 1, got {n}")));
        }
        Ok(FieldDescriptor { precision: n, ..self.clone() })
    }

    pub fn with_brauer_flag(&self, flag: bool) -> FieldDescriptor {
        FieldDescriptor { residue_brauer_p_trivial: flag, ..self.clone() }
    }

    /// Append adjunctions (validated like the original records).
    pub fn extended(&self, records: &[TowerRecord], precision: Option<i64>) -> Result<FieldDescriptor> {
        let mut tower = self.tower.clone();
        tower.extend_from_slice(records);
        FieldDescriptor::new(
            self.prime,
            self.residue_vars.clone(),
            tower,
            precision,
            Some(self.zeta_p_present),
            self.residue_brauer_p_trivial,
        )
    }
}

/// Default generator name for `element^{1/degree}`.
fn radical_name(element: &str, degree: u64, p: u64) -> String {
    let l = log_p(degree, p).unwrap_or(1) as usize;
    let prefix = match (p, l) {
        (2, 2) => "∜".to_string(),
        (2, l) => "√".repeat(l),
        (3, l) => "∛".repeat(l),
        (_, _) => return format!("r{degree}_{element}"),
    };
    format!("{prefix}{element}")
}

/// Arithmetic model of a descriptor.
#[derive(Debug)]
pub struct Field {
    desc: FieldDescriptor,
    p: u64,
    e: i64,
    n: i64,
    store: u32,
    modulus: u64,
    var_names: Vec<String>,
    uniformizer_name: String,
    names: HashMap<String, Poly>,
    residue: Arc<ResidueField>,
}

impl PartialEq for Field {
    fn eq(&self, o: &Field) -> bool {
        self.desc == o.desc
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(desc: FieldDescriptor) -> Result<Arc<Field>> {
        let p = desc.prime;
        let n = desc.precision;
        let e = desc.e();
        let margin = 2 * desc.e_prime().ceil().to_integer() + 4;
        let store = ((n + margin + e - 1) / e + 1) as u32;
        let modulus = (p as u128)
            .checked_pow(store)
            .filter(|&m| m < 1 << 63)
            .ok_or_else(|| {
                Error::InvalidDescriptor(format!("precision {n} needs p^{store}, which does not fit in 63 bits"))
            })? as u64;
        let mut f = Field {
            p,
            e: 1,
            n,
            store,
            modulus,
            var_names: desc.residue_vars.clone(),
            uniformizer_name: p.to_string(),
            names: HashMap::new(),
            residue: ResidueField::new(p, vec![]),
            desc: desc.clone(),
        };
        let nv = f.var_names.len();
        for (i, v) in f.var_names.iter().enumerate() {
            f.names.insert(v.clone(), Poly::var(modulus, i));
        }
        let uni = nv;
        for rec in &desc.tower {
            let deg = rec.degree as u32;
            match rec.kind {
                TowerKind::RootOfUnit => {
                    let el = rec.element.as_deref().unwrap();
                    let i = match Expr::parse(el) {
                        Ok(Expr::Name(name)) => f
                            .names
                            .get(&name)
                            .and_then(|img| (0..nv).find(|&i| *img == Poly::var(modulus, i))),
                        _ => None,
                    }
                    .ok_or_else(|| {
                        Error::UnsupportedTower(format!(
                            "root_of_unit element {el:?} must be one of the current residue generators"
                        ))
                    })?;
                    let gen = rec.name.clone().unwrap_or_else(|| radical_name(el, rec.degree, p));
                    if f.names.contains_key(&gen) {
                        return Err(Error::InvalidDescriptor(format!("generator name {gen} already in use")));
                    }
                    let mut images: Vec<Poly> = (0..=nv).map(|j| Poly::var(modulus, j)).collect();
                    images[i] = Poly::monomial(modulus, Mono::var_pow(i, deg), 1);
                    for img in f.names.values_mut() {
                        *img = img.substitute(&images, modulus);
                    }
                    f.names.insert(gen.clone(), Poly::var(modulus, i));
                    f.var_names[i] = gen;
                }
                TowerKind::RootOfUniformizer => {
                    if let Some(el) = &rec.element {
                        let given = Expr::parse(el).and_then(|x| x.eval(&ModelAlgebra(&f)))?;
                        if given != f.uniformizer_poly() {
                            return Err(Error::UnsupportedTower(format!(
                                "root_of_uniformizer element {el:?} is not the current uniformizer {}",
                                f.uniformizer_name
                            )));
                        }
                    }
                    let old = f.uniformizer_name.clone();
                    let gen = rec.name.clone().unwrap_or_else(|| radical_name(&old, rec.degree, p));
                    if f.names.contains_key(&gen) {
                        return Err(Error::InvalidDescriptor(format!("generator name {gen} already in use")));
                    }
                    let mut images: Vec<Poly> = (0..=nv).map(|j| Poly::var(modulus, j)).collect();
                    images[uni] = Poly::monomial(modulus, Mono::var_pow(uni, deg), 1);
                    for img in f.names.values_mut() {
                        *img = img.substitute(&images, modulus);
                    }
                    f.e *= rec.degree as i64;
                    f.names.insert(gen.clone(), Poly::var(modulus, uni));
                    f.uniformizer_name = gen;
                }
            }
        }
        debug_assert_eq!(f.e, e);
        f.residue = ResidueField::new(p, f.var_names.clone());
        Ok(Arc::new(f))
    }

    pub fn from_toml(s: &str) -> Result<Arc<Field>> {
        Field::new(FieldDescriptor::from_toml(s)?)
    }

    pub fn descriptor(&self) -> &FieldDescriptor {
        &self.desc
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> i64 {
        self.e
    }

    pub fn e_prime(&self) -> Ratio<i64> {
        self.desc.e_prime()
    }

    /// Working precision `N`.
    pub fn precision(&self) -> i64 {
        self.n
    }

    /// Coefficients are stored modulo `p^storage_exponent`.
    pub fn storage_exponent(&self) -> u32 {
        self.store
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    /// Current residue generators (after renaming by unit roots).
    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn uniformizer_name(&self) -> &str {
        &self.uniformizer_name
    }

    /// Index of the uniformizer variable in model polynomials.
    pub fn uniformizer_var(&self) -> usize {
        self.var_names.len()
    }

    pub fn residue_field(&self) -> &Arc<ResidueField> {
        &self.residue
    }

    /// Model image of a named generator or residue variable.
    pub fn name_image(&self, name: &str) -> Option<&Poly> {
        self.names.get(name)
    }

    fn uniformizer_poly(&self) -> Poly {
        if self.e == 1 {
            Poly::constant(self.modulus, self.p as i128)
        } else {
            Poly::var(self.modulus, self.uniformizer_var())
        }
    }

    /// Names for rendering model polynomials: variables then `ϖ`.
    pub(crate) fn render_names(&self) -> Vec<String> {
        let mut v = self.var_names.clone();
        v.push(self.uniformizer_name.clone());
        v
    }

    /// Reduce `ϖ^k` with `k ≥ e` to `p^{k div e}·ϖ^{k mod e}`.
    pub(crate) fn reduce_uniformizer(&self, poly: &Poly) -> Poly {
        let u = self.uniformizer_var();
        let e = self.e as u32;
        if poly.deg_in(u) < e {
            return poly.clone();
        }
        let m = self.modulus;
        Poly::from_terms(
            m,
            poly.terms()
                .iter()
                .map(|&(mo, c)| {
                    let k = mo.exp(u);
                    let (q, r) = (k / e, k % e);
                    let scale = (self.p as u128).checked_pow(q).map_or(0, |s| (s % m as u128) as u64);
                    let mo = mo.without(u).mul(Mono::var_pow(u, r));
                    (mo, crate::poly::mul_mod(c, scale, m))
                })
                .collect(),
        )
    }

    /// Valuation `e·v_p(c) + k` of a single model term.
    pub(crate) fn term_valuation(&self, mono: Mono, c: u64) -> i64 {
        self.e * crate::poly::padic_val(c, self.p) as i64 + mono.exp(self.uniformizer_var()) as i64
    }

    /// Parse an element expression over this field.
    pub fn parse(self: &Arc<Self>, s: &str) -> Result<CdvfElement> {
        Expr::parse(s)?.eval(&ElementAlgebra(self.clone()))
    }

    pub fn zero(self: &Arc<Self>) -> CdvfElement {
        CdvfElement::from_parts(self, 0, Poly::zero(self.modulus), Poly::one(self.modulus), i64::MAX)
    }

    pub fn one(self: &Arc<Self>) -> CdvfElement {
        self.int(1)
    }

    pub fn int(self: &Arc<Self>, n: i128) -> CdvfElement {
        CdvfElement::exact(self, Poly::constant(self.modulus, n))
    }

    /// `π^k` for the current uniformizer.
    pub fn uniformizer_pow(self: &Arc<Self>, k: i64) -> CdvfElement {
        CdvfElement::from_parts(self, k, Poly::one(self.modulus), Poly::one(self.modulus), i64::MAX)
    }

    pub fn uniformizer(self: &Arc<Self>) -> CdvfElement {
        self.uniformizer_pow(1)
    }

    /// Element named by a generator or residue variable.
    pub fn named(self: &Arc<Self>, name: &str) -> Result<CdvfElement> {
        if name == "π" {
            return Ok(self.uniformizer());
        }
        let img = self
            .names
            .get(name)
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("unknown name {name}") })?;
        Ok(CdvfElement::exact(self, img.clone()))
    }

    /// Teichmüller-free lift of a residue element: coefficients in `[0, p)`.
    pub fn lift(self: &Arc<Self>, r: &ResidueElement) -> CdvfElement {
        assert_eq!(r.field().vars(), self.var_names.as_slice(), "residue field mismatch");
        let m = self.modulus;
        let num = CdvfElement::exact(self, r.num().with_modulus(m));
        let den = CdvfElement::exact(self, r.den().with_modulus(m));
        num.div(&den).expect("residue denominators lift to units")
    }
}

impl fmt::Display for Field {
    /// Short name such as `Q2`, `Q2{t}` or `Q2{a,b}(√a,√b,√2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.p)?;
        if !self.desc.residue_vars.is_empty() {
            write!(f, "{{{}}}", self.desc.residue_vars.join(","))?;
        }
        let mut gens: Vec<String> =
            self.var_names.iter().filter(|v| !self.desc.residue_vars.contains(v)).cloned().collect();
        if self.e > 1 {
            gens.push(self.uniformizer_name.clone());
        }
        if !gens.is_empty() {
            write!(f, "({})", gens.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates expressions to raw model polynomials (used for tower records).
struct ModelAlgebra<'a>(&'a Field);

impl Algebra for ModelAlgebra<'_> {
    type Value = Poly;
    fn int(&self, n: i128) -> Result<Poly> {
        Ok(self.0.reduce_uniformizer(&Poly::constant(self.0.modulus, n)))
    }
    fn name(&self, name: &str) -> Result<Poly> {
        if name == "π" {
            return Ok(self.0.uniformizer_poly());
        }
        self.0
            .names
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("unknown name {name}") })
    }
    fn add(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        Ok(a.add(b))
    }
    fn sub(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        Ok(a.sub(b))
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        Ok(self.0.reduce_uniformizer(&a.mul(b)))
    }
    fn div(&self, _: &Poly, _: &Poly) -> Result<Poly> {
        Err(Error::UnsupportedTower("division in tower elements".into()))
    }
    fn neg(&self, a: &Poly) -> Result<Poly> {
        Ok(a.neg())
    }
    fn pow(&self, a: &Poly, k: i64) -> Result<Poly> {
        if k < 0 {
            return Err(Error::UnsupportedTower("negative powers in tower elements".into()));
        }
        Ok(self.0.reduce_uniformizer(&a.pow(k as u32)))
    }
}

struct ElementAlgebra(Arc<Field>);

impl Algebra for ElementAlgebra {
    type Value = CdvfElement;
    fn int(&self, n: i128) -> Result<CdvfElement> {
        Ok(self.0.int(n))
    }
    fn name(&self, name: &str) -> Result<CdvfElement> {
        self.0.named(name)
    }
    fn add(&self, a: &CdvfElement, b: &CdvfElement) -> Result<CdvfElement> {
        Ok(a.add(b))
    }
    fn sub(&self, a: &CdvfElement, b: &CdvfElement) -> Result<CdvfElement> {
        Ok(a.sub(b))
    }
    fn mul(&self, a: &CdvfElement, b: &CdvfElement) -> Result<CdvfElement> {
        Ok(a.mul(b))
    }
    fn div(&self, a: &CdvfElement, b: &CdvfElement) -> Result<CdvfElement> {
        a.div(b)
    }
    fn neg(&self, a: &CdvfElement) -> Result<CdvfElement> {
        Ok(a.neg())
    }
    fn pow(&self, a: &CdvfElement, k: i64) -> Result<CdvfElement> {
        a.pow(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_with_defaults() {
        let d = FieldDescriptor::from_toml("prime = 2\nresidue_vars = [\"t\"]\n").unwrap();
        assert_eq!(d.e(), 1);
        assert_eq!(d.e_prime(), Ratio::from_integer(2));
        assert_eq!(d.precision(), 8);
        assert!(d.zeta_p_present());
        assert!(!d.residue_brauer_p_trivial());
        let d = FieldDescriptor::from_toml("prime = 3\n").unwrap();
        assert_eq!(d.e_prime(), Ratio::new(3, 2));
        assert!(!d.zeta_p_present());
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!(FieldDescriptor::from_toml("prime = 4\n").is_err());
        assert!(FieldDescriptor::from_toml("prime = 2\nzeta_p_present = false\n").is_err());
        assert!(FieldDescriptor::from_toml("prime = 2\nprecision = 0\n").is_err());
        let bad_degree = "prime = 3\n[[tower]]\nkind = \"root_of_uniformizer\"\ndegree = 2\n";
        assert!(FieldDescriptor::from_toml(bad_degree).is_err());
        assert!(FieldDescriptor::from_toml("prime = 2\nbogus = 1\n").is_err());
    }

    #[test]
    fn tower_builds_model() {
        let src = r#"
            prime = 2
            residue_vars = ["t"]
            [[tower]]
            kind = "root_of_unit"
            element = "t"
            degree = 2
            [[tower]]
            kind = "root_of_uniformizer"
            degree = 2
        "#;
        let f = Field::from_toml(src).unwrap();
        assert_eq!(f.e(), 2);
        assert_eq!(f.var_names(), &["√t".to_string()]);
        assert_eq!(f.uniformizer_name(), "√2");
        // t = (√t)^2
        assert_eq!(f.name_image("t").unwrap(), &Poly::monomial(f.modulus(), Mono::var_pow(0, 2), 1));
        assert_eq!(f.descriptor().default_precision(), 16);
    }

    #[test]
    fn descriptor_round_trips_through_toml() {
        let d = FieldDescriptor::new(
            2,
            vec!["a".into()],
            vec![TowerRecord::root_of_unit("a", 2), TowerRecord::root_of_uniformizer(2)],
            Some(12),
            None,
            true,
        )
        .unwrap();
        assert_eq!(FieldDescriptor::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn unsupported_unit_root() {
        let src = "prime = 2\n[[tower]]\nkind = \"root_of_unit\"\nelement = \"5\"\ndegree = 2\n";
        assert!(FieldDescriptor::from_toml(src).is_ok());
        assert!(matches!(Field::from_toml(src), Err(Error::UnsupportedTower(_))));
    }
}
