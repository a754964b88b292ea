//! Elements of `K` known modulo a power of the uniformizer.
//!
//! An element is stored as `ϖ^shift · num/den` where `num` and `den` are
//! model polynomials over `Z/p^M`, `den` is a unit, and `num` is a unit
//! whenever it is nonzero. `prec` is the absolute precision: the element is
//! known modulo `ϖ^prec`. Exact constants carry the largest precision the
//! storage can hold.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::poly::{inv_mod, mul_mod, padic_val, Mono, Poly};
use crate::residue::ResidueElement;

/// Stand-in for unbounded precision (keeps sums away from overflow).
pub(crate) const INF: i64 = i64::MAX / 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValuationReport {
    Exact(i64),
    /// Indistinguishable from zero below this valuation.
    AtLeast(i64),
}

impl ValuationReport {
    pub fn exact(self) -> Option<i64> {
        match self {
            ValuationReport::Exact(m) => Some(m),
            ValuationReport::AtLeast(_) => None,
        }
    }

    /// Whether the valuation is known to be at least `n`.
    pub fn is_at_least(self, n: i64) -> bool {
        match self {
            ValuationReport::Exact(m) | ValuationReport::AtLeast(m) => m >= n,
        }
    }
}

impl fmt::Display for ValuationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationReport::Exact(m) => write!(f, "{m}"),
            ValuationReport::AtLeast(m) => write!(f, ">= {m}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CdvfElement {
    field: Arc<Field>,
    shift: i64,
    num: Poly,
    den: Poly,
    prec: i64,
}

impl CdvfElement {
    /// Exact element from a model polynomial.
    pub(crate) fn exact(field: &Arc<Field>, num: Poly) -> CdvfElement {
        CdvfElement::from_parts(field, 0, num, Poly::one(field.modulus()), INF)
    }

    pub(crate) fn from_parts(field: &Arc<Field>, shift: i64, num: Poly, den: Poly, prec: i64) -> CdvfElement {
        let mut x = CdvfElement { field: field.clone(), shift, num, den, prec: prec.min(INF) };
        x.normalize();
        x
    }

    fn cap(&self) -> i64 {
        self.shift.saturating_add(self.field.e() * self.field.storage_exponent() as i64).min(INF)
    }

    fn normalize(&mut self) {
        let f = self.field.clone();
        let m = f.modulus();
        self.num = f.reduce_uniformizer(&self.num);
        self.den = f.reduce_uniformizer(&self.den);
        if self.den.is_constant() && !self.den.is_one() {
            let inv = inv_mod(self.den.constant_term(), m).expect("denominator is a unit");
            self.num = self.num.scale(inv);
            self.den = Poly::one(m);
        }
        self.prec = self.prec.min(self.cap());
        let Some(v) = self.num.terms().iter().map(|&(mo, c)| f.term_valuation(mo, c)).min() else {
            self.shift = self.prec;
            return;
        };
        if v > 0 {
            self.num = div_uniformizer_pow(&f, &self.num, v);
            self.shift += v;
        }
        // terms at or beyond the precision carry no information
        let (shift, prec) = (self.shift, self.prec);
        if self.num.terms().iter().any(|&(mo, c)| shift + f.term_valuation(mo, c) >= prec) {
            self.num = self.num.map_terms(|mo, c| (shift + f.term_valuation(mo, c) < prec).then_some((mo, c)));
            if self.num.is_zero() {
                self.shift = self.prec;
            }
        }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    /// Absolute precision: the element is known modulo `π^prec`.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub(crate) fn num(&self) -> &Poly {
        &self.num
    }

    pub(crate) fn den(&self) -> &Poly {
        &self.den
    }

    /// Known lower bound for the valuation.
    pub fn vlow(&self) -> i64 {
        if self.num.is_zero() {
            self.prec
        } else {
            self.shift
        }
    }

    pub fn valuation(&self) -> ValuationReport {
        let n = self.field.precision();
        if !self.num.is_zero() && self.shift < n {
            ValuationReport::Exact(self.shift)
        } else {
            ValuationReport::AtLeast(self.vlow().min(n))
        }
    }

    /// Whether the element is indistinguishable from zero at precision `N`.
    pub fn is_zero_at_precision(&self) -> bool {
        self.vlow() >= self.field.precision()
    }

    /// Equality at precision: `v(self − o) ≥ N`.
    pub fn eq_at_precision(&self, o: &CdvfElement) -> bool {
        self.sub(o).is_zero_at_precision()
    }

    /// `x = u·π^m` with `u` a unit.
    pub fn val_unit_split(&self) -> Result<(i64, CdvfElement)> {
        match self.valuation() {
            ValuationReport::Exact(m) => {
                let u = CdvfElement {
                    field: self.field.clone(),
                    shift: 0,
                    num: self.num.clone(),
                    den: self.den.clone(),
                    prec: self.prec.saturating_sub(m),
                };
                Ok((m, u))
            }
            ValuationReport::AtLeast(_) => Err(Error::ZeroOrBelowPrecision),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == ValuationReport::Exact(0)
    }

    pub fn residue(&self) -> Result<ResidueElement> {
        let rf = self.field.residue_field();
        if self.num.is_zero() || self.shift > 0 {
            if self.vlow() >= 1 {
                return Ok(ResidueElement::zero(rf));
            }
            return Err(if self.num.is_zero() { Error::ZeroOrBelowPrecision } else { Error::NotIntegral });
        }
        if self.shift < 0 {
            return Err(Error::NotIntegral);
        }
        if self.prec < 1 {
            return Err(Error::ZeroOrBelowPrecision);
        }
        let p = self.field.p();
        let u = self.field.uniformizer_var();
        let mod_p = |q: &Poly| q.map_terms(|mo, c| (mo.exp(u) == 0).then_some((mo, c))).reduce_mod(p);
        Ok(ResidueElement::new(rf, mod_p(&self.num), mod_p(&self.den)).expect("unit denominator"))
    }

    fn check(&self, o: &CdvfElement) {
        assert!(
            Arc::ptr_eq(&self.field, &o.field) || *self.field == *o.field,
            "elements of different fields: {} and {}",
            self.field,
            o.field
        );
    }

    pub fn add(&self, o: &CdvfElement) -> CdvfElement {
        self.check(o);
        let prec = self.prec.min(o.prec);
        if self.num.is_zero() {
            return CdvfElement { prec: prec.min(o.prec), ..o.clone() }.renormalized();
        }
        if o.num.is_zero() {
            return CdvfElement { prec, ..self.clone() }.renormalized();
        }
        let f = &self.field;
        let s = self.shift.min(o.shift);
        let a = self.num.mul(&uniformizer_pow_poly(f, self.shift - s));
        let b = o.num.mul(&uniformizer_pow_poly(f, o.shift - s));
        let (num, den) = if self.den == o.den {
            (a.add(&b), self.den.clone())
        } else {
            (a.mul(&o.den).add(&b.mul(&self.den)), self.den.mul(&o.den))
        };
        CdvfElement::from_parts(f, s, num, den, prec)
    }

    fn renormalized(mut self) -> CdvfElement {
        self.normalize();
        self
    }

    pub fn neg(&self) -> CdvfElement {
        CdvfElement { num: self.num.neg(), ..self.clone() }
    }

    pub fn sub(&self, o: &CdvfElement) -> CdvfElement {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &CdvfElement) -> CdvfElement {
        self.check(o);
        let prec = self.prec.saturating_add(o.vlow()).min(o.prec.saturating_add(self.vlow()));
        if self.num.is_zero() || o.num.is_zero() {
            let f = &self.field;
            return CdvfElement::from_parts(f, prec, Poly::zero(f.modulus()), Poly::one(f.modulus()), prec);
        }
        let den = if self.den.is_one() {
            o.den.clone()
        } else if o.den.is_one() {
            self.den.clone()
        } else {
            self.den.mul(&o.den)
        };
        CdvfElement::from_parts(&self.field, self.shift + o.shift, self.num.mul(&o.num), den, prec)
    }

    pub fn inv(&self) -> Result<CdvfElement> {
        if self.num.is_zero() {
            return Err(Error::ZeroOrBelowPrecision);
        }
        let s = self.shift;
        Ok(CdvfElement::from_parts(
            &self.field,
            -s,
            self.den.clone(),
            self.num.clone(),
            self.prec.saturating_sub(2 * s),
        ))
    }

    pub fn div(&self, o: &CdvfElement) -> Result<CdvfElement> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, k: i64) -> Result<CdvfElement> {
        let mut base = if k < 0 { self.inv()? } else { self.clone() };
        let mut k = k.unsigned_abs();
        let mut acc = self.field.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// `self · π^k`.
    pub fn mul_uniformizer_pow(&self, k: i64) -> CdvfElement {
        CdvfElement {
            shift: self.shift.saturating_add(k),
            prec: self.prec.saturating_add(k),
            ..self.clone()
        }
        .renormalized()
    }

    /// Treat the stored representative as exact. Used for candidate roots
    /// that are certified afterwards by direct evaluation.
    pub(crate) fn lifted(&self) -> CdvfElement {
        CdvfElement { prec: INF, ..self.clone() }.renormalized()
    }

    /// Image under the inclusion `K ⊂ L` given by `to`'s tower extending
    /// this element's tower.
    pub fn transport(&self, to: &Arc<Field>) -> Result<CdvfElement> {
        let from = &self.field;
        if Arc::ptr_eq(from, to) || **from == **to {
            return Ok(CdvfElement { field: to.clone(), ..self.clone() });
        }
        if from.p() != to.p() || to.e() % from.e() != 0 {
            return Err(Error::FieldMismatch);
        }
        let r = to.e() / from.e();
        let m = to.modulus();
        let mut images = Vec::with_capacity(from.nvars() + 1);
        for name in from.var_names() {
            images.push(to.name_image(name).ok_or(Error::FieldMismatch)?.clone());
        }
        if from.e() > 1 {
            let img = to.name_image(from.uniformizer_name()).ok_or(Error::FieldMismatch)?;
            if *img != Poly::monomial(m, Mono::var_pow(to.uniformizer_var(), r as u32), 1) {
                return Err(Error::FieldMismatch);
            }
            images.push(img.clone());
        } else {
            images.push(Poly::zero(m));
        }
        let num = self.num.substitute(&images, m);
        let den = self.den.substitute(&images, m);
        let scale = |x: i64| if x >= INF { INF } else { x.saturating_mul(r) };
        Ok(CdvfElement::from_parts(to, scale(self.shift), num, den, scale(self.prec)))
    }

    /// Expression text that parses back to this element.
    pub fn render(&self) -> String {
        let f = &self.field;
        if self.num.is_zero() {
            return "0".into();
        }
        let names = f.render_names();
        let u = f.uniformizer_var();
        let p = f.p() as u128;
        let num = if self.shift > 0 && f.e() == 1 {
            p.checked_pow(self.shift as u32)
                .and_then(|s| s.checked_mul(f.modulus() as u128))
                .filter(|&m| m < 1 << 63)
                .map(|big| {
                    let m = f.modulus();
                    let terms = self
                        .num
                        .terms()
                        .iter()
                        .map(|&(mo, c)| {
                            let signed = if c > m / 2 { c as i128 - m as i128 } else { c as i128 };
                            let lifted = (signed * p.pow(self.shift as u32) as i128).rem_euclid(big as i128);
                            (mo, lifted as u64)
                        })
                        .collect();
                    Poly::from_terms(big as u64, terms).render(&names, true)
                })
        } else if self.shift > 0 {
            Some(self.num.map_terms(|mo, c| Some((mo.mul(Mono::var_pow(u, self.shift as u32)), c))).render(&names, true))
        } else {
            None
        };
        let mut out = match num {
            Some(s) => s,
            None => {
                let body = self.num.render(&names, true);
                match self.shift {
                    0 => body,
                    s if s > 0 => format!("{}^{}*({body})", f.uniformizer_name(), s),
                    s => format!("({body})/{}^{}", f.uniformizer_name(), -s),
                }
            }
        };
        if !self.den.is_one() {
            out = format!("({out})/({})", self.den.render(&names, true));
        }
        out
    }
}

impl fmt::Display for CdvfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// `ϖ^k` as a model polynomial (zero once it exceeds the storage).
fn uniformizer_pow_poly(f: &Field, k: i64) -> Poly {
    let m = f.modulus();
    let (q, r) = (k / f.e(), k % f.e());
    if q >= f.storage_exponent() as i64 {
        return Poly::zero(m);
    }
    let c = (f.p() as u128).pow(q as u32) as u64;
    Poly::monomial(m, Mono::var_pow(f.uniformizer_var(), r as u32), c)
}

/// Divide every term by `ϖ^v`; all terms must have valuation at least `v`.
/// Digits shifted in at the top are unknown and set to zero, which the
/// caller's precision already accounts for.
fn div_uniformizer_pow(f: &Field, poly: &Poly, v: i64) -> Poly {
    let m = f.modulus();
    let p = f.p();
    let e = f.e();
    let u = f.uniformizer_var();
    Poly::from_terms(
        m,
        poly.terms()
            .iter()
            .map(|&(mo, c)| {
                let a = padic_val(c, p);
                let t = e * a as i64 + mo.exp(u) as i64 - v;
                debug_assert!(t >= 0);
                let unit = c / p.pow(a);
                let (q, r) = (t / e, t % e);
                let scale = (p as u128).pow(q as u32) % m as u128;
                (mo.without(u).mul(Mono::var_pow(u, r as u32)), mul_mod(unit, scale as u64, m))
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn q2() -> Arc<Field> {
        Field::from_toml("prime = 2\nprecision = 10\n").unwrap()
    }

    fn k2t() -> Arc<Field> {
        Field::from_toml("prime = 2\nresidue_vars = [\"t\"]\n").unwrap()
    }

    #[test]
    fn val_unit_split_examples() {
        let f = q2();
        let (m, u) = f.parse("12").unwrap().val_unit_split().unwrap();
        assert_eq!(m, 2);
        assert!(u.eq_at_precision(&f.int(3)));
        let k = k2t();
        let (m, u) = k.parse("2t/(t+1)").unwrap().val_unit_split().unwrap();
        assert_eq!(m, 1);
        assert!(u.eq_at_precision(&k.parse("t/(t+1)").unwrap()));
        assert_eq!(f.zero().val_unit_split().unwrap_err(), Error::ZeroOrBelowPrecision);
    }

    #[test]
    fn residue_examples() {
        let f = q2();
        assert!(f.int(3).residue().unwrap().is_one());
        let k = k2t();
        let r = k.parse("t^2+2t").unwrap().residue().unwrap();
        assert_eq!(r.to_string(), "t^2");
        assert_eq!(f.parse("1/2").unwrap().residue(), Err(Error::NotIntegral));
    }

    #[test]
    fn valuation_reports() {
        let f = q2();
        assert_eq!(f.int(8).valuation(), ValuationReport::Exact(3));
        assert_eq!(f.int(1024).valuation(), ValuationReport::AtLeast(10));
        let x = f.int(1).add(&f.int(1 << 12)).sub(&f.int(1));
        assert_eq!(x.valuation(), ValuationReport::AtLeast(10));
    }

    #[test]
    fn precision_drops_through_division() {
        let f = q2();
        // a value known only mod 2^4, divided by 2^3
        let x = f.int(8).add(&CdvfElement::from_parts(&f, 4, Poly::zero(f.modulus()), Poly::one(f.modulus()), 4));
        assert_eq!(x.prec(), 4);
        let y = x.div(&f.int(8)).unwrap();
        assert_eq!(y.prec(), 1);
        assert_eq!(y.valuation(), ValuationReport::Exact(0));
    }

    #[test]
    fn ramified_arithmetic() {
        let f = Field::from_toml("prime = 2\n[[tower]]\nkind = \"root_of_uniformizer\"\ndegree = 2\n").unwrap();
        let r = f.parse("√2").unwrap();
        assert_eq!(r.valuation(), ValuationReport::Exact(1));
        assert!(r.mul(&r).eq_at_precision(&f.int(2)));
        assert_eq!(f.int(6).valuation(), ValuationReport::Exact(2));
        let x = f.parse("(1+√2)/(1-√2)").unwrap();
        assert!(x.mul(&f.parse("1-√2").unwrap()).eq_at_precision(&f.parse("1+√2").unwrap()));
    }

    #[test]
    fn transport_into_extension() {
        let k = k2t();
        let l = Field::from_toml(
            "prime = 2\nresidue_vars = [\"t\"]\n[[tower]]\nkind = \"root_of_unit\"\nelement = \"t\"\ndegree = 2\n[[tower]]\nkind = \"root_of_uniformizer\"\ndegree = 2\n",
        )
        .unwrap();
        let x = k.parse("2t+1").unwrap();
        let y = x.transport(&l).unwrap();
        assert!(y.eq_at_precision(&l.parse("√2^2*√t^2+1").unwrap()));
        assert_eq!(k.int(2).transport(&l).unwrap().valuation(), ValuationReport::Exact(2));
    }

    #[test]
    fn render_round_trip() {
        let k = k2t();
        for s in ["12", "-1", "2t/(t+1)", "1/2", "t^3-5"] {
            let x = k.parse(s).unwrap();
            let y = k.parse(&x.render()).unwrap();
            assert!(x.eq_at_precision(&y), "{s} rendered as {}", x.render());
        }
    }
}
