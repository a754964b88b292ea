//! Hilbert symbols over `Q_2` and its quadratic extensions, decided by a
//! finite isotropy search, and the tame symbol.
//!
//! `(a, b) = +1` iff `z² = a·x² + b·y²` has a nontrivial solution. Write
//! `f = z² − a x² − b y²` and let `e` be the ramification index. A primitive
//! solution has a unit coordinate, so one partial derivative (`2z`, `2ax` or
//! `2by`) has valuation `d ≤ e + max(v(a), v(b))`. Conversely a primitive
//! `(x, y, z)` with `v(f) ≥ k > 2d` lifts to a root by Newton's method in
//! that coordinate. So searching all primitive triples modulo `π^k` with
//!
//! `k = 2e + 1 + 2·max(v(a), v(b))`
//!
//! decides isotropy. Before searching, `a` and `b` are divided by even
//! powers of 2 so their 2-adic valuations are 0 or 1.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::expr::{Algebra, Expr};
use crate::field::{Field, FieldDescriptor, TowerKind};
use crate::residue::ResidueElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Base,
    /// `θ` is a uniformizer with `θ² = sθ + t`, Eisenstein.
    Ramified,
    /// `θ = (1 + √c)/2` with `θ² = θ + t`; the uniformizer is 2.
    Unramified,
}

/// `O_L` for `L = Q_2` or `L = Q_2(√c)`, with elements `x0 + x1·θ` stored
/// modulo `2^64`. Only residues modulo `π^k` for small `k` are ever read.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Ring {
    kind: Kind,
    s: u64,
    t: u64,
    c: i128,
}

type El = [u64; 2];

fn tz(x: u64) -> u32 {
    x.trailing_zeros()
}

impl Ring {
    fn base() -> Ring {
        Ring { kind: Kind::Base, s: 0, t: 0, c: 1 }
    }

    fn quadratic(c: i128) -> Result<Ring> {
        let unsupported = |m: String| Err(Error::UnsupportedDescriptor(m));
        if c == 0 {
            return unsupported("square root of 0".into());
        }
        let mut c = c;
        while c % 4 == 0 {
            c /= 4;
        }
        let w = |x: i128| x as i64 as u64;
        if c % 2 == 0 {
            return Ok(Ring { kind: Kind::Ramified, s: 0, t: w(c), c });
        }
        match c.rem_euclid(8) {
            1 => unsupported(format!("{c} is a square in Q_2")),
            5 => Ok(Ring { kind: Kind::Unramified, s: 1, t: w((c - 1) / 4), c }),
            // π = 1 + √c satisfies π² = 2π + (c − 1)
            _ => Ok(Ring { kind: Kind::Ramified, s: 2, t: w(c - 1), c }),
        }
    }

    fn from_descriptor(d: &FieldDescriptor) -> Result<Ring> {
        let unsupported = |m: &str| Err(Error::UnsupportedDescriptor(m.to_string()));
        if d.prime() != 2 {
            return unsupported("the oracle works over 2-adic fields only");
        }
        if !d.residue_vars().is_empty() {
            return unsupported("residue variables make the isotropy search infinite");
        }
        match d.tower() {
            [] => Ok(Ring::base()),
            [r] if r.degree == 2 => match r.kind {
                TowerKind::RootOfUniformizer => Ring::quadratic(2),
                TowerKind::RootOfUnit => {
                    let expr = r.element.as_deref().unwrap_or_default();
                    let c = Expr::parse(expr)?.eval(&Rationals)?;
                    Ring::quadratic(*c.numer() * *c.denom())
                }
            },
            _ => unsupported("only Q_2 and a single quadratic step are supported"),
        }
    }

    fn e(&self) -> u32 {
        if self.kind == Kind::Ramified {
            2
        } else {
            1
        }
    }

    fn int(&self, n: i128) -> El {
        [n as i64 as u64, 0]
    }

    fn add(&self, a: El, b: El) -> El {
        [a[0].wrapping_add(b[0]), a[1].wrapping_add(b[1])]
    }

    fn sub(&self, a: El, b: El) -> El {
        [a[0].wrapping_sub(b[0]), a[1].wrapping_sub(b[1])]
    }

    fn mul(&self, a: El, b: El) -> El {
        let hi = a[1].wrapping_mul(b[1]);
        [
            a[0].wrapping_mul(b[0]).wrapping_add(hi.wrapping_mul(self.t)),
            a[0].wrapping_mul(b[1]).wrapping_add(a[1].wrapping_mul(b[0])).wrapping_add(hi.wrapping_mul(self.s)),
        ]
    }

    fn uniformizer(&self) -> El {
        match self.kind {
            Kind::Ramified => [0, 1],
            _ => [2, 0],
        }
    }

    fn pow(&self, a: El, k: u32) -> El {
        (0..k).fold(self.int(1), |acc, _| self.mul(acc, a))
    }

    /// Valuation in units of the uniformizer, at most 64.
    fn val(&self, a: El) -> u32 {
        match self.kind {
            Kind::Base => tz(a[0]),
            Kind::Ramified => (2 * tz(a[0])).min(2 * tz(a[1]) + 1),
            Kind::Unramified => tz(a[0]).min(tz(a[1])),
        }
    }

    /// Canonical representative modulo `π^k`.
    fn reduce(&self, a: El, k: u32) -> El {
        let mask = |bits: u32| if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        match self.kind {
            Kind::Base => [a[0] & mask(k), 0],
            Kind::Ramified => [a[0] & mask(k.div_ceil(2)), a[1] & mask(k / 2)],
            Kind::Unramified => [a[0] & mask(k), a[1] & mask(k)],
        }
    }

    fn reps(&self, k: u32) -> Vec<El> {
        let (b0, b1) = match self.kind {
            Kind::Base => (k, 0),
            Kind::Ramified => (k.div_ceil(2), k / 2),
            Kind::Unramified => (k, k),
        };
        let mut out = Vec::with_capacity(1 << (b0 + b1));
        for x1 in 0..1u64 << b1 {
            for x0 in 0..1u64 << b0 {
                out.push([x0, x1]);
            }
        }
        out
    }

    fn render(&self, a: El, k: u32) -> String {
        let a = self.reduce(a, k);
        let c = self.c;
        match (self.kind, a[1]) {
            (Kind::Base, _) | (_, 0) => a[0].to_string(),
            (Kind::Ramified, x1) if self.s == 0 => format!("{}+{x1}*√{c}", a[0]),
            (Kind::Ramified, x1) => format!("{}+{x1}*√{c}", a[0] + x1),
            (Kind::Unramified, x1) => format!("{}+{x1}*(1+√{c})/2", a[0]),
        }
    }
}

/// Exact rationals for reading tower elements.
struct Rationals;

impl Algebra for Rationals {
    type Value = Ratio<i128>;
    fn int(&self, n: i128) -> Result<Ratio<i128>> {
        Ok(Ratio::from_integer(n))
    }
    fn name(&self, name: &str) -> Result<Ratio<i128>> {
        Err(Error::UnsupportedDescriptor(format!("tower element uses the name {name}")))
    }
    fn add(&self, a: &Ratio<i128>, b: &Ratio<i128>) -> Result<Ratio<i128>> {
        Ok(a + b)
    }
    fn sub(&self, a: &Ratio<i128>, b: &Ratio<i128>) -> Result<Ratio<i128>> {
        Ok(a - b)
    }
    fn mul(&self, a: &Ratio<i128>, b: &Ratio<i128>) -> Result<Ratio<i128>> {
        Ok(a * b)
    }
    fn div(&self, a: &Ratio<i128>, b: &Ratio<i128>) -> Result<Ratio<i128>> {
        if *b.numer() == 0 {
            return Err(Error::UnsupportedDescriptor("division by zero".into()));
        }
        Ok(a / b)
    }
    fn neg(&self, a: &Ratio<i128>) -> Result<Ratio<i128>> {
        Ok(-a)
    }
    fn pow(&self, a: &Ratio<i128>, k: i64) -> Result<Ratio<i128>> {
        if *a.numer() == 0 && k < 0 {
            return Err(Error::UnsupportedDescriptor("division by zero".into()));
        }
        Ok(a.pow(k as i32))
    }
}

/// A primitive solution of `z² ≡ a x² + b y² (mod π^level)` satisfying
/// the lifting inequality, rendered in the ring's basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropyWitness {
    pub x: String,
    pub y: String,
    pub z: String,
    pub level: u32,
}

#[derive(Clone, Debug)]
pub struct HilbertValue {
    pub sign: i8,
    pub witness: Option<IsotropyWitness>,
    /// `k`: the search was exhaustive modulo `π^k`.
    pub modulus_level: u32,
    /// The square-class representatives `(a', b')` that were searched.
    pub form: (String, String),
    ring: Ring,
    coeffs: (El, El),
    raw: Option<[El; 3]>,
    precision_bits: u32,
}

impl HilbertValue {
    /// Hensel-lift the witness to a solution modulo `π^{2k}` and check it by
    /// substitution. Always true for `−1`.
    pub fn verify_at_double_precision(&self) -> bool {
        let Some([x, y, z]) = self.raw else { return self.sign == -1 };
        let r = &self.ring;
        let k = self.modulus_level;
        let target = 2 * k;
        if target.div_ceil(r.e()) > self.precision_bits {
            return false;
        }
        let (a, b) = self.coeffs;
        let f = |v: [El; 3]| {
            let [x, y, z] = v;
            r.sub(r.mul(z, z), r.add(r.mul(a, r.mul(x, x)), r.mul(b, r.mul(y, y))))
        };
        let two = r.int(2);
        let ders = [r.mul(two, r.mul(a, x)), r.mul(two, r.mul(b, y)), r.mul(two, z)];
        let (var, d) = ders.iter().map(|&g| r.val(g)).enumerate().min_by_key(|&(_, v)| v).unwrap();
        if 2 * d >= k || r.val(f([x, y, z])) < k {
            return false;
        }
        let step = r.pow(r.uniformizer(), k - d);
        r.reps(k + d).into_iter().any(|s| {
            let mut v = [x, y, z];
            v[var] = r.add(v[var], r.mul(step, s));
            r.val(f(v)) >= target
        })
    }
}

impl fmt::Display for HilbertValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            Some(w) => write!(f, "+1 (x, y, z) = ({}, {}, {}) mod π^{}", w.x, w.y, w.z, w.level),
            None => write!(f, "-1 (no primitive solution mod π^{})", self.modulus_level),
        }
    }
}

/// Square-class representative of a `Q_2` element as `(2^(v mod 2)·u, v mod 2)`,
/// with the number of reliable low bits.
fn q2_class(x: &CdvfElement) -> Result<(i128, u32, u32)> {
    let field = x.field();
    if !is_base_q2(field) {
        return Err(Error::UnsupportedDescriptor("elements must come from the base field Q_2".into()));
    }
    let (v, mut u) = x.val_unit_split()?;
    let bits = u.prec().clamp(0, 64) as u32;
    // read off the 2-adic digits of the unit
    let mut unit: i128 = 0;
    for i in 0..bits {
        if !u.residue()?.is_zero() {
            unit |= 1 << i;
            u = u.sub(&field.one());
        }
        u = u.mul_uniformizer_pow(-1);
    }
    let parity = v.rem_euclid(2) as u32;
    Ok((unit << parity, parity, bits))
}

fn is_base_q2(f: &Field) -> bool {
    let d = f.descriptor();
    d.prime() == 2 && d.residue_vars().is_empty() && d.tower().is_empty()
}

fn search(ring: Ring, a: &CdvfElement, b: &CdvfElement) -> Result<HilbertValue> {
    let (ai, pa, bits_a) = q2_class(a)?;
    let (bi, pb, bits_b) = q2_class(b)?;
    let e = ring.e();
    let (ae, be) = (ring.int(ai), ring.int(bi));
    let k = 2 * e + 1 + 2 * e * pa.max(pb);
    let bits = bits_a.min(bits_b);
    if k.div_ceil(e) > bits {
        return Err(Error::PrecisionExhausted(format!("need {} bits of a and b, have {bits}", k.div_ceil(e))));
    }
    let reps = ring.reps(k);
    let mut squares: HashMap<El, Vec<El>> = HashMap::new();
    for &z in &reps {
        squares.entry(ring.reduce(ring.mul(z, z), k)).or_default().push(z);
    }
    let two = ring.int(2);
    let mut found = None;
    'outer: for &y in &reps {
        let by2 = ring.mul(be, ring.mul(y, y));
        for &x in &reps {
            let t = ring.reduce(ring.add(ring.mul(ae, ring.mul(x, x)), by2), k);
            let Some(zs) = squares.get(&t) else { continue };
            for &z in zs {
                if ring.val(x) > 0 && ring.val(y) > 0 && ring.val(z) > 0 {
                    continue;
                }
                let d = [ring.mul(two, z), ring.mul(two, ring.mul(ae, x)), ring.mul(two, ring.mul(be, y))]
                    .iter()
                    .map(|&g| ring.val(g))
                    .min()
                    .unwrap();
                if 2 * d < k {
                    found = Some([x, y, z]);
                    break 'outer;
                }
            }
        }
    }
    let render_coeff = |c: i128| c.to_string();
    let witness = found.map(|[x, y, z]| IsotropyWitness {
        x: ring.render(x, k),
        y: ring.render(y, k),
        z: ring.render(z, k),
        level: k,
    });
    Ok(HilbertValue {
        sign: if found.is_some() { 1 } else { -1 },
        witness,
        modulus_level: k,
        form: (render_coeff(signed(ai, bits)), render_coeff(signed(bi, bits))),
        ring,
        coeffs: (ae, be),
        raw: found,
        precision_bits: bits,
    })
}

/// Small signed representative of `x mod 2^bits`.
fn signed(x: i128, bits: u32) -> i128 {
    let m = 1i128 << bits.min(100);
    let r = x.rem_euclid(m);
    if r > m / 2 {
        r - m
    } else {
        r
    }
}

/// The Hilbert symbol `(a, b)` over `Q_2`.
pub fn hilbert2(a: &CdvfElement, b: &CdvfElement) -> Result<HilbertValue> {
    search(Ring::base(), a, b)
}

/// The Hilbert symbol of the images of `a, b ∈ Q_2` in `L`, for `L = Q_2`
/// or `L = Q_2(√c)`.
pub fn hilbert_ext(a: &CdvfElement, b: &CdvfElement, l: &FieldDescriptor) -> Result<HilbertValue> {
    search(Ring::from_descriptor(l)?, a, b)
}

/// Residue of `(−1)^{mn} a^n / b^m` with `m = v(a)`, `n = v(b)`, so
/// `(π, u) ↦ ū⁻¹`.
pub fn tame_symbol(a: &CdvfElement, b: &CdvfElement) -> Result<ResidueElement> {
    let m = a.valuation().exact().ok_or(Error::ZeroOrBelowPrecision)?;
    let n = b.valuation().exact().ok_or(Error::ZeroOrBelowPrecision)?;
    let field: &Arc<Field> = a.field();
    let sign = if (m * n) % 2 == 0 { field.one() } else { field.int(-1) };
    sign.mul(&a.pow(n)?).mul(&b.pow(-m)?).residue()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2() -> Arc<Field> {
        Field::from_toml("prime = 2\n").unwrap()
    }

    fn h(a: i128, b: i128) -> HilbertValue {
        let f = q2();
        hilbert2(&f.int(a), &f.int(b)).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(h(3, 3).sign, -1);
        let v = h(2, 2);
        assert_eq!(v.sign, 1);
        let w = v.witness.clone().unwrap();
        assert_eq!((w.x.as_str(), w.y.as_str(), w.z.as_str()), ("1", "1", "2"));
        let v = h(1, 7);
        let w = v.witness.clone().unwrap();
        assert_eq!((w.x.as_str(), w.y.as_str(), w.z.as_str()), ("1", "0", "1"));
        assert_eq!(h(5, 5).sign, 1);
        assert!(v.verify_at_double_precision());
    }

    #[test]
    fn extensions() {
        let f = q2();
        let l2 = FieldDescriptor::from_toml("prime = 2\n[[tower]]\nkind = \"root_of_uniformizer\"\ndegree = 2\n").unwrap();
        let l5 =
            FieldDescriptor::from_toml("prime = 2\n[[tower]]\nkind = \"root_of_unit\"\nelement = \"5\"\ndegree = 2\n").unwrap();
        for l in [&l2, &l5] {
            let v = hilbert_ext(&f.int(3), &f.int(3), l).unwrap();
            assert_eq!(v.sign, 1);
            assert!(v.verify_at_double_precision());
            assert_eq!(hilbert_ext(&f.int(1), &f.int(6), l).unwrap().sign, 1);
        }
        let l3 =
            FieldDescriptor::from_toml("prime = 2\n[[tower]]\nkind = \"root_of_unit\"\nelement = \"3\"\ndegree = 2\n").unwrap();
        assert_eq!(hilbert_ext(&f.int(-1), &f.int(-1), &l3).unwrap().sign, 1);
        let t = FieldDescriptor::from_toml("prime = 2\nresidue_vars = [\"t\"]\n").unwrap();
        assert!(matches!(hilbert_ext(&f.int(3), &f.int(3), &t), Err(Error::UnsupportedDescriptor(_))));
        let ft = Field::new(t).unwrap();
        assert!(matches!(hilbert2(&ft.int(3), &ft.int(3)), Err(Error::UnsupportedDescriptor(_))));
    }

    #[test]
    fn tame_examples() {
        let f = Field::from_toml("prime = 2\nresidue_vars = [\"u\"]\n").unwrap();
        let pi = f.uniformizer();
        let u = f.parse("u").unwrap();
        let inv_u = tame_symbol(&pi, &u).unwrap();
        assert_eq!(inv_u, u.residue().unwrap().inv().unwrap());
        assert!(tame_symbol(&pi, &pi).unwrap().is_one());
        assert!(tame_symbol(&u, &f.parse("1+u").unwrap()).unwrap().is_one());
        let f3 = Field::from_toml("prime = 3\n").unwrap();
        assert_eq!(tame_symbol(&f3.int(3), &f3.int(3)).unwrap().to_string(), "-1");
        assert!(matches!(tame_symbol(&f.zero(), &u), Err(Error::ZeroOrBelowPrecision)));
    }
}
