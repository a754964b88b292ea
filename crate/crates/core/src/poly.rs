//! Sparse multivariate polynomials over `Z/mZ` with packed exponent vectors.
//!
//! The same type serves both the truncated valuation rings (`m = p^M`) and
//! the residue fields (`m = p`). Operations that need a field (gcd, exact
//! division, monic normalization) assume `m` is prime.

use std::collections::HashMap;
use std::fmt::Write as _;

/// Maximum number of variables a monomial can carry.
pub const MAX_VARS: usize = 8;
const BITS: usize = 16;
const MASK: u128 = (1 << BITS) - 1;

/// Exponent vector packed into 16-bit lanes, variable 0 in the top lane, so
/// integer order on the packed word is lexicographic order on exponents.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Mono(pub u128);

fn lane(i: usize) -> usize {
    assert!(i < MAX_VARS, "variable index {i} out of range");
    (MAX_VARS - 1 - i) * BITS
}

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn var(i: usize) -> Mono {
        Mono(1u128 << lane(i))
    }

    pub fn var_pow(i: usize, k: u32) -> Mono {
        Mono((k as u128) << lane(i))
    }

    pub fn from_exps(exps: &[u32]) -> Mono {
        exps.iter()
            .enumerate()
            .fold(Mono::ONE, |acc, (i, &k)| acc.mul(Mono::var_pow(i, k)))
    }

    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> lane(i)) & MASK) as u32
    }

    pub fn exps(self, nv: usize) -> Vec<u32> {
        (0..nv).map(|i| self.exp(i)).collect()
    }

    pub fn mul(self, o: Mono) -> Mono {
        Mono(self.0 + o.0)
    }

    pub fn pow(self, k: u32) -> Mono {
        Mono(self.0 * k as u128)
    }

    pub fn divides(self, o: Mono) -> bool {
        (0..MAX_VARS).all(|i| self.exp(i) <= o.exp(i))
    }

    /// `o / self`, assuming `self.divides(o)`.
    pub fn div_into(self, o: Mono) -> Mono {
        Mono(o.0 - self.0)
    }

    pub fn total_degree(self) -> u32 {
        (0..MAX_VARS).map(|i| self.exp(i)).sum()
    }

    /// Remove variable `i` from the monomial.
    pub fn without(self, i: usize) -> Mono {
        Mono(self.0 & !(MASK << lane(i)))
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

pub(crate) fn neg_mod(a: u64, m: u64) -> u64 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

pub(crate) fn reduce_i128(c: i128, m: u64) -> u64 {
    c.rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| reduce_i128(s0, m))
}

pub(crate) fn pow_mod(mut a: u64, mut k: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while k > 0 {
        if k & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        k >>= 1;
    }
    r
}

/// A polynomial over `Z/mZ`. Terms are kept sorted by descending monomial
/// with nonzero coefficients, so structural equality is ring equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    m: u64,
    terms: Vec<(Mono, u64)>,
}

impl Poly {
    pub fn zero(m: u64) -> Poly {
        Poly { m, terms: Vec::new() }
    }

    pub fn one(m: u64) -> Poly {
        Poly::constant(m, 1)
    }

    pub fn constant(m: u64, c: i128) -> Poly {
        Poly::monomial(m, Mono::ONE, reduce_i128(c, m))
    }

    pub fn monomial(m: u64, mono: Mono, c: u64) -> Poly {
        let c = c % m;
        let terms = if c == 0 { Vec::new() } else { vec![(mono, c)] };
        Poly { m, terms }
    }

    pub fn var(m: u64, i: usize) -> Poly {
        Poly::monomial(m, Mono::var(i), 1)
    }

    /// Build from arbitrary (unsorted, possibly repeated) terms.
    pub fn from_terms(m: u64, mut raw: Vec<(Mono, u64)>) -> Poly {
        raw.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        let mut terms: Vec<(Mono, u64)> = Vec::with_capacity(raw.len());
        for (mono, c) in raw {
            let c = c % m;
            match terms.last_mut() {
                Some(last) if last.0 == mono => last.1 = add_mod(last.1, c, m),
                _ => terms.push((mono, c)),
            }
        }
        terms.retain(|t| t.1 != 0);
        Poly { m, terms }
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn terms(&self) -> &[(Mono, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0] == (Mono::ONE, 1)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.0 == Mono::ONE)
    }

    pub fn constant_term(&self) -> u64 {
        self.terms
            .last()
            .filter(|t| t.0 == Mono::ONE)
            .map_or(0, |t| t.1)
    }

    pub fn leading(&self) -> Option<(Mono, u64)> {
        self.terms.first().copied()
    }

    pub fn coeff(&self, mono: Mono) -> u64 {
        self.terms
            .binary_search_by(|t| mono.cmp(&t.0))
            .map_or(0, |i| self.terms[i].1)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        debug_assert_eq!(self.m, o.m);
        let m = self.m;
        let (a, b) = (&self.terms, &o.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = add_mod(a[i].1, b[j].1, m);
                    if c != 0 {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Poly { m, terms: out }
    }

    pub fn neg(&self) -> Poly {
        let m = self.m;
        Poly {
            m,
            terms: self.terms.iter().map(|&(mo, c)| (mo, m - c)).collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: u64) -> Poly {
        let m = self.m;
        let c = c % m;
        let terms = self
            .terms
            .iter()
            .filter_map(|&(mo, a)| {
                let v = mul_mod(a, c, m);
                (v != 0).then_some((mo, v))
            })
            .collect();
        Poly { m, terms }
    }

    pub fn mul_mono(&self, mono: Mono) -> Poly {
        Poly {
            m: self.m,
            terms: self.terms.iter().map(|&(mo, c)| (mo.mul(mono), c)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        debug_assert_eq!(self.m, o.m);
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.m);
        }
        if o.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return o.clone();
        }
        let m = self.m;
        let mut acc: HashMap<Mono, u64> = HashMap::with_capacity(self.len() * o.len());
        for &(ma, ca) in &self.terms {
            for &(mb, cb) in &o.terms {
                let e = acc.entry(ma.mul(mb)).or_insert(0);
                *e = add_mod(*e, mul_mod(ca, cb, m), m);
            }
        }
        Poly::from_terms(m, acc.into_iter().collect())
    }

    pub fn pow(&self, mut k: u32) -> Poly {
        let mut base = self.clone();
        let mut r = Poly::one(self.m);
        while k > 0 {
            if k & 1 == 1 {
                r = r.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        r
    }

    /// Reduce coefficients into a smaller modulus `m2` dividing `m`.
    pub fn reduce_mod(&self, m2: u64) -> Poly {
        Poly::from_terms(m2, self.terms.clone())
    }

    /// Reinterpret the coefficients (taken as integers in `[0, m)`) modulo `m2`.
    pub fn with_modulus(&self, m2: u64) -> Poly {
        self.reduce_mod(m2)
    }

    pub fn map_terms(&self, f: impl Fn(Mono, u64) -> Option<(Mono, u64)>) -> Poly {
        Poly::from_terms(self.m, self.terms.iter().filter_map(|&(mo, c)| f(mo, c)).collect())
    }

    pub fn deg_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.0.exp(var)).max().unwrap_or(0)
    }

    pub fn involves(&self, var: usize) -> bool {
        self.terms.iter().any(|t| t.0.exp(var) > 0)
    }

    /// Substitute `images[i]` for variable `i`. Variables without an image
    /// (index beyond `images.len()`) must not occur.
    pub fn substitute(&self, images: &[Poly], m_out: u64) -> Poly {
        let mut cache: HashMap<(usize, u32), Poly> = HashMap::new();
        let mut acc = Poly::zero(m_out);
        for &(mono, c) in &self.terms {
            let mut t = Poly::constant(m_out, c as i128);
            for (i, img) in images.iter().enumerate() {
                let k = mono.exp(i);
                if k == 0 {
                    continue;
                }
                let pw = cache.entry((i, k)).or_insert_with(|| img.pow(k)).clone();
                t = t.mul(&pw);
            }
            debug_assert!((images.len()..MAX_VARS).all(|i| mono.exp(i) == 0));
            acc = acc.add(&t);
        }
        acc
    }

    /// Set variable `var` to the constant `c`.
    pub fn specialize(&self, var: usize, c: u64) -> Poly {
        let m = self.m;
        Poly::from_terms(
            m,
            self.terms
                .iter()
                .map(|&(mo, a)| (mo.without(var), mul_mod(a, pow_mod(c, mo.exp(var) as u64, m), m)))
                .collect(),
        )
    }

    /// Coefficients with respect to `var`: `self = sum_k out[k] * var^k`.
    pub fn coeffs_in(&self, var: usize) -> Vec<Poly> {
        let d = self.deg_in(var) as usize;
        let mut buckets: Vec<Vec<(Mono, u64)>> = vec![Vec::new(); d + 1];
        for &(mo, c) in &self.terms {
            buckets[mo.exp(var) as usize].push((mo.without(var), c));
        }
        buckets.into_iter().map(|t| Poly::from_terms(self.m, t)).collect()
    }

    pub fn from_coeffs_in(m: u64, var: usize, coeffs: &[Poly]) -> Poly {
        let mut raw = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            raw.extend(c.terms.iter().map(|&(mo, a)| (mo.mul(Mono::var_pow(var, k as u32)), a)));
        }
        Poly::from_terms(m, raw)
    }

    /// Minimum p-adic valuation of the coefficients (`None` for zero).
    pub fn content_valuation(&self, p: u64) -> Option<u32> {
        self.terms.iter().map(|t| padic_val(t.1, p)).min()
    }

    /// Render with the given variable names.
    pub fn render(&self, names: &[String], signed: bool) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (idx, &(mono, c)) in self.terms.iter().rev().enumerate() {
            let (neg, mag) = if signed && c > self.m / 2 { (true, self.m - c) } else { (false, c) };
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { "-" } else { "+" });
            }
            let mono_s = render_mono(mono, names);
            if mono_s.is_empty() {
                let _ = write!(s, "{mag}");
            } else if mag == 1 {
                s.push_str(&mono_s);
            } else {
                let _ = write!(s, "{mag}*{mono_s}");
            }
        }
        s
    }
}

pub(crate) fn render_mono(mono: Mono, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, name) in names.iter().enumerate() {
        match mono.exp(i) {
            0 => {}
            1 => parts.push(name.clone()),
            k => parts.push(format!("{name}^{k}")),
        }
    }
    parts.join("*")
}

/// p-adic valuation of a nonzero integer.
pub fn padic_val(mut c: u64, p: u64) -> u32 {
    debug_assert!(c != 0);
    let mut v = 0;
    while c % p == 0 {
        c /= p;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// Field operations (prime modulus)

impl Poly {
    /// Scale so the leading coefficient is 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => self.scale(inv_mod(c, self.m).expect("nonzero leading coefficient")),
        }
    }

    /// Exact quotient `self / d` if `d` divides `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (dl, dc) = d.leading()?;
        let dinv = inv_mod(dc, self.m)?;
        let mut rem = self.clone();
        let mut q = Vec::new();
        while let Some((rl, rc)) = rem.leading() {
            if !dl.divides(rl) {
                return None;
            }
            let mono = dl.div_into(rl);
            let c = mul_mod(rc, dinv, self.m);
            q.push((mono, c));
            rem = rem.sub(&d.mul_mono(mono).scale(c));
        }
        Some(Poly::from_terms(self.m, q))
    }

    fn highest_var(&self) -> Option<usize> {
        (0..MAX_VARS).rev().find(|&i| self.involves(i))
    }

    /// Greatest common divisor, normalized monic (and 1 for coprime inputs).
    pub fn gcd(&self, o: &Poly) -> Poly {
        if self.is_zero() {
            return o.monic();
        }
        if o.is_zero() {
            return self.monic();
        }
        let var = match (self.highest_var(), o.highest_var()) {
            (None, None) => return Poly::one(self.m),
            (a, b) => a.max(b).unwrap(),
        };
        let ca = content_in(self, var);
        let cb = content_in(o, var);
        let c = ca.gcd(&cb);
        let mut a = self.exact_div(&ca).expect("content divides");
        let mut b = o.exact_div(&cb).expect("content divides");
        if a.deg_in(var) < b.deg_in(var) {
            std::mem::swap(&mut a, &mut b);
        }
        if let Some(h) = modular_gcd_bivariate(&a, &b, var) {
            return h.mul(&c).monic();
        }
        loop {
            let r = prem_in(&a, &b, var);
            if r.is_zero() {
                break;
            }
            a = b;
            b = primitive_in(&r, var);
            if b.deg_in(var) == 0 {
                // coprime in `var`
                b = Poly::one(self.m);
                break;
            }
        }
        primitive_in(&b, var).mul(&c).monic()
    }
}

fn content_in(a: &Poly, var: usize) -> Poly {
    let mut g = Poly::zero(a.m);
    for c in a.coeffs_in(var) {
        if c.is_zero() {
            continue;
        }
        g = g.gcd(&c);
        if g.is_constant() && !g.is_zero() {
            return Poly::one(a.m);
        }
    }
    g
}

fn primitive_in(a: &Poly, var: usize) -> Poly {
    let c = content_in(a, var);
    a.exact_div(&c).expect("content divides")
}

/// Pseudo-remainder of `a` by `b` with respect to `var`.
fn prem_in(a: &Poly, b: &Poly, var: usize) -> Poly {
    let db = b.deg_in(var);
    let bc = b.coeffs_in(var);
    let lb = bc[db as usize].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.deg_in(var) >= db {
        let dr = r.deg_in(var);
        let lr = r.coeffs_in(var)[dr as usize].clone();
        let shift = Mono::var_pow(var, dr - db);
        r = r.mul(&lb).sub(&b.mul(&lr).mul_mono(shift));
    }
    r
}

// ---------------------------------------------------------------------------
// Coprimality test by reduction to a finite field

/// Dense univariate polynomials over `F_p`, lowest degree first, no
/// trailing zeros.
type Dense = Vec<u64>;

fn trim(mut v: Dense) -> Dense {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// `a mod f` for monic `f`.
fn dense_rem(a: &[u64], f: &[u64], p: u64) -> Dense {
    let mut r = a.to_vec();
    let df = f.len() - 1;
    while r.len() > df {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - df;
        for (i, &fi) in f.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - mul_mod(c, fi, p)) % p;
        }
        r = trim(r);
    }
    trim(r)
}

fn dense_mul(a: &[u64], b: &[u64], p: u64) -> Dense {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    trim(out)
}

fn dense_sub(a: &[u64], b: &[u64], p: u64) -> Dense {
    let n = a.len().max(b.len());
    let out = (0..n).map(|i| (a.get(i).unwrap_or(&0) + p - b.get(i).unwrap_or(&0)) % p).collect();
    trim(out)
}

/// Inverse of `a` modulo irreducible monic `f`.
fn dense_inv(a: &[u64], f: &[u64], p: u64) -> Option<Dense> {
    let (mut r0, mut r1) = (f.to_vec(), dense_rem(a, f, p));
    let (mut s0, mut s1): (Dense, Dense) = (Vec::new(), vec![1]);
    while !r1.is_empty() {
        // one long division r0 = q·r1 + r
        let inv_lc = inv_mod(*r1.last().unwrap(), p)?;
        let mut q = vec![0; r0.len().saturating_sub(r1.len()) + 1];
        let mut r = r0.clone();
        while r.len() >= r1.len() && !r.is_empty() {
            let c = mul_mod(*r.last().unwrap(), inv_lc, p);
            let shift = r.len() - r1.len();
            q[shift] = c;
            for (i, &x) in r1.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - mul_mod(c, x, p)) % p;
            }
            r = trim(r);
        }
        let s = dense_sub(&s0, &dense_mul(&trim(q), &s1, p), p);
        (r0, r1) = (r1, r);
        (s0, s1) = (s1, s);
    }
    // r0 is a nonzero constant when gcd(a, f) = 1
    (r0.len() == 1).then(|| {
        let c = inv_mod(r0[0], p).unwrap();
        s0.iter().map(|&x| mul_mod(x, c, p)).collect()
    })
}

/// Ben-Or: `f` of degree `d` is irreducible iff `gcd(x^{p^i} − x, f) = 1`
/// for `i ≤ d/2`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    let mut xp: Dense = vec![0, 1];
    for _ in 1..=d / 2 {
        let mut y: Dense = vec![1];
        for _ in 0..p {
            y = dense_rem(&dense_mul(&y, &xp, p), f, p);
        }
        xp = y;
        let g = dense_sub(&xp, &[0, 1], p);
        if g.is_empty() || dense_inv(&g, f, p).is_none() {
            return false;
        }
    }
    true
}

fn dense_gcd(a: &[u64], b: &[u64], p: u64) -> Dense {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let inv = inv_mod(*y.last().unwrap(), p).unwrap();
        let monic_y: Dense = y.iter().map(|&c| mul_mod(c, inv, p)).collect();
        let r = dense_rem(&x, &monic_y, p);
        x = y;
        y = r;
    }
    match x.last() {
        Some(&c) => {
            let inv = inv_mod(c, p).unwrap();
            x.iter().map(|&v| mul_mod(v, inv, p)).collect()
        }
        None => x,
    }
}

fn dense_add(a: &[u64], b: &[u64], p: u64) -> Dense {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| (a.get(i).unwrap_or(&0) + b.get(i).unwrap_or(&0)) % p).collect())
}

/// Monic gcd in `(F_p[u]/f)[v]` of polynomials given by reduced
/// coefficients, lowest `v`-degree first.
fn gcd_over_extension(mut x: Vec<Dense>, mut y: Vec<Dense>, f: &[u64], p: u64) -> Vec<Dense> {
    let pop_zeros = |v: &mut Vec<Dense>| {
        while v.last().is_some_and(|c| c.is_empty()) {
            v.pop();
        }
    };
    pop_zeros(&mut x);
    pop_zeros(&mut y);
    while !y.is_empty() {
        let inv = dense_inv(y.last().unwrap(), f, p).expect("f is irreducible");
        while x.len() >= y.len() {
            let c = dense_rem(&dense_mul(x.last().unwrap(), &inv, p), f, p);
            let shift = x.len() - y.len();
            for (i, yi) in y.iter().enumerate() {
                let t = dense_rem(&dense_mul(&c, yi, p), f, p);
                x[shift + i] = dense_sub(&x[shift + i], &t, p);
            }
            pop_zeros(&mut x);
        }
        std::mem::swap(&mut x, &mut y);
    }
    let inv = dense_inv(x.last().unwrap(), f, p).expect("nonzero");
    x.iter().map(|c| dense_rem(&dense_mul(c, &inv, p), f, p)).collect()
}

/// Monic irreducibles in counting order, from degree `d0` up.
fn irreducibles_from(d0: usize, p: u64) -> impl Iterator<Item = Dense> {
    (d0..).flat_map(move |d| {
        let mut f = vec![0; d + 1];
        f[d] = 1;
        let mut done = false;
        std::iter::from_fn(move || loop {
            if done {
                return None;
            }
            let cand = f.clone();
            let mut i = 0;
            loop {
                if i == d {
                    done = true;
                    break;
                }
                f[i] = (f[i] + 1) % p;
                if f[i] != 0 {
                    break;
                }
                i += 1;
            }
            if cand[0] != 0 && is_irreducible(&cand, p) {
                return Some(cand);
            }
        })
    })
}

/// Brown's modular gcd for primitive `a`, `b` in `var` with exactly one
/// other variable `u`: gcds modulo irreducibles `f(u)`, scaled by the gcd
/// of the leading coefficients and combined by CRT, then checked by
/// division. `None` when the inputs are not bivariate or the loop gives up.
fn modular_gcd_bivariate(a: &Poly, b: &Poly, var: usize) -> Option<Poly> {
    let p = a.m;
    let others: Vec<usize> = (0..MAX_VARS).filter(|&i| i != var && (a.involves(i) || b.involves(i))).collect();
    let [u] = others[..] else { return None };
    if p > 1 << 20 {
        return None;
    }
    let to_dense = |q: &Poly| -> Vec<Dense> {
        q.coeffs_in(var)
            .iter()
            .map(|c| {
                let mut dense = vec![0; c.deg_in(u) as usize + 1];
                for &(mo, x) in c.terms() {
                    dense[mo.exp(u) as usize] = x;
                }
                trim(dense)
            })
            .collect()
    };
    let (da, db) = (to_dense(a), to_dense(b));
    let (la, lb) = (da.last()?.clone(), db.last()?.clone());
    let gamma = dense_gcd(&la, &lb, p);
    let deg_u = |v: &[Dense]| v.iter().map(|c| c.len()).max().unwrap_or(0);
    let bound = gamma.len() + deg_u(&da).min(deg_u(&db)) + 1;
    let mut best: Option<(usize, Vec<Dense>, Dense)> = None;
    for (tries, f) in irreducibles_from(3, p).enumerate() {
        if tries > 200 {
            return None;
        }
        let red = |v: &[Dense]| -> Vec<Dense> { v.iter().map(|c| dense_rem(c, &f, p)).collect() };
        if dense_rem(&la, &f, p).is_empty() || dense_rem(&lb, &f, p).is_empty() {
            continue;
        }
        let g = gcd_over_extension(red(&da), red(&db), &f, p);
        let dv = g.len() - 1;
        if dv == 0 {
            return Some(Poly::one(p));
        }
        let gm = dense_rem(&gamma, &f, p);
        let g: Vec<Dense> = g.iter().map(|c| dense_rem(&dense_mul(c, &gm, p), &f, p)).collect();
        best = match best.take() {
            Some((d, _, _)) if dv < d => Some((dv, g, f.clone())),
            Some((d, acc, m)) if dv == d => {
                // CRT: acc + m·((g − acc)·m⁻¹ mod f)
                let minv = dense_inv(&m, &f, p)?;
                let acc: Vec<Dense> = acc
                    .iter()
                    .zip(&g)
                    .map(|(x, y)| {
                        let t = dense_rem(&dense_mul(&dense_sub(y, x, p), &minv, p), &f, p);
                        dense_add(x, &dense_mul(&m, &t, p), p)
                    })
                    .collect();
                Some((d, acc, dense_mul(&m, &f, p)))
            }
            Some(kept) => Some(kept),
            None => Some((dv, g, f.clone())),
        };
        let (_, acc, m) = best.as_ref().unwrap();
        if m.len() > bound {
            let coeffs: Vec<Poly> = acc
                .iter()
                .map(|c| {
                    let terms = c.iter().enumerate().map(|(k, &x)| (Mono::var_pow(u, k as u32), x)).collect();
                    Poly::from_terms(p, terms)
                })
                .collect();
            let h = primitive_in(&Poly::from_coeffs_in(p, var, &coeffs), var);
            if a.exact_div(&h).is_some() && b.exact_div(&h).is_some() {
                return Some(h);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(terms: &[(&[u32], u64)]) -> Poly {
        Poly::from_terms(2, terms.iter().map(|(e, c)| (Mono::from_exps(e), *c)).collect())
    }

    #[test]
    fn mono_packing_orders_lexicographically() {
        let a = Mono::from_exps(&[1, 0]);
        let b = Mono::from_exps(&[0, 5]);
        assert!(a > b);
        assert_eq!(a.mul(b).exps(2), vec![1, 5]);
        assert!(b.divides(Mono::from_exps(&[3, 6])));
    }

    #[test]
    fn inverse_mod_prime_power() {
        assert_eq!(inv_mod(3, 1024).map(|x| mul_mod(x, 3, 1024)), Some(1));
        assert_eq!(inv_mod(2, 1024), None);
    }

    #[test]
    fn gcd_univariate_and_bivariate() {
        // (1+u)^2 (1+v) and (1+u)(u+v) share 1+u
        let one_u = p2(&[(&[0, 0], 1), (&[1, 0], 1)]);
        let one_v = p2(&[(&[0, 0], 1), (&[0, 1], 1)]);
        let u_v = p2(&[(&[1, 0], 1), (&[0, 1], 1)]);
        let a = one_u.mul(&one_u).mul(&one_v);
        let b = one_u.mul(&u_v);
        assert_eq!(a.gcd(&b), one_u);
        assert!(one_v.gcd(&u_v).is_one());
    }

    #[test]
    fn exact_division_detects_non_divisors() {
        let one_u = p2(&[(&[0, 0], 1), (&[1, 0], 1)]);
        let sq = one_u.mul(&one_u);
        assert_eq!(sq.exact_div(&one_u), Some(one_u.clone()));
        assert_eq!(one_u.exact_div(&p2(&[(&[0, 1], 1)])), None);
    }
}
