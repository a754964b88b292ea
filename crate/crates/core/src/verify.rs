//! Seeded randomized checks of the lemmas the reduction pipeline rests on.
//! Every run is reproducible from its seed; samples are drawn sequentially
//! from a ChaCha stream.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::CdvfElement;
use crate::error::{Error, Result};
use crate::field::{Field, FieldDescriptor, TowerRecord};
use crate::hensel::pth_root_1unit;
use crate::oracle::{hilbert2, hilbert_ext};
use crate::pseudo_perfect::PseudoBasis;
use crate::residue::{parse_residue, ResidueElement, ResidueField};
use crate::symbols::{
    filtration_certificate, kato_rewrite, split_by_pseudoperfect, sum_pth_reduce, unit_expand, MilnorSymbol, Outcome,
    SplitOptions,
};

/// A random polynomial over the prime field with every exponent at most
/// `deg`. With `rational`, divided by a random nonzero polynomial.
pub fn random_residue(rf: &Arc<ResidueField>, rng: &mut impl Rng, deg: u32, rational: bool) -> ResidueElement {
    let num = random_poly_text(rf, rng, deg);
    let text = if rational {
        let mut den = random_poly_text(rf, rng, deg);
        if den == "0" {
            den = "1".into();
        }
        format!("({num})/({den})")
    } else {
        num
    };
    parse_residue(rf, &text).expect("generated residue text parses")
}

fn random_poly_text(rf: &Arc<ResidueField>, rng: &mut impl Rng, deg: u32) -> String {
    let p = rf.p();
    let n = rf.nvars();
    let mut exps = vec![0u32; n];
    let mut parts = Vec::new();
    loop {
        let c = rng.gen_range(0..p);
        if c != 0 {
            let mut mono = vec![c.to_string()];
            for (v, &k) in rf.vars().iter().zip(&exps) {
                if k > 0 {
                    mono.push(format!("{v}^{k}"));
                }
            }
            parts.push(mono.join("*"));
        }
        // next exponent vector in the box [0, deg]^n
        let mut i = 0;
        while i < n && exps[i] == deg {
            exps[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        exps[i] += 1;
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Random elements of a modeled field.
pub struct Sampler {
    field: Arc<Field>,
    rng: ChaCha8Rng,
    /// Residue digits use exponents up to this bound.
    pub degree: u32,
}

impl Sampler {
    pub fn new(field: &Arc<Field>, seed: u64) -> Sampler {
        Sampler { field: field.clone(), rng: ChaCha8Rng::seed_from_u64(seed), degree: 2 }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn residue(&mut self) -> ResidueElement {
        let rf = self.field.residue_field().clone();
        let rational = self.rng.gen_bool(0.25);
        random_residue(&rf, &mut self.rng, self.degree, rational)
    }

    fn nonzero_residue(&mut self) -> ResidueElement {
        loop {
            let r = self.residue();
            if !r.is_zero() {
                return r;
            }
        }
    }

    /// An integral element `Σ lift(r_j) π^j` with `depth` random digits.
    pub fn integral(&mut self, depth: i64) -> CdvfElement {
        let mut x = self.field.zero();
        for j in 0..depth {
            let r = self.residue();
            x = x.add(&self.field.lift(&r).mul_uniformizer_pow(j));
        }
        x
    }

    pub fn unit(&mut self) -> CdvfElement {
        let first = self.nonzero_residue();
        let depth = self.field.precision();
        self.field.lift(&first).add(&self.integral(depth - 1).mul_uniformizer_pow(1))
    }

    /// An element of valuation exactly `n`.
    pub fn with_valuation(&mut self, n: i64) -> CdvfElement {
        self.unit().mul_uniformizer_pow(n)
    }

    /// A nonzero element with valuation in `[0, max_val]`.
    pub fn nonzero(&mut self, max_val: i64) -> CdvfElement {
        let n = self.rng.gen_range(0..=max_val);
        self.with_valuation(n)
    }

    /// `1 + π^n·x` for a random integral `x`.
    pub fn one_unit(&mut self, n: i64) -> CdvfElement {
        let depth = (self.field.precision() - n).max(1);
        self.field.one().add(&self.integral(depth).mul_uniformizer_pow(n))
    }

    /// A unit written as `Σ b_i^p` with `k` summands, returned with the
    /// `b_i`.
    pub fn sum_of_pth_powers(&mut self, k: usize) -> (CdvfElement, Vec<CdvfElement>) {
        let p = self.field.p() as i64;
        loop {
            let bs: Vec<CdvfElement> = (0..k).map(|_| self.nonzero(1)).collect();
            let Ok(g) = bs.iter().try_fold(self.field.zero(), |acc, b| b.pow(p).map(|bp| acc.add(&bp))) else {
                continue;
            };
            let c = bs.iter().fold(self.field.zero(), |acc, b| acc.add(b));
            if g.is_unit() && c.is_unit() {
                return (g, bs);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    /// `U^n ⊆ (O^×)^p` for `n > e'`, by constructing the root.
    UnitPth,
    /// `{1+x, 1+y} ∈ U^{i+j} K_2` via the rewrite.
    Kato2,
    /// The rewrite is an equality once `i + j + 1 > e'`; checked against
    /// the Hilbert symbol over `Q_2`.
    BlochKato,
    UnitExpand,
    PthSum,
    /// Nonsplit symbols over `Q_2` are not trivialized over `K` itself and
    /// sit at the tame level.
    KeyLemmaP2Sharpness,
    /// Nonsplit symbols over `Q_2` die in `Q_2(√2)`.
    Res2Vanishing,
}

impl Lemma {
    pub const ALL: [Lemma; 7] = [
        Lemma::UnitPth,
        Lemma::Kato2,
        Lemma::BlochKato,
        Lemma::UnitExpand,
        Lemma::PthSum,
        Lemma::KeyLemmaP2Sharpness,
        Lemma::Res2Vanishing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::UnitPth => "unitpth",
            Lemma::Kato2 => "kato2",
            Lemma::BlochKato => "blochkato",
            Lemma::UnitExpand => "unit_expand",
            Lemma::PthSum => "pth_sum",
            Lemma::KeyLemmaP2Sharpness => "key_lemma_p2_sharpness",
            Lemma::Res2Vanishing => "res2_vanishing",
        }
    }
}

impl FromStr for Lemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Lemma> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown lemma {s}")))
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleFailure {
    pub index: usize,
    pub input: String,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub lemma: Lemma,
    pub samples: usize,
    pub agreements: usize,
    pub failures: Vec<SampleFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// The failing sample with the shortest input.
    pub fn minimal_failure(&self) -> Option<&SampleFailure> {
        self.failures.iter().min_by_key(|f| (f.input.len(), f.index))
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} oracle agreements", self.lemma, self.agreements, self.samples)
    }
}

/// Outcome of one sample: `Ok(())` agrees, `Err(detail)` is a violation.
type Check = std::result::Result<(), String>;

fn require_q2(field: &Field, lemma: Lemma) -> Result<()> {
    let d = field.descriptor();
    if d.prime() == 2 && d.residue_vars().is_empty() && d.tower().is_empty() {
        Ok(())
    } else {
        Err(Error::UnsupportedDescriptor(format!("{lemma} needs the Hilbert symbol oracle, which runs over base Q_2")))
    }
}

/// `Q_2(√2)`.
pub fn q2_sqrt2(base: &FieldDescriptor) -> Result<FieldDescriptor> {
    base.extended(&[TowerRecord::root_of_uniformizer(2)], None)
}

pub fn verify_lemma(lemma: Lemma, field: &Arc<Field>, samples: usize, seed: u64) -> Result<VerifyReport> {
    let mut s = Sampler::new(field, seed);
    let p = field.p() as i64;
    let big_n = field.precision();
    let ep = field.e_prime();
    let floor_ep = ep.floor().to_integer();
    match lemma {
        Lemma::KeyLemmaP2Sharpness | Lemma::Res2Vanishing | Lemma::BlochKato => require_q2(field, lemma)?,
        _ => {}
    }
    let l_desc = q2_sqrt2(field.descriptor());
    let mut report = VerifyReport { lemma, samples, agreements: 0, failures: Vec::new() };
    for index in 0..samples {
        let (input, check): (String, Check) = match lemma {
            Lemma::UnitPth => {
                let n = floor_ep + 1;
                let u = s.one_unit(n);
                let check = match pth_root_1unit(&u, n) {
                    Ok(r) => {
                        let v = r.pow(p).map(|rp| rp.sub(&u).vlow()).unwrap_or(i64::MIN);
                        if v >= big_n {
                            Ok(())
                        } else {
                            Err(format!("v(r^p - u) = {v} < {big_n}"))
                        }
                    }
                    Err(e) => Err(e.to_string()),
                };
                (u.render(), check)
            }
            Lemma::Kato2 | Lemma::BlochKato => {
                let top = (floor_ep + 1).max(2);
                let i = s.rng().gen_range(1..=top);
                let j = s.rng().gen_range(1..=top);
                let x = s.with_valuation(i);
                let y = s.with_valuation(j);
                let input = format!("x = {}, y = {}", x.render(), y.render());
                (input, check_kato(lemma, &x, &y, i + j))
            }
            Lemma::UnitExpand => {
                let a = s.unit();
                let check = unit_expand(&a).and_then(|ex| {
                    let back = ex.sum()?.mul(&ex.residual);
                    let res_level = ex.residual.sub(&field.one()).vlow();
                    Ok((back.eq_at_precision(&a), res_level))
                });
                let check = match check {
                    Ok((true, lvl)) if crate::symbols::above_e_prime(field, lvl) => Ok(()),
                    Ok((true, lvl)) => Err(format!("residual only at level {lvl}")),
                    Ok((false, _)) => Err("reconstruction differs".into()),
                    Err(e) => Err(e.to_string()),
                };
                (a.render(), check)
            }
            Lemma::PthSum => {
                let k = s.rng().gen_range(1..=3);
                let (g, bs) = s.sum_of_pth_powers(k);
                let input = bs.iter().map(CdvfElement::render).collect::<Vec<_>>().join(", ");
                let check = match sum_pth_reduce(&bs) {
                    Ok((c, m)) => {
                        let back = c.pow(p).map(|cp| cp.mul(&field.one().add(&m)));
                        match back {
                            Ok(b) if !b.eq_at_precision(&g) => Err("c^p(1+m) differs from the sum".into()),
                            Ok(_) if m.vlow() < field.e() => Err(format!("v(m) = {} < e", m.vlow())),
                            Ok(_) => Ok(()),
                            Err(e) => Err(e.to_string()),
                        }
                    }
                    Err(e) => Err(e.to_string()),
                };
                (input, check)
            }
            Lemma::KeyLemmaP2Sharpness | Lemma::Res2Vanishing => {
                let (a, b) = nonsplit_pair(&mut s)?;
                let input = format!("{{{}, {}}}", a.render(), b.render());
                let check = match lemma {
                    Lemma::KeyLemmaP2Sharpness => check_sharpness(field, &a, &b),
                    _ => check_res2(field, l_desc.as_ref().map_err(Clone::clone)?, &a, &b),
                };
                (input, check)
            }
        };
        match check {
            Ok(()) => report.agreements += 1,
            Err(detail) => report.failures.push(SampleFailure { index, input, detail }),
        }
    }
    Ok(report)
}

fn check_kato(lemma: Lemma, x: &CdvfElement, y: &CdvfElement, level: i64) -> Check {
    let field = x.field();
    let one = field.one();
    let (sym, cert) = kato_rewrite(x, y).map_err(|e| e.to_string())?;
    if cert.level != level {
        return Err(format!("certificate level {} != {level}", cert.level));
    }
    let cap = field.e_prime().floor().to_integer() + 1;
    let reached = filtration_certificate(&sym).map_err(|e| e.to_string())?.level;
    if reached < level.min(cap) {
        return Err(format!("rewrite only reaches U^{reached}"));
    }
    if lemma == Lemma::BlochKato {
        let a = hilbert2(&one.add(x), &one.add(y)).map_err(|e| e.to_string())?;
        let t = &sym.terms()[0];
        let b = hilbert2(&t.entries[0], &t.entries[1]).map_err(|e| e.to_string())?;
        if a.sign != b.sign {
            return Err(format!("Hilbert symbols differ: {} vs {}", a.sign, b.sign));
        }
    }
    Ok(())
}

fn nonsplit_pair(s: &mut Sampler) -> Result<(CdvfElement, CdvfElement)> {
    for _ in 0..10_000 {
        let a = s.nonzero(3);
        let b = s.nonzero(3);
        if hilbert2(&a, &b)?.sign == -1 {
            return Ok((a, b));
        }
    }
    Err(Error::PrecisionExhausted("no nonsplit pair found in 10000 draws".into()))
}

fn check_sharpness(field: &Arc<Field>, a: &CdvfElement, b: &CdvfElement) -> Check {
    let sym = MilnorSymbol::from_entries(vec![a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let basis = PseudoBasis::standard(field, 0);
    let cert = split_by_pseudoperfect(&sym, &basis, &SplitOptions::default()).map_err(|e| e.to_string())?;
    if cert.outcome.is_trivialized() {
        return Err("trivialized over K itself".into());
    }
    let e_prime = field.e_prime();
    match &cert.tame {
        Some(t) if e_prime.is_integer() && t.parts.level == e_prime.to_integer() => Ok(()),
        Some(t) => Err(format!("tame level {} != e' = {e_prime}", t.parts.level)),
        None => Err(format!("no tame obstruction recorded: {}", cert.outcome)),
    }
}

fn check_res2(field: &Arc<Field>, l: &FieldDescriptor, a: &CdvfElement, b: &CdvfElement) -> Check {
    let ext = hilbert_ext(a, b, l).map_err(|e| e.to_string())?;
    if ext.sign != 1 || !ext.verify_at_double_precision() {
        return Err("still nonsplit over Q_2(√2)".into());
    }
    let sym = MilnorSymbol::from_entries(vec![a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let basis = PseudoBasis::standard(field, 1);
    let cert = split_by_pseudoperfect(&sym, &basis, &SplitOptions::default()).map_err(|e| e.to_string())?;
    cert.replay().map_err(|e| format!("trace does not replay: {e}"))?;
    match cert.outcome {
        Outcome::Trivialized => Ok(()),
        other => Err(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runners_pass_on_small_samples() {
        let q2 = Field::from_toml("prime = 2\nresidue_brauer_p_trivial = true\n").unwrap();
        let f3t = Field::from_toml("prime = 3\nresidue_vars = [\"t\"]\n").unwrap();
        for lemma in Lemma::ALL {
            let r = verify_lemma(lemma, &q2, 20, 1).unwrap();
            assert!(r.passed(), "{r} {:?}", r.minimal_failure());
        }
        for lemma in [Lemma::UnitPth, Lemma::Kato2, Lemma::UnitExpand, Lemma::PthSum] {
            let r = verify_lemma(lemma, &f3t, 10, 2).unwrap();
            assert!(r.passed(), "{r} {:?}", r.minimal_failure());
        }
        assert!(matches!(verify_lemma(Lemma::BlochKato, &f3t, 1, 0), Err(Error::UnsupportedDescriptor(_))));
    }

    #[test]
    fn names_round_trip() {
        for lemma in Lemma::ALL {
            assert_eq!(lemma.name().parse::<Lemma>().unwrap(), lemma);
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let f = Field::from_toml("prime = 2\nresidue_vars = [\"t\"]\n").unwrap();
        let a: Vec<String> = (0..5).map(|_| Sampler::new(&f, 9).unit().render()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }
}
