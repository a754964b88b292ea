//! Newton iteration over `O_K` and p-th roots of 1-units.

use num_rational::Ratio;

use crate::element::CdvfElement;
use crate::error::{Error, Result};

/// `f(x)` for `f = Σ f[i]·X^i`.
pub fn eval_poly(f: &[CdvfElement], x: &CdvfElement) -> CdvfElement {
    let field = x.field();
    f.iter().rev().fold(field.zero(), |acc, c| acc.mul(x).add(c))
}

fn derivative(f: &[CdvfElement]) -> Vec<CdvfElement> {
    f.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c.mul(&c.field().int(i as i128)))
        .collect()
}

/// The root `r` of `f` with `v(r − x0) > v(f'(x0))`, given
/// `v(f(x0)) > 2·v(f'(x0))`. Certified by `v(f(r)) ≥ N`.
pub fn hensel_root(f: &[CdvfElement], x0: &CdvfElement) -> Result<CdvfElement> {
    hensel_root_to(f, x0, x0.field().precision())
}

/// Lower bound of `v(f(x))` when it is known exactly.
fn exact_val(x: &CdvfElement) -> Option<i64> {
    x.valuation().exact().or_else(|| (x.vlow() < x.prec()).then(|| x.vlow()))
}

pub(crate) fn hensel_root_to(f: &[CdvfElement], x0: &CdvfElement, target: i64) -> Result<CdvfElement> {
    let df = derivative(f);
    let mut x = x0.lifted();
    let mut fx = eval_poly(f, &x);
    if fx.vlow() >= target {
        return Ok(x);
    }
    let dfx = eval_poly(&df, &x);
    let (Some(vf), Some(vd)) = (exact_val(&fx), exact_val(&dfx)) else {
        return Err(Error::HenselConditionFails {
            vf: fx.valuation().to_string(),
            vd: dfx.valuation().to_string(),
        });
    };
    if vf <= 2 * vd {
        return Err(Error::HenselConditionFails { vf: vf.to_string(), vd: vd.to_string() });
    }
    let mut dfx = dfx;
    let mut last = vf;
    for _ in 0..128 {
        x = x.sub(&fx.div(&dfx)?).lifted();
        fx = eval_poly(f, &x);
        if fx.vlow() >= target {
            return Ok(x);
        }
        match exact_val(&fx) {
            Some(v) if v > last => last = v,
            _ => {
                return Err(Error::PrecisionExhausted(format!(
                    "Newton step stalled at v(f) = {}, target {target}",
                    fx.valuation()
                )))
            }
        }
        dfx = eval_poly(&df, &x);
    }
    Err(Error::PrecisionExhausted("Newton iteration did not converge".into()))
}

/// `r` with `r^p = u` at precision and `r ∈ U^{n−e}`, for `u ∈ U^n` and
/// `n > e'`.
///
/// Plain Newton on `X^p − u` from 1 needs `n > 2e`, which is stronger than
/// `n > e'` for odd p. Substituting `X = 1 + π^{n−e}·Y` gives
/// `g(Y) = ((1 + π^{n−e}Y)^p − u)/π^n ≡ Y − (u−1)/π^n (mod π)`, whose
/// derivative is a unit, so Newton on `g` converges whenever `n > e'`.
pub fn pth_root_1unit(u: &CdvfElement, n: i64) -> Result<CdvfElement> {
    let field = u.field();
    let p = field.p() as i64;
    let e = field.e();
    let big_n = field.precision();
    let e_prime = field.e_prime();
    if Ratio::from_integer(n) <= e_prime {
        return Err(Error::PreconditionLevel { n, e_prime: e_prime.to_string() });
    }
    let d = u.sub(&field.one());
    if d.vlow() < n {
        return Err(Error::NotInLevel { n, actual: d.valuation().to_string() });
    }
    if d.vlow() >= big_n {
        return Ok(field.one());
    }
    let k = n - e;
    let mut g = Vec::with_capacity(p as usize + 1);
    g.push(d.neg().mul_uniformizer_pow(-n));
    let mut binom: i128 = 1;
    for i in 1..=p {
        binom = binom * (p - i + 1) as i128 / i as i128;
        g.push(field.int(binom).mul_uniformizer_pow(k * i - n));
    }
    let y0 = d.mul_uniformizer_pow(-n);
    let y = hensel_root_to(&g, &y0, big_n - n)?;
    let r = field.one().add(&y.mul_uniformizer_pow(k)).lifted();
    let check = r.pow(p)?.sub(u);
    if check.vlow() < big_n {
        return Err(Error::PrecisionExhausted(format!("r^p - u has valuation {}", check.valuation())));
    }
    debug_assert!(r.sub(&field.one()).vlow() >= k.min(big_n));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    #[test]
    fn square_root_of_nine() {
        let f = Field::from_toml("prime = 2\n").unwrap();
        let r = pth_root_1unit(&f.int(9), 3).unwrap();
        assert!(r.mul(&r).eq_at_precision(&f.int(9)));
        // the root in U^1 is ±3; both square to 9
        assert!(r.eq_at_precision(&f.int(3)) || r.eq_at_precision(&f.int(-3)));
    }

    #[test]
    fn cube_root_of_ten() {
        let f = Field::from_toml("prime = 3\n").unwrap();
        let r = pth_root_1unit(&f.int(10), 2).unwrap();
        assert!(r.pow(3).unwrap().eq_at_precision(&f.int(10)));
        assert!(r.sub(&f.one()).vlow() >= 1);
    }

    #[test]
    fn level_precondition() {
        let f = Field::from_toml("prime = 2\n").unwrap();
        assert!(matches!(pth_root_1unit(&f.int(5), 2), Err(Error::PreconditionLevel { .. })));
        assert!(matches!(pth_root_1unit(&f.int(5), 3), Err(Error::NotInLevel { .. })));
    }

    #[test]
    fn hensel_examples() {
        let f = Field::from_toml("prime = 2\n").unwrap();
        let poly = [f.int(-17), f.int(0), f.int(1)];
        let r = hensel_root(&poly, &f.int(1)).unwrap();
        assert!(r.mul(&r).eq_at_precision(&f.int(17)));
        let poly = [f.int(-5), f.int(0), f.int(1)];
        assert!(matches!(hensel_root(&poly, &f.int(1)), Err(Error::HenselConditionFails { .. })));
        let a = f.int(7);
        let lin = [a.neg(), f.int(1)];
        assert!(hensel_root(&lin, &a).unwrap().eq_at_precision(&a));
    }

    #[test]
    fn ramified_root() {
        let f = Field::from_toml("prime = 2\n[[tower]]\nkind = \"root_of_uniformizer\"\ndegree = 2\n").unwrap();
        // e' = 4, so level 5 suffices
        let u = f.one().add(&f.uniformizer_pow(5).mul(&f.parse("1+√2").unwrap()));
        let r = pth_root_1unit(&u, 5).unwrap();
        assert!(r.mul(&r).eq_at_precision(&u));
        assert!(r.sub(&f.one()).vlow() >= 3);
    }
}
