//! Deciding whether a unit is a p-th power by climbing the unit filtration.

use num_rational::Ratio;

use crate::element::{CdvfElement, ValuationReport};
use crate::error::{Error, Result};
use crate::hensel::pth_root_1unit;
use crate::residue::{pth_root, solve_additive_exact};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PthPowerStatus {
    PthPower,
    /// `reduced ∈ U^level` and no p-th power moves it higher, so `x` is not a
    /// p-th power. Level 0 means the residue is not a p-th power.
    Stuck { level: i64 },
    /// The precision ran out at `level ≤ e'`.
    Unknown { level: i64 },
}

#[derive(Clone, Debug)]
pub struct Ladder {
    /// `x = root^p · reduced`.
    pub root: CdvfElement,
    pub reduced: CdvfElement,
    pub status: PthPowerStatus,
}

/// Multiply the unit `x` by p-th powers to push `x − 1` as deep into the
/// filtration as possible.
///
/// At a level `i < e'` the p-th powers of `U^{i/p}` reach exactly the
/// residues in `κ^p`; at `i = e'` they reach `z^p + z`; above `e'` every
/// 1-unit is a p-th power. Each stage is decided exactly, so the answer is
/// definitive unless precision runs out.
pub fn pth_power_ladder(x: &CdvfElement) -> Result<Ladder> {
    let field = x.field().clone();
    if !x.is_unit() {
        return Err(Error::NotAUnit);
    }
    let p = field.p() as i64;
    let e = field.e();
    let ep = field.e_prime();
    let mut root = field.one();
    let mut y = x.clone();
    let done = |root, reduced, status| Ok(Ladder { root, reduced, status });
    match pth_root(&y.residue()?) {
        Err(_) => return done(root, y, PthPowerStatus::Stuck { level: 0 }),
        Ok(c) if !c.is_one() => {
            let w = field.lift(&c);
            y = y.div(&w.pow(p)?)?;
            root = w;
        }
        Ok(_) => {}
    }
    for _ in 0..=field.precision() + 2 {
        let d = y.sub(&field.one());
        let i = match d.valuation() {
            ValuationReport::AtLeast(k) => {
                let status = if Ratio::from_integer(k) > ep {
                    PthPowerStatus::PthPower
                } else {
                    PthPowerStatus::Unknown { level: k }
                };
                return done(root, y, status);
            }
            ValuationReport::Exact(i) => i,
        };
        let ri = Ratio::from_integer(i);
        if ri > ep {
            return match pth_root_1unit(&y, i) {
                Ok(s) => {
                    let reduced = y.div(&s.pow(p)?)?;
                    done(root.mul(&s), reduced, PthPowerStatus::PthPower)
                }
                Err(_) => done(root, y, PthPowerStatus::PthPower),
            };
        }
        let cbar = d.mul_uniformizer_pow(-i).residue()?;
        let w = if ri < ep {
            if i % p != 0 {
                return done(root, y, PthPowerStatus::Stuck { level: i });
            }
            match pth_root(&cbar) {
                Ok(r) => field.one().add(&field.lift(&r).mul_uniformizer_pow(i / p)),
                Err(_) => return done(root, y, PthPowerStatus::Stuck { level: i }),
            }
        } else {
            // (1 + π^{e/(p−1)} z)^p ≡ 1 + π^{e'}(z^p + z) since p = π^e in the model
            match solve_additive_exact(&cbar, 1) {
                Some(z) => field.one().add(&field.lift(&z).mul_uniformizer_pow(e / (p - 1))),
                None => return done(root, y, PthPowerStatus::Stuck { level: i }),
            }
        };
        let w = w.lifted();
        y = y.div(&w.pow(p)?)?;
        root = root.mul(&w);
    }
    Err(Error::PrecisionExhausted("filtration ladder did not terminate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn status(f: &std::sync::Arc<Field>, s: &str) -> PthPowerStatus {
        pth_power_ladder(&f.parse(s).unwrap()).unwrap().status
    }

    #[test]
    fn squares_in_q2() {
        let f = Field::from_toml("prime = 2\n").unwrap();
        assert_eq!(status(&f, "9"), PthPowerStatus::PthPower);
        assert_eq!(status(&f, "17"), PthPowerStatus::PthPower);
        assert_eq!(status(&f, "3"), PthPowerStatus::Stuck { level: 1 });
        assert_eq!(status(&f, "5"), PthPowerStatus::Stuck { level: 2 });
        assert_eq!(status(&f, "-1"), PthPowerStatus::Stuck { level: 1 });
        assert_eq!(status(&f, "1/9"), PthPowerStatus::PthPower);
    }

    #[test]
    fn root_reproduces_the_entry() {
        let f = Field::from_toml("prime = 2\nresidue_vars = [\"t\"]\n").unwrap();
        for s in ["(1+t)^2*(1+8*t)", "(1+2*t)^2*t^2", "(t+2)^2", "1+4*(t^2+t)"] {
            let x = f.parse(s).unwrap();
            let l = pth_power_ladder(&x).unwrap();
            assert_eq!(l.status, PthPowerStatus::PthPower, "{s}");
            assert!(l.root.pow(2).unwrap().mul(&l.reduced).eq_at_precision(&x));
        }
        assert_eq!(status(&f, "t"), PthPowerStatus::Stuck { level: 0 });
        assert_eq!(status(&f, "1+4*t"), PthPowerStatus::Stuck { level: 2 });
        assert_eq!(status(&f, "1+2*t"), PthPowerStatus::Stuck { level: 1 });
    }

    #[test]
    fn cubes_in_q3() {
        let f = Field::from_toml("prime = 3\n").unwrap();
        // e' = 3/2: U^2 is all cubes, U^1 is not
        assert_eq!(status(&f, "10"), PthPowerStatus::PthPower);
        assert_eq!(status(&f, "4"), PthPowerStatus::Stuck { level: 1 });
        assert_eq!(status(&f, "8"), PthPowerStatus::PthPower);
        assert_eq!(status(&f, "-1"), PthPowerStatus::PthPower);
    }
}
