use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::{qi, Polynomial, Q};
use crate::error::{Error, Result};

/// Exact rational function `num(z) / den(z)` in canonical form.
///
/// Invariants: `den` is monic, `gcd(num, den) = 1`, and zero is `0 / 1`.
/// Equality is therefore structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

/// Reduces `num / den` to canonical form.
pub fn canonicalize(num: Polynomial, den: Polynomial) -> Result<RationalFunction> {
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(RationalFunction::reduce(num, den))
}

impl RationalFunction {
    fn reduce(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g), den.exact_div(&g))
        };
        Self::normalize_lead(num, den)
    }

    /// Scales an already coprime pair so the denominator is monic.
    fn normalize_lead(num: Polynomial, den: Polynomial) -> Self {
        let (den, lead) = den.monic();
        let num = if lead.is_one() { num } else { num.scale(&lead.recip()) };
        RationalFunction { num, den }
    }

    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        RationalFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(qi(c))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    /// The shift operator `z`.
    pub fn z() -> Self {
        Self::from_poly(Polynomial::z())
    }

    /// The delay `1/z`.
    pub fn z_inv() -> Self {
        RationalFunction {
            num: Polynomial::one(),
            den: Polynomial::z(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// The value if this function is a constant.
    pub fn constant_value(&self) -> Option<Q> {
        (self.den.is_one() && self.num.is_constant()).then(|| self.num.coeff(0))
    }

    /// `deg den - deg num`; `None` for the zero function.
    pub fn relative_degree(&self) -> Option<i64> {
        let n = self.num.degree()? as i64;
        Some(self.den.degree().unwrap_or(0) as i64 - n)
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 0)
    }

    /// `z * self` is proper.
    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 1)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() || self.is_zero() {
            return Self::zero();
        }
        RationalFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        Self::reduce(self.num.shift(k), self.den.clone())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self::normalize_lead(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn eval(&self, z: &Q) -> Option<Q> {
        let d = self.den.eval(z);
        (!d.is_zero()).then(|| self.num.eval(z) / d)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RationalFunction::reduce(&self.num + &rhs.num, self.den.clone());
        }
        let g = self.den.gcd(&rhs.den);
        if g.is_one() {
            let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            return RationalFunction::reduce(num, &self.den * &rhs.den);
        }
        let left = self.den.exact_div(&g);
        let right = rhs.den.exact_div(&g);
        let num = &(&self.num * &right) + &(&rhs.num * &left);
        RationalFunction::reduce(num, &(&left * &right) * &g)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        // cross-cancel; the operands are already reduced
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let (a, d) = if g1.is_one() {
            (self.num.clone(), rhs.den.clone())
        } else {
            (self.num.exact_div(&g1), rhs.den.exact_div(&g1))
        };
        let (c, b) = if g2.is_one() {
            (rhs.num.clone(), self.den.clone())
        } else {
            (rhs.num.exact_div(&g2), self.den.exact_div(&g2))
        };
        RationalFunction::normalize_lead(&a * &c, &b * &d)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Zero for RationalFunction {
    fn zero() -> Self {
        RationalFunction::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl std::ops::Add for RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: RationalFunction) -> RationalFunction {
        &self + &rhs
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else if self.num.degree().unwrap_or(0) == 0 {
            write!(f, "{}/({})", self.num, self.den)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
