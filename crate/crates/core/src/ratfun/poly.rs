use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact scalar field used for every coefficient.
pub type Q = BigRational;

/// Parses an exact rational from `"p/q"` or an integer literal.
pub fn parse_q(text: &str) -> Option<Q> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Q::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // numerator/denominator individually overflow f64
        let shift = value.numer().bits().max(value.denom().bits()) as i64 - 1000;
        let scale = BigInt::one() << shift.max(0) as usize;
        let n = (value.numer() / &scale).to_f64().unwrap_or(0.0);
        let d = (value.denom() / &scale).to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact representation of a finite `f64`.
pub fn q_from_f64(value: f64) -> Q {
    Q::from_float(value).unwrap_or_else(Q::zero)
}

/// Dense polynomial in `z` with exact rational coefficients, ascending powers.
///
/// Trailing zeros are always stripped, so the zero polynomial has no
/// coefficients and the last stored coefficient is the leading one.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Q>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| qi(c)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    /// `c * z^k`.
    pub fn monomial(c: Q, k: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Q::zero(); k + 1];
        coeffs[k] = c;
        Polynomial { coeffs }
    }

    /// The polynomial `z`.
    pub fn z() -> Self {
        Self::monomial(Q::one(), 1)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Q {
        self.coeffs.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Q::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs }
    }

    /// Returns the monic associate and the leading coefficient that was divided out.
    pub fn monic(&self) -> (Self, Q) {
        let lead = self.leading();
        if self.is_zero() || lead.is_one() {
            return (self.clone(), Q::one());
        }
        let inv = lead.recip();
        (self.scale(&inv), lead)
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    ///
    /// Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        let dd = divisor.degree().expect("polynomial division by zero");
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let inv_lead = divisor.leading().recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Q::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = &rem[k + dd] * &inv_lead;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                if !d.is_zero() {
                    rem[k + j] -= &c * d;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    /// Quotient of a division known to be exact.
    pub fn exact_div(&self, divisor: &Polynomial) -> Polynomial {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return self.gcd_euclid(other);
        }
        let (va, vb) = (self.valuation(), other.valuation());
        let k = va.min(vb);
        let a = Polynomial::new(self.coeffs[va..].to_vec());
        let b = Polynomial::new(other.coeffs[vb..].to_vec());
        a.gcd_euclid(&b).shift(k)
    }

    /// Index of the lowest nonzero coefficient.
    fn valuation(&self) -> usize {
        self.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(0)
    }

    fn gcd_euclid(&self, other: &Polynomial) -> Polynomial {
        let (mut a, mut b) = if self.coeffs.len() >= other.coeffs.len() {
            (self.clone(), other.clone())
        } else {
            (other.clone(), self.clone())
        };
        if !b.is_zero() && !b.is_constant() && coprime_mod_p(&a, &b) {
            return Self::one();
        }
        while !b.is_zero() {
            if b.is_constant() {
                return Self::one();
            }
            let (_, r) = a.div_rem(&b);
            a = b;
            // keeping the remainder monic holds coefficient growth down
            b = r.monic().0;
        }
        a.monic().0
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * qi(k as i64))
                .collect(),
        )
    }

    /// Yun's square-free decomposition of a nonconstant polynomial.
    ///
    /// Returns monic, pairwise coprime, square-free factors `f_i` with
    /// multiplicities `m_i` such that `self = lead * prod f_i^m_i`.
    pub fn square_free(&self) -> Vec<(Polynomial, usize)> {
        let mut out = Vec::new();
        if self.is_constant() {
            return out;
        }
        let f = self.monic().0;
        let fp = f.derivative();
        let a = f.gcd(&fp);
        let mut b = f.exact_div(&a);
        let mut d = fp.exact_div(&a).sub(&b.derivative());
        let mut i = 1;
        while !b.is_constant() {
            let g = b.gcd(&d);
            if !g.is_constant() {
                out.push((g.clone(), i));
            }
            b = b.exact_div(&g);
            d = d.exact_div(&g).sub(&b.derivative());
            i += 1;
        }
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(q_to_f64).collect()
    }

    pub fn eval(&self, z: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }
}

/// Horner evaluation of a floating-point coefficient image at a complex point.
pub fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (c, s) in coeffs.iter_mut().zip(&short.coeffs) {
            *c += s;
        }
        Polynomial::new(coeffs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, Q::zero());
        for (c, s) in coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= s;
        }
        Polynomial::new(coeffs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return rhs.clone();
        }
        let mut coeffs = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        Polynomial::new(coeffs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Polynomial {
    pub fn add(&self, rhs: &Polynomial) -> Polynomial {
        self + rhs
    }
    pub fn sub(&self, rhs: &Polynomial) -> Polynomial {
        self - rhs
    }
    pub fn mul(&self, rhs: &Polynomial) -> Polynomial {
        self * rhs
    }
}

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

const MODULUS: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MODULUS as u128) as u64
}

fn inv_mod(a: u64) -> u64 {
    let (mut base, mut exp, mut acc) = (a, MODULUS - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

fn reduce(value: &Q) -> Option<u64> {
    let m = BigInt::from(MODULUS);
    let residue = |x: &BigInt| {
        let r = x % &m;
        let r = if r.is_negative() { r + &m } else { r };
        r.to_u64().expect("residue below modulus")
    };
    let den = residue(value.denom());
    (den != 0).then(|| mul_mod(residue(value.numer()), inv_mod(den)))
}

/// Coefficients modulo the prime; `None` when the degree drops.
fn reduce_poly(p: &Polynomial) -> Option<Vec<u64>> {
    let out = p.coeffs.iter().map(reduce).collect::<Option<Vec<_>>>()?;
    (*out.last()? != 0).then_some(out)
}

fn trim_mod(p: &mut Vec<u64>) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

fn rem_mod(mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    let inv = inv_mod(*b.last().expect("nonzero divisor"));
    while a.len() >= b.len() {
        let factor = mul_mod(*a.last().expect("nonempty"), inv);
        let shift = a.len() - b.len();
        for (k, &c) in b.iter().enumerate() {
            let t = mul_mod(factor, c);
            a[shift + k] = (a[shift + k] + MODULUS - t) % MODULUS;
        }
        trim_mod(&mut a);
    }
    a
}

/// Sufficient test for `gcd(a, b) = 1` over `Q`: both leading coefficients
/// survive reduction modulo a prime and the reductions are coprime.
fn coprime_mod_p(a: &Polynomial, b: &Polynomial) -> bool {
    let (Some(mut x), Some(mut y)) = (reduce_poly(a), reduce_poly(b)) else {
        return false;
    };
    while y.len() > 1 {
        let r = rem_mod(x, &y);
        x = y;
        y = r;
    }
    y.len() == 1
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            first = false;
            let show_coeff = k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{}", fmt_q(&mag))?;
            }
            match k {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

pub fn format_q(c: &Q) -> String {
    fmt_q(c)
}
