#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use realstab::ratfun::poly::{q, Q};
use realstab::ratfun::{canonicalize, Polynomial};
use realstab::{RationalFunction, TransferMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn poly(coeffs: &[Q]) -> Polynomial {
    Polynomial::new(coeffs.to_vec())
}

/// Ascending coefficients.
pub fn rf(num: &[Q], den: &[Q]) -> RationalFunction {
    canonicalize(poly(num), poly(den)).unwrap()
}

pub fn rfi(num: &[i64], den: &[i64]) -> RationalFunction {
    canonicalize(Polynomial::from_ints(num), Polynomial::from_ints(den)).unwrap()
}

pub fn c(v: Q) -> RationalFunction {
    RationalFunction::constant(v)
}

pub fn s(f: RationalFunction) -> TransferMatrix {
    TransferMatrix::scalar(f)
}

pub fn m(rows: Vec<Vec<RationalFunction>>) -> TransferMatrix {
    TransferMatrix::from_rows(rows).unwrap()
}

/// Exact rational points away from the small poles used in the fixtures.
pub fn probe_points() -> Vec<Q> {
    vec![q(3, 1), q(-7, 3), q(5, 2), q(11, 7), q(-13, 5)]
}

/// Exact point evaluation of a transfer matrix.
pub fn eval_at(x: &TransferMatrix, z: &Q) -> Vec<Q> {
    x.entries()
        .iter()
        .map(|e| e.eval(z).expect("no pole at probe point"))
        .collect()
}

/// Floating evaluation of a rational function at a complex point.
pub fn eval_c(f: &RationalFunction, z: Complex64) -> Complex64 {
    let h = |p: &Polynomial| {
        p.coeffs().iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| {
            acc * z + realstab::ratfun::poly::q_to_f64(c)
        })
    };
    h(f.num()) / h(f.den())
}

pub fn qb(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}
