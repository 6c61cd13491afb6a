use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::{horner, Polynomial};
use super::rational::RationalFunction;
use super::TransferMatrix;

/// Half-width of the band around the unit circle classified as marginal.
pub const STABILITY_TOL: f64 = 1e-9;

/// Roots of a polynomial, with multiplicity, in floating point.
///
/// The exact polynomial is split into square-free factors first so repeated
/// roots are recovered from well-conditioned simple-root problems.
pub fn roots(p: &Polynomial) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (factor, mult) in p.square_free() {
        for r in simple_roots(&factor) {
            out.extend(std::iter::repeat_n(r, mult));
        }
    }
    out
}

/// Roots of a monic square-free polynomial.
fn simple_roots(p: &Polynomial) -> Vec<Complex64> {
    let c = p.to_f64();
    let n = c.len() - 1;
    match n {
        0 => Vec::new(),
        1 => vec![Complex64::new(-c[0] / c[1], 0.0)],
        _ => {
            let lead = c[n];
            let companion = DMatrix::from_fn(n, n, |i, j| {
                if i == 0 {
                    -c[n - 1 - j] / lead
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            let dp: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
            companion
                .complex_eigenvalues()
                .iter()
                .map(|&z0| polish(&c, &dp, z0))
                .collect()
        }
    }
}

/// A few Newton steps on a simple root.
fn polish(c: &[f64], dc: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..4 {
        let d = horner(dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let step = horner(c, z) / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let next = z - step;
        if horner(c, next).norm() > horner(c, z).norm() {
            break;
        }
        z = next;
    }
    if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
        z.im = 0.0;
    }
    z
}

/// Poles of a canonical rational function (roots of its denominator).
pub fn poles(f: &RationalFunction) -> Vec<Complex64> {
    roots(f.den())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityStatus {
    Stable,
    Marginal,
    Unstable,
    Improper,
}

impl StabilityStatus {
    pub fn is_stable(self) -> bool {
        self == StabilityStatus::Stable
    }

    fn rank(self) -> u8 {
        match self {
            StabilityStatus::Stable => 0,
            StabilityStatus::Marginal => 1,
            StabilityStatus::Unstable => 2,
            StabilityStatus::Improper => 3,
        }
    }

    /// The more severe of two statuses.
    pub fn worst(self, other: StabilityStatus) -> StabilityStatus {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for StabilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityStatus::Stable => "stable",
            StabilityStatus::Marginal => "marginal",
            StabilityStatus::Unstable => "unstable",
            StabilityStatus::Improper => "improper",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl From<Complex64> for Pole {
    fn from(z: Complex64) -> Self {
        Pole {
            re: z.re + 0.0,
            im: z.im + 0.0,
            modulus: z.norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Pole(Pole),
    ImproperEntry {
        row: usize,
        col: usize,
    },
    /// The loop matrix was singular, so no stability matrix exists.
    SingularLoop,
}

/// Outcome of the `X ∈ RH∞` membership test.
///
/// `Stable` carries no witnesses; every other status carries at least one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    pub witnesses: Vec<Witness>,
}

impl StabilityVerdict {
    pub fn stable() -> Self {
        StabilityVerdict {
            status: StabilityStatus::Stable,
            witnesses: Vec::new(),
        }
    }

    pub fn singular() -> Self {
        StabilityVerdict {
            status: StabilityStatus::Unstable,
            witnesses: vec![Witness::SingularLoop],
        }
    }

    pub fn is_stable(&self) -> bool {
        self.status.is_stable()
    }

    pub fn poles(&self) -> impl Iterator<Item = &Pole> {
        self.witnesses.iter().filter_map(|w| match w {
            Witness::Pole(p) => Some(p),
            _ => None,
        })
    }
}

/// Classifies a set of poles against the unit circle.
pub fn classify_poles(poles: &[Complex64]) -> StabilityVerdict {
    let mut offending: Vec<Pole> = poles
        .iter()
        .map(|&p| Pole::from(p))
        .filter(|p| p.modulus >= 1.0 - STABILITY_TOL)
        .collect();
    if offending.is_empty() {
        return StabilityVerdict::stable();
    }
    let status = if offending.iter().any(|p| p.modulus > 1.0 + STABILITY_TOL) {
        StabilityStatus::Unstable
    } else {
        StabilityStatus::Marginal
    };
    offending.sort_by(|a, b| {
        b.modulus
            .total_cmp(&a.modulus)
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    offending.dedup_by(|a, b| (a.re - b.re).abs() < 1e-12 && (a.im - b.im).abs() < 1e-12);
    StabilityVerdict {
        status,
        witnesses: offending.into_iter().map(Witness::Pole).collect(),
    }
}

/// Every distinct pole of the matrix, one pass per distinct denominator.
pub fn matrix_poles(x: &TransferMatrix) -> Vec<Complex64> {
    let mut dens: Vec<&Polynomial> = Vec::new();
    for e in x.entries() {
        if !e.den().is_constant() && !dens.contains(&e.den()) {
            dens.push(e.den());
        }
    }
    dens.into_iter().flat_map(roots).collect()
}

/// RH∞ membership test for every entry of `x`.
pub fn stability_verdict(x: &TransferMatrix) -> StabilityVerdict {
    let improper: Vec<Witness> = (0..x.rows())
        .flat_map(|i| (0..x.cols()).map(move |j| (i, j)))
        .filter(|&(i, j)| !x.get(i, j).is_proper())
        .map(|(row, col)| Witness::ImproperEntry { row, col })
        .collect();
    if !improper.is_empty() {
        return StabilityVerdict {
            status: StabilityStatus::Improper,
            witnesses: improper,
        };
    }
    classify_poles(&matrix_poles(x))
}
