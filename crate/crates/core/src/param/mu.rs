//! The wrapped nominal stability matrix `M = F_z Ŝ T` and the
//! `det(I - MΔ)` destabilization test.

use super::require_stable;
use crate::error::{Error, Result};
use crate::ratfun::{classify_poles, roots, stability_verdict, RationalFunction, StabilityVerdict, TransferMatrix};
use crate::realization::Transformation;

/// `M = F_z Ŝ T`; requires a stable `Ŝ`.
pub fn mu_m_matrix(s_hat: &TransferMatrix, t: &Transformation, f_z: &TransferMatrix) -> Result<TransferMatrix> {
    require_stable(s_hat, "S_hat")?;
    f_z.checked_mul(s_hat)?.checked_mul(t.matrix())
}

/// Result of [`mu_destab_test`].
#[derive(Clone, Debug, PartialEq)]
pub struct DestabTest {
    /// `det(I - MΔ)`.
    pub det: RationalFunction,
    /// Verdict of `M (I - MΔ)^-1`, worsened by any root of the determinant
    /// on or outside the unit circle.
    pub verdict: StabilityVerdict,
    /// `Δ` destabilizes the loop (marginal roots included).
    pub destabilizing: bool,
}

/// Checks whether `Δ` destabilizes `M`.
///
/// `det(I - MΔ) ≡ 0` is reported as an unstable verdict with a
/// singular-loop witness rather than as an error.
pub fn mu_destab_test(m: &TransferMatrix, delta: &TransferMatrix) -> Result<DestabTest> {
    if delta.shape() != (m.cols(), m.rows()) {
        return Err(Error::DimensionMismatch {
            op: "mu_destab_test",
            left: m.shape(),
            right: delta.shape(),
        });
    }
    let loop_m = m.checked_mul(delta)?.identity_minus()?;
    let det = loop_m.determinant()?;
    if det.is_zero() {
        return Ok(DestabTest {
            det,
            verdict: StabilityVerdict::singular(),
            destabilizing: true,
        });
    }
    let closed = m.checked_mul(&loop_m.inverse()?)?;
    let mut verdict = stability_verdict(&closed);
    let det_roots = classify_poles(&roots(det.num()));
    verdict.status = verdict.status.worst(det_roots.status);
    for w in det_roots.witnesses {
        if !verdict.witnesses.contains(&w) {
            verdict.witnesses.push(w);
        }
    }
    Ok(DestabTest {
        det,
        destabilizing: !verdict.is_stable(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::poly::{q, qi};
    use crate::ratfun::{canonicalize, NumericMatrix, Polynomial, StabilityStatus};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(f: RationalFunction) -> TransferMatrix {
        TransferMatrix::scalar(f)
    }

    fn fig4_s() -> TransferMatrix {
        let rf = |n: &[i64], d: &[i64]| canonicalize(Polynomial::from_ints(n), Polynomial::from_ints(d)).unwrap();
        TransferMatrix::from_rows(vec![
            vec![rf(&[0, 2], &[-1, 2]), rf(&[2], &[-1, 2])],
            vec![rf(&[0, 1], &[-1, 2]), rf(&[0, 2], &[-1, 2])],
        ])
        .unwrap()
    }

    #[test]
    fn m_matrix_wrapping() {
        let sh = fig4_s();
        let id = Transformation::identity(2);
        assert_eq!(mu_m_matrix(&sh, &id, &TransferMatrix::identity(2)).unwrap(), sh);

        let row = TransferMatrix::from_rows(vec![vec![RationalFunction::one(), RationalFunction::zero()]]).unwrap();
        assert_eq!(mu_m_matrix(&sh, &id, &row).unwrap(), sh.submatrix(0, 1, 0, 2).unwrap());

        let two = Transformation::new(TransferMatrix::identity(2).scale(&qi(2))).unwrap();
        assert_eq!(
            mu_m_matrix(&sh, &two, &TransferMatrix::identity(2)).unwrap(),
            sh.scale(&qi(2))
        );

        let unstable = s(canonicalize(Polynomial::one(), Polynomial::from_ints(&[-2, 1])).unwrap());
        assert!(matches!(
            mu_m_matrix(&unstable, &Transformation::identity(1), &TransferMatrix::identity(1)),
            Err(Error::NotStable(_))
        ));
    }

    #[test]
    fn destab_examples() {
        let m = s(canonicalize(Polynomial::from_ints(&[0, 1]), Polynomial::from_ints(&[-1, 2])).unwrap());
        let t = mu_destab_test(&m, &TransferMatrix::zeros(1, 1)).unwrap();
        assert!(t.det.is_one());
        assert!(t.verdict.is_stable() && !t.destabilizing);

        let t = mu_destab_test(&m, &TransferMatrix::identity(1)).unwrap();
        assert_eq!(
            t.det,
            canonicalize(Polynomial::from_ints(&[-1, 1]), Polynomial::from_ints(&[-1, 2])).unwrap()
        );
        assert_eq!(t.verdict.status, StabilityStatus::Marginal);
        assert!(t.destabilizing);

        let one = s(RationalFunction::one());
        let t = mu_destab_test(&one, &one).unwrap();
        assert!(t.det.is_zero());
        assert_eq!(t.verdict, StabilityVerdict::singular());

        let small = s(RationalFunction::constant(q(1, 2)));
        assert!(!mu_destab_test(&m, &small).unwrap().destabilizing);
    }

    #[test]
    fn det_matches_numeric_determinant() {
        let m = fig4_s();
        let delta = TransferMatrix::from_rows(vec![
            vec![RationalFunction::constant(q(1, 3)), RationalFunction::z_inv()],
            vec![RationalFunction::zero(), RationalFunction::constant(q(-1, 4))],
        ])
        .unwrap();
        let t = mu_destab_test(&m, &delta).unwrap();
        let mn = NumericMatrix::new(&m);
        let dn = NumericMatrix::new(&delta);
        let detn = NumericMatrix::new(&s(t.det.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..16 {
            let w: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let z = Complex64::from_polar(1.0, w);
            let prod = mn.eval(z) * dn.eval(z);
            let a = Complex64::new(1.0, 0.0) - prod[(0, 0)];
            let d = Complex64::new(1.0, 0.0) - prod[(1, 1)];
            let direct = a * d - prod[(0, 1)] * prod[(1, 0)];
            assert!((detn.eval(z)[(0, 0)] - direct).norm() < 1e-8);
        }
    }
}
