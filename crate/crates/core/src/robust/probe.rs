use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::param::require_stable;
use crate::ratfun::poly::q_from_f64;
use crate::ratfun::{hinf_peak, roots, NumericMatrix, RationalFunction, TransferMatrix};

/// Relative gap under which a boundary frequency counts as the peak.
const REAL_PEAK_TOL: f64 = 1e-8;

/// Result of [`worst_case_delta`].
#[derive(Clone, Debug, PartialEq)]
pub enum ProbeOutcome {
    /// A constant `Δ*` with `||Δ*|| = ε` destabilizing the loop
    /// `(I - Δ* Û)^-1`.
    Witness {
        delta: TransferMatrix,
        omega: f64,
        /// `det(I - Δ* Û)`.
        det: RationalFunction,
        /// Root of the determinant numerator closest to `e^{iω}`; `None`
        /// when the determinant vanishes identically.
        root: Option<Complex64>,
    },
    /// The peak is at an interior frequency where no real `Δ*` aligns.
    Inconclusive { omega: f64, reason: String },
}

impl ProbeOutcome {
    /// `| |root| - 1 |`, zero for a singular loop.
    pub fn boundary_distance(&self) -> Option<f64> {
        match self {
            ProbeOutcome::Witness { root: Some(r), .. } => Some((r.norm() - 1.0).abs()),
            ProbeOutcome::Witness { root: None, .. } => Some(0.0),
            ProbeOutcome::Inconclusive { .. } => None,
        }
    }
}

/// Constructs the small-gain equality case `Δ* = ε v₁ u₁ᵀ` from the top
/// singular pair `Û(e^{iω}) = Σ σᵢ uᵢ vᵢᵀ` at a real peak frequency
/// `ω ∈ {0, π}`. `Δ*` has the shape of `Ûᵀ` and exact binary-rational
/// entries.
pub fn worst_case_delta(u_hat: &TransferMatrix, epsilon: f64) -> Result<ProbeOutcome> {
    require_stable(u_hat, "U_hat")?;
    if !epsilon.is_finite() || u_hat.is_zero() {
        return Err(Error::InfiniteMargin);
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let peak = hinf_peak(u_hat)?;
    let num = NumericMatrix::new(u_hat);
    let omega = [0.0, PI]
        .into_iter()
        .map(|w| (w, num.sigma_max(w)))
        .filter(|&(_, s)| s >= peak.norm * (1.0 - REAL_PEAK_TOL))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(w, _)| w);
    let Some(omega) = omega else {
        return Ok(ProbeOutcome::Inconclusive {
            omega: peak.omega,
            reason: "complex-peak: tightness probe inconclusive".into(),
        });
    };

    let at = num.eval_at(omega);
    let real = DMatrix::from_fn(at.nrows(), at.ncols(), |i, j| at[(i, j)].re);
    let svd = real.svd(true, true);
    let k = svd.singular_values.imax();
    let u1 = svd.u.as_ref().expect("requested").column(k).clone_owned();
    let v1 = svd.v_t.as_ref().expect("requested").row(k).transpose();
    let delta = TransferMatrix::from_fn(u_hat.cols(), u_hat.rows(), |i, j| {
        RationalFunction::constant(q_from_f64(epsilon * v1[i] * u1[j]))
    });

    let det = delta.checked_mul(u_hat)?.identity_minus()?.determinant()?;
    let target = Complex64::from_polar(1.0, omega);
    let root = if det.is_zero() {
        None
    } else {
        roots(det.num())
            .into_iter()
            .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
    };
    if !det.is_zero() && root.is_none() {
        return Ok(ProbeOutcome::Inconclusive {
            omega,
            reason: "determinant has no finite roots".into(),
        });
    }
    Ok(ProbeOutcome::Witness {
        delta,
        omega,
        det,
        root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::iop_robust_check;
    use crate::ratfun::poly::{q, qi};
    use crate::ratfun::{canonicalize, hinf_norm, Polynomial};

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        canonicalize(Polynomial::from_ints(num), Polynomial::from_ints(den)).unwrap()
    }

    #[test]
    fn scalar_peak_at_dc() {
        let u = TransferMatrix::scalar(rf(&[0, 1], &[-1, 2]));
        let eps = 1.0 / hinf_norm(&u).unwrap();
        let out = worst_case_delta(&u, eps).unwrap();
        let ProbeOutcome::Witness { delta, omega, root, .. } = &out else {
            panic!("expected a witness");
        };
        assert_eq!(*omega, 0.0);
        let d = delta.get(0, 0).constant_value().unwrap();
        assert!((crate::ratfun::poly::q_to_f64(&d).abs() - 1.0).abs() < 1e-9);
        assert!((root.unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert!(out.boundary_distance().unwrap() < 1e-6);
        assert!(!iop_robust_check(&u, delta).unwrap().is_stable());
    }

    #[test]
    fn constant_gain_gives_singular_loop() {
        let u = TransferMatrix::scalar(RationalFunction::constant(q(-1, 4)));
        let out = worst_case_delta(&u, 4.0).unwrap();
        let ProbeOutcome::Witness { delta, det, root, .. } = out else {
            panic!("expected a witness");
        };
        assert_eq!(delta.get(0, 0), &RationalFunction::constant(qi(-4)));
        assert!(det.is_zero() && root.is_none());
    }

    #[test]
    fn peak_at_nyquist() {
        // z / (2z + 1) peaks at z = -1
        let u = TransferMatrix::scalar(rf(&[0, 1], &[1, 2]));
        let out = worst_case_delta(&u, 1.0 / hinf_norm(&u).unwrap()).unwrap();
        let ProbeOutcome::Witness { omega, root, .. } = &out else {
            panic!("expected a witness");
        };
        assert_eq!(*omega, PI);
        assert!((root.unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn mimo_real_peak() {
        let u = TransferMatrix::from_rows(vec![
            vec![rf(&[0, 1], &[-1, 2]), RationalFunction::constant(q(1, 4))],
            vec![RationalFunction::zero(), rf(&[1], &[-1, 4])],
        ])
        .unwrap();
        let out = worst_case_delta(&u, 1.0 / hinf_norm(&u).unwrap()).unwrap();
        assert!(out.boundary_distance().unwrap() < 1e-6);
        let ProbeOutcome::Witness { delta, .. } = &out else {
            unreachable!()
        };
        assert!((hinf_norm(delta).unwrap() * hinf_norm(&u).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interior_peak_is_inconclusive() {
        // lightly damped poles at 0.9 e^{±iπ/2}
        let u = TransferMatrix::scalar(rf(&[1], &[81, 0, 100]));
        match worst_case_delta(&u, 1.0 / hinf_norm(&u).unwrap()).unwrap() {
            ProbeOutcome::Inconclusive { omega, reason } => {
                assert!((omega - PI / 2.0).abs() < 1e-3);
                assert!(reason.starts_with("complex-peak"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors() {
        let unstable = TransferMatrix::scalar(rf(&[1], &[-2, 1]));
        assert!(matches!(worst_case_delta(&unstable, 1.0), Err(Error::NotStable(_))));
        let zero = TransferMatrix::zeros(1, 1);
        assert_eq!(worst_case_delta(&zero, f64::INFINITY), Err(Error::InfiniteMargin));
    }
}
