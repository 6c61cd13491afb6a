//! Input-output parameterization of the plant/controller loop.

use super::{inverse_verdict, require_stable};
use crate::error::{Error, Result};
use crate::ratfun::{hinf_norm, stability_verdict, StabilityVerdict, TransferMatrix};
use crate::realization::{build_plant_controller, stability_matrix};

/// `{Y, W, U, Z}` with `Y` p×p, `W` p×m, `U` m×p, `Z` m×m.
///
/// For a loop `y = G u + d_y`, `u = K y + d_u` these are the blocks of the
/// stability matrix `[[Y, W], [U, Z]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IopQuadruple {
    pub y: TransferMatrix,
    pub w: TransferMatrix,
    pub u: TransferMatrix,
    pub z: TransferMatrix,
}

impl IopQuadruple {
    pub fn new(y: TransferMatrix, w: TransferMatrix, u: TransferMatrix, z: TransferMatrix) -> Result<Self> {
        let (p, m) = w.shape();
        for (mat, shape) in [(&y, (p, p)), (&u, (m, p)), (&z, (m, m))] {
            if mat.shape() != shape {
                return Err(Error::DimensionMismatch {
                    op: "IopQuadruple::new",
                    left: mat.shape(),
                    right: shape,
                });
            }
        }
        Ok(IopQuadruple { y, w, u, z })
    }

    /// Splits a `(p + m)`-square stability matrix.
    pub fn from_stability_matrix(s: &TransferMatrix, p: usize) -> Result<Self> {
        let n = s.rows();
        if !s.is_square() || p > n {
            return Err(Error::DimensionMismatch {
                op: "IopQuadruple::from_stability_matrix",
                left: s.shape(),
                right: (p, p),
            });
        }
        let m = n - p;
        Self::new(
            s.submatrix(0, p, 0, p)?,
            s.submatrix(0, p, p, m)?,
            s.submatrix(p, m, 0, p)?,
            s.submatrix(p, m, p, m)?,
        )
    }

    /// Quadruple of the loop closed by `K` around `G`.
    pub fn from_loop(g: &TransferMatrix, k: &TransferMatrix) -> Result<Self> {
        let sys = build_plant_controller(g, k)?;
        Self::from_stability_matrix(&stability_matrix(&sys)?, g.rows())
    }

    pub fn as_matrix(&self) -> Result<TransferMatrix> {
        TransferMatrix::block_matrix(
            &[
                vec![self.y.clone(), self.w.clone()],
                vec![self.u.clone(), self.z.clone()],
            ],
            None,
        )
    }

    /// Plant dimensions `(p, m)`.
    pub fn plant_shape(&self) -> (usize, usize) {
        self.w.shape()
    }
}

/// Both affine identities hold exactly and all four blocks are stable:
/// `[I, -G] [[Y, W], [U, Z]] = [I, 0]` and `[[Y, W], [U, Z]] [-G; I] = [0; I]`.
pub fn iop_verify(g: &TransferMatrix, quad: &IopQuadruple) -> bool {
    let check = || -> Result<bool> {
        let (p, m) = quad.plant_shape();
        if g.shape() != (p, m) {
            return Ok(false);
        }
        let ok = quad.y.checked_sub(&g.checked_mul(&quad.u)?)? == TransferMatrix::identity(p)
            && quad.w.checked_sub(&g.checked_mul(&quad.z)?)?.is_zero()
            && quad.w.checked_sub(&quad.y.checked_mul(g)?)?.is_zero()
            && quad.z.checked_sub(&quad.u.checked_mul(g)?)? == TransferMatrix::identity(m);
        Ok(ok
            && [&quad.y, &quad.w, &quad.u, &quad.z]
                .iter()
                .all(|b| stability_verdict(b).is_stable()))
    };
    check().unwrap_or(false)
}

/// `K = U Y^-1`.
pub fn iop_controller(quad: &IopQuadruple) -> Result<TransferMatrix> {
    quad.u.checked_mul(&quad.y.inverse()?)
}

/// Small-gain margin `ε = 1 / ||U||∞`; infinite when `U = 0`.
pub fn iop_margin(quad: &IopQuadruple) -> Result<f64> {
    let norm = hinf_norm(&quad.u)?;
    Ok(if norm == 0.0 { f64::INFINITY } else { 1.0 / norm })
}

/// Verdict of `(I - Δ_G U)^-1` for an additive plant perturbation.
pub fn iop_robust_check(u_hat: &TransferMatrix, delta_g: &TransferMatrix) -> Result<StabilityVerdict> {
    require_stable(delta_g, "Delta_G")?;
    Ok(inverse_verdict(&delta_g.checked_mul(u_hat)?.identity_minus()?)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::poly::{q, qi};
    use crate::ratfun::{canonicalize, Polynomial, RationalFunction, StabilityStatus};

    fn s(f: RationalFunction) -> TransferMatrix {
        TransferMatrix::scalar(f)
    }

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        canonicalize(Polynomial::from_ints(num), Polynomial::from_ints(den)).unwrap()
    }

    fn fig4_quad() -> IopQuadruple {
        IopQuadruple::new(
            s(rf(&[0, 2], &[-1, 2])),
            s(rf(&[2], &[-1, 2])),
            s(rf(&[0, 1], &[-1, 2])),
            s(rf(&[0, 2], &[-1, 2])),
        )
        .unwrap()
    }

    #[test]
    fn quadruple_from_loop_matches_hand_values() {
        let g = s(RationalFunction::z_inv());
        let k = s(RationalFunction::constant(q(1, 2)));
        let quad = IopQuadruple::from_loop(&g, &k).unwrap();
        assert_eq!(quad, fig4_quad());
        assert!(iop_verify(&g, &quad));
        assert_eq!(iop_controller(&quad).unwrap(), k);
    }

    #[test]
    fn open_loop_quadruple() {
        let g = s(rf(&[1], &[-1, 3]));
        let quad = IopQuadruple::new(
            TransferMatrix::identity(1),
            g.clone(),
            TransferMatrix::zeros(1, 1),
            TransferMatrix::identity(1),
        )
        .unwrap();
        assert!(iop_verify(&g, &quad));
        assert!(iop_controller(&quad).unwrap().is_zero());
        assert_eq!(iop_margin(&quad).unwrap(), f64::INFINITY);
    }

    #[test]
    fn perturbed_quadruple_fails() {
        let g = s(RationalFunction::z_inv());
        let mut quad = fig4_quad();
        quad.y = quad.y.checked_add(&TransferMatrix::identity(1)).unwrap();
        assert!(!iop_verify(&g, &quad));
        assert!(!iop_verify(&TransferMatrix::zeros(2, 1), &fig4_quad()));
    }

    #[test]
    fn margins() {
        assert!((iop_margin(&fig4_quad()).unwrap() - 1.0).abs() < 1e-6);
        let mut quad = fig4_quad();
        quad.u = s(RationalFunction::constant(q(1, 2)));
        assert_eq!(iop_margin(&quad).unwrap(), 2.0);
    }

    #[test]
    fn robust_check_examples() {
        let u = fig4_quad().u;
        assert!(iop_robust_check(&u, &TransferMatrix::zeros(1, 1)).unwrap().is_stable());
        let v = iop_robust_check(&u, &s(RationalFunction::one())).unwrap();
        assert_ne!(v.status, StabilityStatus::Stable);
        let pole = v.poles().next().unwrap();
        assert!((pole.re - 1.0).abs() < 1e-9 && pole.im.abs() < 1e-9);
        let v = iop_robust_check(&u, &s(RationalFunction::constant(q(-9, 10)))).unwrap();
        assert!(v.is_stable());
        assert!(matches!(
            iop_robust_check(&u, &s(rf(&[1], &[-2, 1]))),
            Err(Error::NotStable(_))
        ));
        // constant loop 1 - 1·1 is singular
        assert_eq!(
            iop_robust_check(&s(RationalFunction::one()), &s(RationalFunction::constant(qi(1)))),
            Err(Error::SingularMatrix)
        );
    }
}
