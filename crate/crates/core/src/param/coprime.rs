//! Doubly coprime factorizations and the primal/dual Youla parameterization.

use super::{inverse_verdict, is_schur, require_stable};
use crate::error::{Error, Result};
use crate::ratfun::{QMatrix, StabilityVerdict, StateSpace, TransferMatrix};
use crate::realization::{build_plant_controller, RealizationSystem};

/// Eight stable factors with
/// `[[Ml, -Nl], [-Vl, Ul]] · [[Ur, Nr], [Vr, Mr]] = I`.
///
/// The plant is `G = Nr Mr^-1 = Ml^-1 Nl` and the central controller is
/// `K = Vr Ur^-1 = Ul^-1 Vl`, with positive feedback `u = K y`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoprimeFactorization {
    pub ml: TransferMatrix,
    pub nl: TransferMatrix,
    pub vl: TransferMatrix,
    pub ul: TransferMatrix,
    pub ur: TransferMatrix,
    pub nr: TransferMatrix,
    pub vr: TransferMatrix,
    pub mr: TransferMatrix,
}

impl CoprimeFactorization {
    pub fn left(&self) -> Result<TransferMatrix> {
        TransferMatrix::block_matrix(
            &[
                vec![self.ml.clone(), self.nl.neg()],
                vec![self.vl.neg(), self.ul.clone()],
            ],
            None,
        )
    }

    pub fn right(&self) -> Result<TransferMatrix> {
        TransferMatrix::block_matrix(
            &[
                vec![self.ur.clone(), self.nr.clone()],
                vec![self.vr.clone(), self.mr.clone()],
            ],
            None,
        )
    }

    /// Checks the Bezout identity exactly.
    pub fn identity_holds(&self) -> bool {
        match (self.left(), self.right()) {
            (Ok(l), Ok(r)) => matches!(l.checked_mul(&r), Ok(p) if p == TransferMatrix::identity(l.rows())),
            _ => false,
        }
    }

    /// Output and input dimensions `(p, m)` of the plant.
    pub fn plant_shape(&self) -> (usize, usize) {
        self.nr.shape()
    }
}

/// State-space doubly coprime factorization from stabilizing gains.
///
/// `F` (m×n) must make `A + BF` Schur and `L` (n×p) must make `A + LC`
/// Schur. With `A_F = A + BF` and `A_L = A + LC`:
///
/// ```text
/// Mr = I + F (zI - A_F)^-1 B           Ml = I + C (zI - A_L)^-1 L
/// Nr = D + (C + DF)(zI - A_F)^-1 B     Nl = D + C (zI - A_L)^-1 (B + LD)
/// Vr = -F (zI - A_F)^-1 L              Vl = -F (zI - A_L)^-1 L
/// Ur = I - (C + DF)(zI - A_F)^-1 L     Ul = I - F (zI - A_L)^-1 (B + LD)
/// ```
pub fn coprime_from_gains(ss: &StateSpace, f: &QMatrix, l: &QMatrix) -> Result<CoprimeFactorization> {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    if f.shape() != (m, n) {
        return Err(Error::DimensionMismatch {
            op: "coprime_from_gains(F)",
            left: f.shape(),
            right: (m, n),
        });
    }
    if l.shape() != (n, p) {
        return Err(Error::DimensionMismatch {
            op: "coprime_from_gains(L)",
            left: l.shape(),
            right: (n, p),
        });
    }
    let a_f = ss.a() + &(ss.b() * f);
    let a_l = ss.a() + &(l * ss.c());
    if !is_schur(&a_f) {
        return Err(Error::NotStabilizing("F".into()));
    }
    if !is_schur(&a_l) {
        return Err(Error::NotStabilizing("L".into()));
    }
    let res_f = ss.with_a(a_f)?.resolvent()?;
    let res_l = ss.with_a(a_l)?.resolvent()?;
    let t = QMatrix::to_transfer;
    let (ft, lt, bt, ct, dt) = (t(f), t(l), t(ss.b()), t(ss.c()), t(ss.d()));
    let c_df = t(&(ss.c() + &(ss.d() * f)));
    let b_ld = t(&(ss.b() + &(l * ss.d())));
    let im = TransferMatrix::identity(m);
    let ip = TransferMatrix::identity(p);

    let mr = im.checked_add(&ft.checked_mul(&res_f)?.checked_mul(&bt)?)?;
    let nr = dt.checked_add(&c_df.checked_mul(&res_f)?.checked_mul(&bt)?)?;
    let vr = ft.checked_mul(&res_f)?.checked_mul(&lt)?.neg();
    let ur = ip.checked_sub(&c_df.checked_mul(&res_f)?.checked_mul(&lt)?)?;
    let ml = ip.checked_add(&ct.checked_mul(&res_l)?.checked_mul(&lt)?)?;
    let nl = dt.checked_add(&ct.checked_mul(&res_l)?.checked_mul(&b_ld)?)?;
    let vl = ft.checked_mul(&res_l)?.checked_mul(&lt)?.neg();
    let ul = im.checked_sub(&ft.checked_mul(&res_l)?.checked_mul(&b_ld)?)?;

    let cf = CoprimeFactorization {
        ml,
        nl,
        vl,
        ul,
        ur,
        nr,
        vr,
        mr,
    };
    if !cf.identity_holds() {
        return Err(Error::IdentityCheckFailed("doubly coprime identity".into()));
    }
    Ok(cf)
}

/// Ackermann deadbeat gain for a single-input pair: `A + BF` is nilpotent.
pub fn deadbeat_gain(a: &QMatrix, b: &QMatrix) -> Result<QMatrix> {
    let n = a.rows();
    if b.cols() != 1 || b.rows() != n {
        return Err(Error::InvalidArgument(
            "deadbeat gain requires a single-input pair".into(),
        ));
    }
    let mut ctrb = b.clone();
    let mut col = b.clone();
    for _ in 1..n {
        col = a * &col;
        ctrb = ctrb.hstack(&col)?;
    }
    let inv = ctrb
        .inverse()
        .map_err(|_| Error::NotStabilizing("deadbeat: pair is not controllable".into()))?;
    let last_row = QMatrix::from_fn(1, n, |_, j| inv.get(n - 1, j).clone());
    Ok((&last_row * &a.pow(n as u32)?).scale(&crate::ratfun::poly::qi(-1)))
}

/// Dual of [`deadbeat_gain`]: `A + LC` is nilpotent for a single output.
pub fn deadbeat_observer(a: &QMatrix, c: &QMatrix) -> Result<QMatrix> {
    Ok(deadbeat_gain(&a.transpose(), &c.transpose())?.transpose())
}

/// `G = (Nr - Ur P)(Mr - Vr P)^-1`.
pub fn youla_plant(cf: &CoprimeFactorization, p: &TransferMatrix) -> Result<TransferMatrix> {
    let num = cf.nr.checked_sub(&cf.ur.checked_mul(p)?)?;
    let den = cf.mr.checked_sub(&cf.vr.checked_mul(p)?)?;
    num.checked_mul(&den.inverse()?)
}

/// `K = (Vr - Mr Q)(Ur - Nr Q)^-1`.
pub fn youla_controller(cf: &CoprimeFactorization, q: &TransferMatrix) -> Result<TransferMatrix> {
    let num = cf.vr.checked_sub(&cf.mr.checked_mul(q)?)?;
    let den = cf.ur.checked_sub(&cf.nr.checked_mul(q)?)?;
    num.checked_mul(&den.inverse()?)
}

/// Dual parameter `P` (shaped like the plant, p×m) and primal parameter `Q`
/// (shaped like the controller, m×p), both stable.
#[derive(Clone, Debug, PartialEq)]
pub struct YoulaPair {
    p: TransferMatrix,
    q: TransferMatrix,
}

impl YoulaPair {
    pub fn new(p: TransferMatrix, q: TransferMatrix) -> Result<Self> {
        let (rows, cols) = p.shape();
        if q.shape() != (cols, rows) {
            return Err(Error::DimensionMismatch {
                op: "YoulaPair",
                left: p.shape(),
                right: q.shape(),
            });
        }
        require_stable(&p, "P")?;
        require_stable(&q, "Q")?;
        Ok(YoulaPair { p, q })
    }

    pub fn p(&self) -> &TransferMatrix {
        &self.p
    }

    pub fn q(&self) -> &TransferMatrix {
        &self.q
    }
}

/// Verdict of `[[I, P], [Q, I]]^-1`.
pub fn youla_pq_stability(pair: &YoulaPair) -> Result<StabilityVerdict> {
    let (p, m) = pair.p.shape();
    let pq = TransferMatrix::block_matrix(
        &[
            vec![TransferMatrix::identity(p), pair.p.clone()],
            vec![pair.q.clone(), TransferMatrix::identity(m)],
        ],
        None,
    )?;
    Ok(inverse_verdict(&pq)?.1)
}

/// The plant/controller loop of a Youla pair.
pub fn youla_loop(cf: &CoprimeFactorization, pair: &YoulaPair) -> Result<RealizationSystem> {
    build_plant_controller(&youla_plant(cf, &pair.p)?, &youla_controller(cf, &pair.q)?)
}

/// Verdict of `(I - Q P(Δ))^-1` for a perturbed dual parameter.
pub fn youla_robust_check(q: &TransferMatrix, p_delta: &TransferMatrix) -> Result<StabilityVerdict> {
    require_stable(q, "Q")?;
    require_stable(p_delta, "P(Delta)")?;
    Ok(inverse_verdict(&q.checked_mul(p_delta)?.identity_minus()?)?.1)
}
