//! System level parameterizations for state and output feedback.

use super::{coprime_from_gains, inverse_verdict, is_schur, require_stable};
use crate::error::{Error, Result};
use crate::ratfun::{hinf_norm, stability_verdict, QMatrix, StabilityVerdict, StateSpace, TransferMatrix};
use crate::realization::{
    build_output_feedback, build_sf_sls, perturbed_stability, stability_matrix, AdditivePerturbation, RealizationSystem,
};

fn shape_err(op: &'static str, m: &TransferMatrix, want: (usize, usize)) -> Result<()> {
    if m.shape() == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            left: m.shape(),
            right: want,
        })
    }
}

fn strictly_proper_stable(m: &TransferMatrix, name: &str) -> Result<()> {
    if !m.is_strictly_proper() {
        return Err(Error::NotStrictlyProper(name.into()));
    }
    require_stable(m, name)
}

/// `[zI - A, -B] [Φx; Φu] - I`.
fn sf_defect(ss: &StateSpace, phi_x: &TransferMatrix, phi_u: &TransferMatrix) -> Result<TransferMatrix> {
    ss.zi_minus_a()
        .checked_mul(phi_x)?
        .checked_sub(&ss.b().to_transfer().checked_mul(phi_u)?)?
        .checked_sub(&TransferMatrix::identity(ss.n()))
}

/// State-feedback responses `Φx` (n×n), `Φu` (m×n) and their defect
/// `Δ = [zI - A, -B][Φx; Φu] - I` against the stored plant.
#[derive(Clone, Debug, PartialEq)]
pub struct SlsStateFeedback {
    ss: StateSpace,
    pub phi_x: TransferMatrix,
    pub phi_u: TransferMatrix,
    pub defect: TransferMatrix,
}

impl SlsStateFeedback {
    /// Checks that both responses are strictly proper and stable.
    pub fn new(ss: &StateSpace, phi_x: TransferMatrix, phi_u: TransferMatrix) -> Result<Self> {
        shape_err("SlsStateFeedback(Phi_x)", &phi_x, (ss.n(), ss.n()))?;
        shape_err("SlsStateFeedback(Phi_u)", &phi_u, (ss.m(), ss.n()))?;
        strictly_proper_stable(&phi_x, "Phi_x")?;
        strictly_proper_stable(&phi_u, "Phi_u")?;
        let defect = sf_defect(ss, &phi_x, &phi_u)?;
        Ok(SlsStateFeedback {
            ss: ss.clone(),
            phi_x,
            phi_u,
            defect,
        })
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.ss
    }

    /// The controller realization over `(x, u, δ)`.
    pub fn realization(&self) -> Result<RealizationSystem> {
        build_sf_sls(&self.ss, &self.phi_x, &self.phi_u)
    }
}

/// `Φx = (zI - A - BK)^-1`, `Φu = K Φx` for a static stabilizing gain.
pub fn sls_sf_from_gain(ss: &StateSpace, k: &QMatrix) -> Result<SlsStateFeedback> {
    if k.shape() != (ss.m(), ss.n()) {
        return Err(Error::DimensionMismatch {
            op: "sls_sf_from_gain",
            left: k.shape(),
            right: (ss.m(), ss.n()),
        });
    }
    let closed = ss.a() + &(ss.b() * k);
    if !is_schur(&closed) {
        return Err(Error::NotStabilizing("K".into()));
    }
    let phi_x = ss.with_a(closed)?.resolvent()?;
    let phi_u = k.to_transfer().checked_mul(&phi_x)?;
    let sls = SlsStateFeedback::new(ss, phi_x, phi_u)?;
    if !sls.defect.is_zero() {
        return Err(Error::IdentityCheckFailed("state-feedback SLS defect".into()));
    }
    Ok(sls)
}

/// Outcome of applying nominal responses to a (possibly different) plant.
#[derive(Clone, Debug, PartialEq)]
pub struct SlsSfRobust {
    pub defect: TransferMatrix,
    pub verdict: StabilityVerdict,
    /// `[Φx; Φu] (I + Δ)^-1`.
    pub responses: TransferMatrix,
}

/// Defect, achieved responses and stability of nominal responses on the
/// true plant. The verdict covers both `(I + Δ)^-1` and the responses.
pub fn sls_sf_robust(ss_true: &StateSpace, phi_x: &TransferMatrix, phi_u: &TransferMatrix) -> Result<SlsSfRobust> {
    shape_err("sls_sf_robust(Phi_x)", phi_x, (ss_true.n(), ss_true.n()))?;
    shape_err("sls_sf_robust(Phi_u)", phi_u, (ss_true.m(), ss_true.n()))?;
    let defect = sf_defect(ss_true, phi_x, phi_u)?;
    let inv = defect.identity_plus()?.inverse().map_err(|e| match e {
        Error::SingularMatrix => Error::SingularPerturbedLoop,
        other => other,
    })?;
    let responses = phi_x.vstack(phi_u)?.checked_mul(&inv)?;
    let verdict = stability_verdict(&responses.vstack(&inv)?);
    Ok(SlsSfRobust {
        defect,
        verdict,
        responses,
    })
}

/// Output-feedback responses with defects against the stored plant:
/// `[[Φxx, Φxy], [Φux, Φuy]] [zI - A; -C] = [I + Δ1; Δ2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlsOutputFeedback {
    pub phi_xx: TransferMatrix,
    pub phi_xy: TransferMatrix,
    pub phi_ux: TransferMatrix,
    pub phi_uy: TransferMatrix,
    pub defect1: TransferMatrix,
    pub defect2: TransferMatrix,
}

impl SlsOutputFeedback {
    /// Computes both defects exactly for `ss`.
    pub fn with_plant(
        ss: &StateSpace,
        phi_xx: TransferMatrix,
        phi_xy: TransferMatrix,
        phi_ux: TransferMatrix,
        phi_uy: TransferMatrix,
    ) -> Result<Self> {
        let (n, m, p) = (ss.n(), ss.m(), ss.p());
        shape_err("SlsOutputFeedback(Phi_xx)", &phi_xx, (n, n))?;
        shape_err("SlsOutputFeedback(Phi_xy)", &phi_xy, (n, p))?;
        shape_err("SlsOutputFeedback(Phi_ux)", &phi_ux, (m, n))?;
        shape_err("SlsOutputFeedback(Phi_uy)", &phi_uy, (m, p))?;
        let zia = ss.zi_minus_a();
        let c = ss.c().to_transfer();
        let defect1 = phi_xx
            .checked_mul(&zia)?
            .checked_sub(&phi_xy.checked_mul(&c)?)?
            .checked_sub(&TransferMatrix::identity(n))?;
        let defect2 = phi_ux.checked_mul(&zia)?.checked_sub(&phi_uy.checked_mul(&c)?)?;
        Ok(SlsOutputFeedback {
            phi_xx,
            phi_xy,
            phi_ux,
            phi_uy,
            defect1,
            defect2,
        })
    }

    /// Same responses, defects recomputed for another plant.
    pub fn rebase(&self, ss: &StateSpace) -> Result<Self> {
        Self::with_plant(
            ss,
            self.phi_xx.clone(),
            self.phi_xy.clone(),
            self.phi_ux.clone(),
            self.phi_uy.clone(),
        )
    }

    /// `[[Φxx, Φxy], [Φux, Φuy]]`.
    pub fn phi(&self) -> Result<TransferMatrix> {
        TransferMatrix::block_matrix(
            &[
                vec![self.phi_xx.clone(), self.phi_xy.clone()],
                vec![self.phi_ux.clone(), self.phi_uy.clone()],
            ],
            None,
        )
    }

    /// `(n, m, p)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.phi_xx.rows(), self.phi_ux.rows(), self.phi_xy.cols())
    }
}

/// Responses of the loop closed by `K` (any `D`), read off the
/// output-feedback stability matrix.
pub fn sls_of_from_controller(ss: &StateSpace, k: &TransferMatrix) -> Result<SlsOutputFeedback> {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    let s = stability_matrix(&build_output_feedback(ss, k)?)?;
    SlsOutputFeedback::with_plant(
        ss,
        s.submatrix(0, n, 0, n)?,
        s.submatrix(0, n, n + m, p)?,
        s.submatrix(n, m, 0, n)?,
        s.submatrix(n, m, n + m, p)?,
    )
}

/// Responses of the observer-based controller with state gain `F` and
/// observer gain `L`.
pub fn sls_of_from_gains(ss: &StateSpace, f: &QMatrix, l: &QMatrix) -> Result<SlsOutputFeedback> {
    let cf = coprime_from_gains(ss, f, l)?;
    let k = cf.vr.checked_mul(&cf.ur.inverse()?)?;
    sls_of_from_controller(ss, &k)
}

/// Both affine identities hold exactly for `ss`, `Φxx`, `Φxy`, `Φux` are
/// strictly proper and stable, and `Φuy` is proper and stable.
pub fn sls_of_verify(ss: &StateSpace, p: &SlsOutputFeedback) -> bool {
    let check = || -> Result<bool> {
        let (n, m, pp) = p.dims();
        if (n, m, pp) != (ss.n(), ss.m(), ss.p()) {
            return Ok(false);
        }
        let phi = p.phi()?;
        let left = TransferMatrix::block_matrix(&[vec![ss.zi_minus_a(), ss.b().to_transfer().neg()]], None)?;
        let right = TransferMatrix::block_matrix(&[vec![ss.zi_minus_a()], vec![ss.c().to_transfer().neg()]], None)?;
        let target_l =
            TransferMatrix::block_matrix(&[vec![TransferMatrix::identity(n), TransferMatrix::zeros(n, pp)]], None)?;
        let target_r = TransferMatrix::block_matrix(
            &[vec![TransferMatrix::identity(n)], vec![TransferMatrix::zeros(m, n)]],
            None,
        )?;
        let identities = left.checked_mul(&phi)? == target_l && phi.checked_mul(&right)? == target_r;
        let strict = [&p.phi_xx, &p.phi_xy, &p.phi_ux]
            .iter()
            .all(|b| b.is_strictly_proper() && stability_verdict(b).is_stable());
        let uy = p.phi_uy.is_proper() && stability_verdict(&p.phi_uy).is_stable();
        Ok(identities && strict && uy)
    };
    check().unwrap_or(false)
}

/// `K = K0 (I + D K0)^-1` with `K0 = Φuy - Φux Φxx^-1 Φxy`.
pub fn sls_of_controller(p: &SlsOutputFeedback, d: &QMatrix) -> Result<TransferMatrix> {
    let k0 = p
        .phi_uy
        .checked_sub(&p.phi_ux.checked_mul(&p.phi_xx.inverse()?)?.checked_mul(&p.phi_xy)?)?;
    if d.is_zero() {
        return Ok(k0);
    }
    let dk0 = d.to_transfer().checked_mul(&k0)?;
    k0.checked_mul(&dk0.identity_plus()?.inverse()?)
}

/// `[[(I + Δ1)^-1, 0], [-Δ2 (I + Δ1)^-1, I]] Φ`.
pub fn sls_of_perturbed_response(p: &SlsOutputFeedback) -> Result<TransferMatrix> {
    let (n, m, _) = p.dims();
    let inv = p.defect1.identity_plus()?.inverse().map_err(|e| match e {
        Error::SingularMatrix => Error::SingularPerturbedLoop,
        other => other,
    })?;
    let left = TransferMatrix::block_matrix(
        &[
            vec![inv.clone(), TransferMatrix::zeros(n, m)],
            vec![p.defect2.checked_mul(&inv)?.neg(), TransferMatrix::identity(m)],
        ],
        None,
    )?;
    left.checked_mul(&p.phi()?)
}

/// Additive plant perturbation `A + ΔA`, `B + ΔB`, `C + ΔC`, `D + ΔD`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantPerturbation {
    pub da: TransferMatrix,
    pub db: TransferMatrix,
    pub dc: TransferMatrix,
    pub dd: TransferMatrix,
}

impl PlantPerturbation {
    pub fn zero(ss: &StateSpace) -> Self {
        let (n, m, p) = (ss.n(), ss.m(), ss.p());
        PlantPerturbation {
            da: TransferMatrix::zeros(n, n),
            db: TransferMatrix::zeros(n, m),
            dc: TransferMatrix::zeros(p, n),
            dd: TransferMatrix::zeros(p, m),
        }
    }

    /// Splits a stacked `[[ΔA, ΔB], [ΔC, ΔD]]` of shape `(n+p)×(n+m)`.
    pub fn from_stacked(ss: &StateSpace, stacked: &TransferMatrix) -> Result<Self> {
        let (n, m, p) = (ss.n(), ss.m(), ss.p());
        shape_err("PlantPerturbation::from_stacked", stacked, (n + p, n + m))?;
        Ok(PlantPerturbation {
            da: stacked.submatrix(0, n, 0, n)?,
            db: stacked.submatrix(0, n, n, m)?,
            dc: stacked.submatrix(n, p, 0, n)?,
            dd: stacked.submatrix(n, p, n, m)?,
        })
    }

    pub fn stacked(&self) -> Result<TransferMatrix> {
        TransferMatrix::block_matrix(
            &[
                vec![self.da.clone(), self.db.clone()],
                vec![self.dc.clone(), self.dd.clone()],
            ],
            None,
        )
    }

    fn check(&self, ss: &StateSpace) -> Result<()> {
        let (n, m, p) = (ss.n(), ss.m(), ss.p());
        shape_err("PlantPerturbation(dA)", &self.da, (n, n))?;
        shape_err("PlantPerturbation(dB)", &self.db, (n, m))?;
        shape_err("PlantPerturbation(dC)", &self.dc, (p, n))?;
        shape_err("PlantPerturbation(dD)", &self.dd, (p, m))?;
        for (b, name) in [
            (&self.da, "Delta_A"),
            (&self.db, "Delta_B"),
            (&self.dc, "Delta_C"),
            (&self.dd, "Delta_D"),
        ] {
            require_stable(b, name)?;
        }
        Ok(())
    }
}

/// `Ψ = (I - [[ΔA, ΔB], [ΔC, ΔD]] Φ)^-1` and its verdict.
pub fn sls_of_robust_check(
    ss: &StateSpace,
    p: &SlsOutputFeedback,
    delta: &PlantPerturbation,
) -> Result<(TransferMatrix, StabilityVerdict)> {
    delta.check(ss)?;
    let loop_m = delta.stacked()?.checked_mul(&p.phi()?)?.identity_minus()?;
    inverse_verdict(&loop_m).map_err(|e| match e {
        Error::SingularMatrix => Error::SingularPerturbedLoop,
        other => other,
    })
}

/// The same robustness question answered on the output-feedback realization:
/// the controller from `p` closes the nominal loop and
/// `Δ = [[ΔA, ΔB, 0], [0, 0, 0], [ΔC, ΔD, 0]]` perturbs it.
pub fn sls_of_robust_cross_check(
    ss: &StateSpace,
    p: &SlsOutputFeedback,
    delta: &PlantPerturbation,
) -> Result<StabilityVerdict> {
    delta.check(ss)?;
    let k = sls_of_controller(p, ss.d())?;
    let sys = build_output_feedback(ss, &k)?;
    let s_hat = stability_matrix(&sys)?;
    let d = AdditivePerturbation::from_blocks(
        &sys,
        &[
            (0, 0, delta.da.clone()),
            (0, 1, delta.db.clone()),
            (2, 0, delta.dc.clone()),
            (2, 1, delta.dd.clone()),
        ],
    )?;
    Ok(stability_verdict(&perturbed_stability(&s_hat, &d)?))
}

/// Small-gain margin `ε = 1 / ||Φ||∞` over the whole response matrix.
pub fn sls_of_margin(p: &SlsOutputFeedback) -> Result<f64> {
    let norm = hinf_norm(&p.phi()?)?;
    Ok(if norm == 0.0 { f64::INFINITY } else { 1.0 / norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::poly::{q, qi, Q};
    use crate::ratfun::{canonicalize, Polynomial, RationalFunction, StabilityStatus};

    fn s(f: RationalFunction) -> TransferMatrix {
        TransferMatrix::scalar(f)
    }

    fn rf(num: Vec<Q>, den: Vec<Q>) -> RationalFunction {
        canonicalize(Polynomial::new(num), Polynomial::new(den)).unwrap()
    }

    fn k1(v: Q) -> QMatrix {
        QMatrix::new(1, 1, vec![v]).unwrap()
    }

    fn deadbeat() -> SlsStateFeedback {
        let ss = StateSpace::state_feedback(k1(q(1, 2)), k1(qi(1))).unwrap();
        sls_sf_from_gain(&ss, &k1(q(-1, 2))).unwrap()
    }

    #[test]
    fn sf_from_deadbeat_gain() {
        let sls = deadbeat();
        assert_eq!(sls.phi_x, s(RationalFunction::z_inv()));
        assert_eq!(sls.phi_u, s(rf(vec![q(-1, 2)], vec![qi(0), qi(1)])));
        assert!(sls.defect.is_zero());
    }

    #[test]
    fn sf_open_loop_and_bad_gain() {
        let ss = StateSpace::state_feedback(k1(q(1, 3)), k1(qi(1))).unwrap();
        let sls = sls_sf_from_gain(&ss, &k1(qi(0))).unwrap();
        assert_eq!(sls.phi_x, s(rf(vec![qi(1)], vec![q(-1, 3), qi(1)])));
        assert!(sls.phi_u.is_zero());
        let ss = StateSpace::state_feedback(k1(qi(2)), k1(qi(0))).unwrap();
        assert!(matches!(
            sls_sf_from_gain(&ss, &k1(qi(0))),
            Err(Error::NotStabilizing(_))
        ));
    }

    #[test]
    fn sf_robust_scalar_delta() {
        let nominal = deadbeat();
        for (dn, dd) in [(1, 4), (-3, 5), (99, 100), (1, 1), (3, 2)] {
            let delta = q(dn, dd);
            let ss_true = StateSpace::state_feedback(k1(q(1, 2) + &delta), k1(qi(1))).unwrap();
            let out = sls_sf_robust(&ss_true, &nominal.phi_x, &nominal.phi_u).unwrap();
            assert_eq!(out.defect, s(rf(vec![-delta.clone()], vec![qi(0), qi(1)])));
            assert_eq!(out.responses.get(0, 0), &rf(vec![qi(1)], vec![-delta.clone(), qi(1)]));
            let expect = if num_traits::Signed::abs(&delta) < qi(1) {
                StabilityStatus::Stable
            } else if delta == qi(1) {
                StabilityStatus::Marginal
            } else {
                StabilityStatus::Unstable
            };
            assert_eq!(out.verdict.status, expect);
            // oracle: the controller realization on the true plant
            let sys = build_sf_sls(&ss_true, &nominal.phi_x, &nominal.phi_u).unwrap();
            let full = stability_verdict(&stability_matrix(&sys).unwrap());
            assert_eq!(full.status, expect);
        }
        let same = sls_sf_robust(nominal.state_space(), &nominal.phi_x, &nominal.phi_u).unwrap();
        assert_eq!(same.responses, nominal.phi_x.vstack(&nominal.phi_u).unwrap());
    }

    fn scalar_of() -> (StateSpace, SlsOutputFeedback) {
        let ss = StateSpace::scalar(q(1, 2), qi(1), qi(1), qi(0));
        let p = sls_of_from_controller(&ss, &s(RationalFunction::constant(q(-1, 2)))).unwrap();
        (ss, p)
    }

    #[test]
    fn of_scalar_example() {
        let (ss, p) = scalar_of();
        // closed loop A + BKC = 0
        assert_eq!(p.phi_xx, s(RationalFunction::z_inv()));
        assert_eq!(p.phi_xy, s(rf(vec![q(-1, 2)], vec![qi(0), qi(1)])));
        assert_eq!(p.phi_ux, s(rf(vec![q(-1, 2)], vec![qi(0), qi(1)])));
        assert_eq!(p.phi_uy, s(rf(vec![q(1, 4), q(-1, 2)], vec![qi(0), qi(1)])));
        assert!(sls_of_verify(&ss, &p));
        assert!(p.defect1.is_zero() && p.defect2.is_zero());
        assert_eq!(
            sls_of_controller(&p, &QMatrix::zeros(1, 1)).unwrap(),
            s(RationalFunction::constant(q(-1, 2)))
        );

        let mut bad = p.clone();
        bad.phi_uy = s(RationalFunction::z());
        assert!(!sls_of_verify(&ss, &bad));
    }

    #[test]
    fn of_open_loop_block_triangular() {
        let ss = StateSpace::scalar(q(1, 3), qi(1), qi(2), qi(0));
        let p = sls_of_from_controller(&ss, &TransferMatrix::zeros(1, 1)).unwrap();
        assert_eq!(p.phi_xx, s(rf(vec![qi(1)], vec![q(-1, 3), qi(1)])));
        assert!(p.phi_ux.is_zero() && p.phi_uy.is_zero() && p.phi_xy.is_zero());
        assert!(sls_of_verify(&ss, &p));
    }

    #[test]
    fn of_controller_with_feedthrough() {
        let ss = StateSpace::scalar(q(1, 2), qi(1), qi(1), q(1, 3));
        let k = s(RationalFunction::constant(q(-1, 2)));
        let p = sls_of_from_controller(&ss, &k).unwrap();
        assert!(sls_of_verify(&ss, &p));
        assert_eq!(sls_of_controller(&p, ss.d()).unwrap(), k);
    }

    #[test]
    fn of_from_observer_gains() {
        let ss = StateSpace::scalar(qi(2), qi(1), qi(1), qi(0));
        let p = sls_of_from_gains(&ss, &k1(qi(-2)), &k1(qi(-2))).unwrap();
        assert!(sls_of_verify(&ss, &p));
    }

    #[test]
    fn of_singular_phi_xx() {
        let (_, mut p) = scalar_of();
        p.phi_xx = TransferMatrix::zeros(1, 1);
        assert_eq!(sls_of_controller(&p, &QMatrix::zeros(1, 1)), Err(Error::SingularMatrix));
    }

    #[test]
    fn of_c_perturbation() {
        let (ss, p) = scalar_of();
        let dc = q(1, 5);
        let ss_true = ss.with_c(k1(qi(1) + &dc)).unwrap();
        let pt = p.rebase(&ss_true).unwrap();
        let dct = s(RationalFunction::constant(dc));
        assert_eq!(pt.defect1, p.phi_xy.checked_mul(&dct).unwrap().neg());
        assert_eq!(pt.defect2, p.phi_uy.checked_mul(&dct).unwrap().neg());
        let resp = sls_of_perturbed_response(&pt).unwrap();
        let blocks = SlsOutputFeedback::with_plant(
            &ss_true,
            resp.submatrix(0, 1, 0, 1).unwrap(),
            resp.submatrix(0, 1, 1, 1).unwrap(),
            resp.submatrix(1, 1, 0, 1).unwrap(),
            resp.submatrix(1, 1, 1, 1).unwrap(),
        )
        .unwrap();
        assert!(sls_of_verify(&ss_true, &blocks));
        // oracle: nominal controller on the true plant
        let k = sls_of_controller(&p, ss.d()).unwrap();
        assert_eq!(sls_of_from_controller(&ss_true, &k).unwrap().phi().unwrap(), resp);
    }

    #[test]
    fn of_zero_defect_response_is_nominal() {
        let (_, p) = scalar_of();
        assert_eq!(sls_of_perturbed_response(&p).unwrap(), p.phi().unwrap());
    }

    #[test]
    fn of_robust_check_matches_realization() {
        let (ss, p) = scalar_of();
        let zero = PlantPerturbation::zero(&ss);
        let (psi, v) = sls_of_robust_check(&ss, &p, &zero).unwrap();
        assert_eq!(psi, TransferMatrix::identity(2));
        assert!(v.is_stable());
        for (dn, dd, expect) in [
            (1, 4, StabilityStatus::Stable),
            (1, 1, StabilityStatus::Marginal),
            (3, 2, StabilityStatus::Unstable),
        ] {
            let mut d = PlantPerturbation::zero(&ss);
            d.da = s(RationalFunction::constant(q(dn, dd)));
            let (_, v) = sls_of_robust_check(&ss, &p, &d).unwrap();
            assert_eq!(v.status, expect);
            assert_eq!(sls_of_robust_cross_check(&ss, &p, &d).unwrap().status, expect);
        }
    }

    #[test]
    fn of_margin_scaling() {
        let (_, p) = scalar_of();
        let eps = sls_of_margin(&p).unwrap();
        let phi = p.phi().unwrap();
        let oracle = crate::ratfun::NumericMatrix::new(&phi);
        let sweep = (0..=20_000)
            .map(|k| oracle.sigma_max(std::f64::consts::PI * k as f64 / 20_000.0))
            .fold(0.0, f64::max);
        assert!((eps - 1.0 / sweep).abs() < 1e-6);
        let two = qi(2);
        let doubled = SlsOutputFeedback {
            phi_xx: p.phi_xx.scale(&two),
            phi_xy: p.phi_xy.scale(&two),
            phi_ux: p.phi_ux.scale(&two),
            phi_uy: p.phi_uy.scale(&two),
            ..p.clone()
        };
        assert!((sls_of_margin(&doubled).unwrap() - eps / 2.0).abs() < 1e-9);
    }
}
