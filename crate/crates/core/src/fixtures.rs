//! Reference systems and seeded random generators shared by tests,
//! benchmarks and the acceptance suite.

use rand::Rng;

use crate::param::{deadbeat_gain, deadbeat_observer, sls_of_from_gains, IopQuadruple, SlsOutputFeedback};
use crate::ratfun::poly::{q, qi, Q};
use crate::ratfun::{Polynomial, QMatrix, RationalFunction, StateSpace, TransferMatrix};
use crate::realization::{
    build_output_feedback, build_plant_controller, build_sf_sls, build_state_feedback, RealizationSystem,
};
use crate::Result;

/// Plant `G = 1/z`.
pub fn delay_plant() -> TransferMatrix {
    TransferMatrix::scalar(RationalFunction::z_inv())
}

/// Static controller `K = 1/2`.
pub fn half_gain_controller() -> TransferMatrix {
    TransferMatrix::scalar(RationalFunction::constant(q(1, 2)))
}

/// The loop `G = 1/z`, `K = 1/2`.
pub fn delay_loop() -> RealizationSystem {
    build_plant_controller(&delay_plant(), &half_gain_controller()).expect("valid fixture")
}

/// IOP quadruple of [`delay_loop`].
pub fn delay_loop_quadruple() -> IopQuadruple {
    IopQuadruple::from_loop(&delay_plant(), &half_gain_controller()).expect("valid fixture")
}

/// `A = 1/2 + δ`, `B = 1` with full state measurement.
pub fn scalar_state_plant(delta: Q) -> StateSpace {
    StateSpace::state_feedback(
        QMatrix::new(1, 1, vec![q(1, 2) + delta]).expect("1x1"),
        QMatrix::from_ints(1, 1, &[1]).expect("1x1"),
    )
    .expect("valid fixture")
}

/// Deadbeat gain `K = -1/2` for [`scalar_state_plant`] at `δ = 0`.
pub fn scalar_deadbeat_gain() -> QMatrix {
    QMatrix::new(1, 1, vec![q(-1, 2)]).expect("1x1")
}

/// `A = 1/2`, `B = C = 1`, `D = 0`.
pub fn scalar_output_plant() -> StateSpace {
    StateSpace::scalar(q(1, 2), qi(1), qi(1), qi(0))
}

/// Integrator `A = 0`, `B = C = 1`, `D = 0` (plant `1/z`).
pub fn integrator() -> StateSpace {
    StateSpace::scalar(qi(0), qi(1), qi(1), qi(0))
}

/// `k / den` with `k` uniform in `[-span, span]`.
pub fn random_q<R: Rng>(rng: &mut R, span: i64, den: i64) -> Q {
    q(rng.random_range(-span..=span), den)
}

pub fn random_qmatrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, span: i64, den: i64) -> QMatrix {
    QMatrix::from_fn(rows, cols, |_, _| random_q(rng, span, den))
}

fn random_poly<R: Rng>(rng: &mut R, degree: usize) -> Polynomial {
    Polynomial::new((0..=degree).map(|_| random_q(rng, 4, 4)).collect())
}

/// Proper entry with a monic denominator of degree at most `max_deg`;
/// strictly proper when `strict`.
pub fn random_proper<R: Rng>(rng: &mut R, max_deg: usize, strict: bool) -> RationalFunction {
    let d = rng.random_range(usize::from(strict)..=max_deg.max(usize::from(strict)));
    let mut den = random_poly(rng, d).coeffs().to_vec();
    den.resize(d + 1, qi(0));
    den[d] = qi(1);
    let num_deg = if strict { d - 1 } else { d };
    let num = random_poly(rng, num_deg);
    crate::ratfun::canonicalize(num, Polynomial::new(den)).expect("monic denominator")
}

/// Stable entry: poles `k/8` with `|k| <= 6`, relative degree `>= strict`.
pub fn random_stable<R: Rng>(rng: &mut R, max_deg: usize, strict: bool) -> RationalFunction {
    let d = rng.random_range(usize::from(strict)..=max_deg.max(usize::from(strict)));
    let mut den = Polynomial::one();
    for _ in 0..d {
        den = &den * &Polynomial::new(vec![-random_q(rng, 6, 8), qi(1)]);
    }
    let num_deg = if strict { d - 1 } else { d };
    crate::ratfun::canonicalize(random_poly(rng, num_deg), den).expect("nonzero denominator")
}

pub fn random_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    mut entry: impl FnMut(&mut R) -> RationalFunction,
) -> TransferMatrix {
    let entries = (0..rows * cols).map(|_| entry(rng)).collect();
    TransferMatrix::new(rows, cols, entries).expect("shape")
}

/// Stable FIR entry `Σ c_j z^-j`, `j <= order`, coefficients `k/den`.
pub fn random_fir<R: Rng>(rng: &mut R, order: usize, span: i64, den: i64) -> RationalFunction {
    let coeffs: Vec<Q> = (0..=order).rev().map(|_| random_q(rng, span, den)).collect();
    crate::ratfun::canonicalize(Polynomial::new(coeffs), Polynomial::monomial(qi(1), order))
        .expect("monomial denominator")
}

/// Strictly proper FIR entry `c1 z^-1 + c2 z^-2`.
fn random_response<R: Rng>(rng: &mut R) -> RationalFunction {
    &random_fir(rng, 1, 4, 4) * &RationalFunction::z_inv()
}

/// Random state-space data with `n` states, `m` inputs and `p` outputs.
pub fn random_state_space<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize, with_d: bool) -> StateSpace {
    let d = if with_d {
        random_qmatrix(rng, p, m, 2, 4)
    } else {
        QMatrix::zeros(p, m)
    };
    StateSpace::new(
        random_qmatrix(rng, n, n, 4, 4),
        random_qmatrix(rng, n, m, 2, 2),
        random_qmatrix(rng, p, n, 2, 2),
        d,
    )
    .expect("consistent dimensions")
}

/// One random realization from builder `kind % 4`: plant/controller,
/// state feedback, state-feedback SLS (FIR responses) or output feedback.
pub fn random_realization<R: Rng>(rng: &mut R, kind: usize) -> Result<RealizationSystem> {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=2);
    let p = rng.random_range(1..=2);
    match kind % 4 {
        0 => {
            let g = random_matrix(rng, p, m, |r| random_proper(r, 2, false));
            let k = random_matrix(rng, m, p, |r| random_proper(r, 2, false));
            build_plant_controller(&g, &k)
        }
        1 => {
            let ss = random_state_space(rng, n, m, n, false);
            let k = random_matrix(rng, m, n, |r| random_proper(r, 2, false));
            build_state_feedback(&ss, &k)
        }
        2 => {
            let ss = random_state_space(rng, n, m, n, false);
            let phi_x = random_matrix(rng, n, n, random_response);
            let phi_u = random_matrix(rng, m, n, random_response);
            build_sf_sls(&ss, &phi_x, &phi_u)
        }
        _ => {
            let ss = random_state_space(rng, n, m, p, true);
            let k = random_matrix(rng, m, p, |r| random_proper(r, 2, false));
            build_output_feedback(&ss, &k)
        }
    }
}

/// Random plant with deadbeat state and observer gains acting through the
/// first input and first output. Retries until the pair is controllable
/// and observable.
pub fn random_stabilizable<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    p: usize,
    with_d: bool,
) -> (StateSpace, QMatrix, QMatrix) {
    loop {
        let ss = random_state_space(rng, n, m, p, with_d);
        let b0 = QMatrix::from_fn(n, 1, |i, _| ss.b().get(i, 0).clone());
        let c0 = QMatrix::from_fn(1, n, |_, j| ss.c().get(0, j).clone());
        let (Ok(f0), Ok(l0)) = (deadbeat_gain(ss.a(), &b0), deadbeat_observer(ss.a(), &c0)) else {
            continue;
        };
        let f = QMatrix::from_fn(m, n, |i, j| if i == 0 { f0.get(0, j).clone() } else { qi(0) });
        let l = QMatrix::from_fn(n, p, |i, j| if j == 0 { l0.get(i, 0).clone() } else { qi(0) });
        return (ss, f, l);
    }
}

/// Output-feedback responses of a random observer-based loop.
pub fn random_output_feedback<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    p: usize,
    with_d: bool,
) -> (StateSpace, SlsOutputFeedback) {
    loop {
        let (ss, f, l) = random_stabilizable(rng, n, m, p, with_d);
        if let Ok(resp) = sls_of_from_gains(&ss, &f, &l) {
            return (ss, resp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{coprime_from_gains, sls_of_verify};
    use crate::ratfun::stability_verdict;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(random_proper(&mut rng, 2, false).is_proper());
            assert!(random_proper(&mut rng, 2, true).is_strictly_proper());
            let s = random_stable(&mut rng, 2, true);
            assert!(s.is_strictly_proper());
            assert!(stability_verdict(&TransferMatrix::scalar(s)).is_stable());
            let f = random_fir(&mut rng, 2, 4, 4);
            assert!(stability_verdict(&TransferMatrix::scalar(f)).is_stable());
        }
    }

    #[test]
    fn stabilizable_fixtures_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let (ss, f, l) = random_stabilizable(&mut rng, 2, 2, 1, true);
            assert!(coprime_from_gains(&ss, &f, &l).is_ok());
        }
        let (ss, resp) = random_output_feedback(&mut rng, 2, 1, 1, false);
        assert!(sls_of_verify(&ss, &resp));
    }

    #[test]
    fn reference_fixtures() {
        assert!(delay_loop_quadruple().u.get(0, 0).den().coeffs().len() == 2);
        assert_eq!(scalar_state_plant(qi(0)).a().get(0, 0), &q(1, 2));
    }
}
