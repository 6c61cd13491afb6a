mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use realstab::fixtures::{
    delay_loop, random_fir, random_matrix, random_proper, random_realization, scalar_output_plant,
};
use realstab::ratfun::poly::{q, qi, Q};
use realstab::ratfun::{mat_inverse, Block, QMatrix, StateSpace};
use realstab::realization::*;
use realstab::{Error, RationalFunction, TransferMatrix};

fn blocks(sizes: &[usize]) -> Vec<Block> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| Block::new(format!("s{i}"), n))
        .collect()
}

fn fig4_s() -> TransferMatrix {
    m(vec![
        vec![rfi(&[0, 2], &[-1, 2]), rfi(&[2], &[-1, 2])],
        vec![rfi(&[0, 1], &[-1, 2]), rfi(&[0, 2], &[-1, 2])],
    ])
}

#[test]
fn delay_loop_matrices() {
    let sys = delay_loop();
    assert_eq!(
        sys.r(),
        &m(vec![
            vec![RationalFunction::zero(), RationalFunction::z_inv()],
            vec![c(q(1, 2)), RationalFunction::zero()],
        ])
        .with_blocks_of(sys.r())
        .unwrap()
    );
    let s_mat = stability_matrix(&sys).unwrap();
    assert_eq!(s_mat.clone().without_blocks(), fig4_s());
    assert!(verify_rs_identity(&sys, &s_mat));
    // independent check of (I - R) S = I at exact points
    for z in probe_points() {
        let sv = eval_at(&fig4_s(), &z);
        let zi = Q::from_integer(1.into()) / &z;
        let half = q(1, 2);
        assert_eq!(sv[0].clone() - zi.clone() * &sv[2], qi(1));
        assert_eq!(sv[1].clone() - zi * &sv[3], qi(0));
        assert_eq!(-half.clone() * &sv[0] + &sv[2], qi(0));
        assert_eq!(-half * &sv[1] + &sv[3], qi(1));
    }
}

#[test]
fn state_feedback_examples() {
    let ss = StateSpace::state_feedback(
        QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
        QMatrix::from_ints(1, 1, &[1]).unwrap(),
    )
    .unwrap();
    let sys = build_state_feedback(&ss, &s(c(q(-1, 2)))).unwrap();
    let expected = m(vec![
        vec![rfi(&[-1, 2], &[2]), c(qi(-1))],
        vec![c(q(1, 2)), RationalFunction::one()],
    ]);
    assert_eq!(sys.loop_matrix().without_blocks(), expected);

    let open = build_state_feedback(&ss, &TransferMatrix::zeros(1, 1)).unwrap();
    let sm = stability_matrix(&open).unwrap().without_blocks();
    let res = rf(&[qi(1)], &[q(-1, 2), qi(1)]);
    assert_eq!(
        sm,
        m(vec![
            vec![res.clone(), res],
            vec![RationalFunction::zero(), RationalFunction::one()]
        ])
    );

    let integ = StateSpace::state_feedback(QMatrix::zeros(1, 1), QMatrix::from_ints(1, 1, &[1]).unwrap()).unwrap();
    let sm = stability_matrix(&build_state_feedback(&integ, &TransferMatrix::zeros(1, 1)).unwrap()).unwrap();
    let zi = RationalFunction::z_inv();
    assert_eq!(
        sm.without_blocks(),
        m(vec![
            vec![zi.clone(), zi],
            vec![RationalFunction::zero(), RationalFunction::one()]
        ])
    );
}

#[test]
fn sf_sls_loop_matrix() {
    let ss = StateSpace::state_feedback(
        QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
        QMatrix::from_ints(1, 1, &[1]).unwrap(),
    )
    .unwrap();
    let sys = build_sf_sls(&ss, &s(RationalFunction::z_inv()), &s(rf(&[q(-1, 2)], &[qi(0), qi(1)]))).unwrap();
    let (o, z) = (RationalFunction::one(), RationalFunction::zero());
    let expected = m(vec![
        vec![rfi(&[-1, 2], &[2]), c(qi(-1)), z.clone()],
        vec![z.clone(), o.clone(), c(q(1, 2))],
        vec![c(qi(-1)), z, o],
    ]);
    assert_eq!(sys.loop_matrix().without_blocks(), expected);
    let sm = stability_matrix(&sys).unwrap();
    assert!(verify_rs_identity(&sys, &sm));
    assert_eq!(
        sys.loop_matrix().checked_mul(&sm).unwrap().without_blocks(),
        TransferMatrix::identity(3)
    );
}

#[test]
fn output_feedback_open_loop() {
    let ss = scalar_output_plant();
    let sys = build_output_feedback(&ss, &TransferMatrix::zeros(1, 1)).unwrap();
    let sm = stability_matrix(&sys).unwrap();
    assert!(realstab::ratfun::stability_verdict(&sm).is_stable());
    // with C = I and D = 0 the x and y rows coincide in the first column
    assert_eq!(sm.get(2, 0), sm.get(0, 0));
    let k = build_output_feedback(&ss, &s(c(q(-1, 2)))).unwrap();
    let sk = stability_matrix(&k).unwrap();
    assert!(verify_rs_identity(&k, &sk));
}

#[test]
fn diagonal_transformation() {
    let sys = delay_loop();
    let s_mat = stability_matrix(&sys).unwrap();
    let t = Transformation::new(m(vec![
        vec![c(qi(2)), RationalFunction::zero()],
        vec![RationalFunction::zero(), RationalFunction::one()],
    ]))
    .unwrap();
    let (eq, s_eq) = apply_transformation(&sys, &s_mat, &t).unwrap();
    assert_eq!(
        s_eq.clone().without_blocks(),
        s_mat.checked_mul(t.matrix()).unwrap().without_blocks()
    );
    assert!(verify_rs_identity(&eq, &s_eq));
    assert_eq!(stability_matrix(&eq).unwrap().without_blocks(), s_eq.without_blocks());
}

#[test]
fn scalar_perturbation_by_hand() {
    for (a, b) in [(q(1, 3), q(1, 5)), (q(-1, 2), q(3, 4)), (q(2, 7), q(-9, 7))] {
        let r_hat = s(rf(std::slice::from_ref(&a), &[qi(0), qi(1)]));
        let sys = RealizationSystem::new(r_hat, blocks(&[1])).unwrap();
        let s_hat = stability_matrix(&sys).unwrap();
        assert_eq!(
            s_hat.clone().without_blocks(),
            s(rf(&[qi(0), qi(1)], &[-a.clone(), qi(1)]))
        );
        let delta = AdditivePerturbation::infer(&sys, s(rf(std::slice::from_ref(&b), &[qi(0), qi(1)]))).unwrap();
        let pert = perturbed_stability(&s_hat, &delta).unwrap();
        let expected = s(rf(&[qi(0), qi(1)], &[-(a.clone() + &b), qi(1)]));
        assert_eq!(pert.clone().without_blocks(), expected);
        assert_eq!(
            direct_perturbed_stability(&sys, &delta).unwrap().without_blocks(),
            expected
        );
        for z in probe_points() {
            assert_eq!(eval_at(&pert, &z), vec![z.clone() / (z.clone() - &a - &b)]);
        }
    }
}

#[test]
fn singular_loops_are_typed_errors() {
    let sys = RealizationSystem::new(s(RationalFunction::one()), blocks(&[1])).unwrap();
    assert_eq!(stability_matrix(&sys), Err(Error::NoStabilityMatrix));
    let ok = RealizationSystem::new(s(c(q(1, 2))), blocks(&[1])).unwrap();
    let s_hat = stability_matrix(&ok).unwrap();
    let delta = AdditivePerturbation::infer(&ok, s(c(q(1, 2)))).unwrap();
    assert_eq!(perturbed_stability(&s_hat, &delta), Err(Error::SingularPerturbedLoop));
}

#[test]
fn improper_diagonal_is_exempt() {
    let ss = StateSpace::state_feedback(
        QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
        QMatrix::from_ints(1, 1, &[1]).unwrap(),
    )
    .unwrap();
    let sys = build_state_feedback(&ss, &s(c(q(-1, 2)))).unwrap();
    assert!(check_offdiagonal_properness(&sys, &AdditivePerturbation::zero(&sys)));
    let bad = AdditivePerturbation::new(
        &sys,
        m(vec![
            vec![RationalFunction::zero(), RationalFunction::z()],
            vec![RationalFunction::zero(); 2],
        ]),
        BTreeSet::from([(0, 1)]),
    )
    .unwrap();
    assert!(!check_offdiagonal_properness(&sys, &bad));
}

/// Random square `R` over `n` scalar signals.
fn random_square(seed: u64, n: usize) -> (RealizationSystem, TransferMatrix) {
    let mut r = rng(seed);
    let rm = random_matrix(&mut r, n, n, |g| random_proper(g, 1, true));
    let delta = random_matrix(&mut r, n, n, |g| random_fir(g, 1, 4, 4));
    (RealizationSystem::new(rm, blocks(&vec![1; n])).unwrap(), delta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rs_identity_for_every_builder(seed in any::<u64>(), kind in 0usize..4) {
        let sys = random_realization(&mut rng(seed), kind).unwrap();
        match stability_matrix(&sys) {
            Ok(sm) => prop_assert!(verify_rs_identity(&sys, &sm)),
            Err(e) => prop_assert_eq!(e, Error::NoStabilityMatrix),
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_match_direct_inverse(seed in any::<u64>(), n in 1usize..=3) {
        let (sys, delta) = random_square(seed, n);
        let Ok(s_hat) = stability_matrix(&sys) else { return Ok(()) };
        let direct = mat_inverse(&sys.r().checked_add(&delta).unwrap().identity_minus().unwrap());
        let forms = perturbed_stability_raw(&s_hat, &delta);
        match (forms, direct) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.without_blocks(), b.without_blocks()),
            (Err(Error::SingularPerturbedLoop), Err(Error::SingularMatrix)) => {}
            (a, b) => prop_assert!(false, "forms {a:?} vs direct {b:?}"),
        }
    }

    #[test]
    fn both_sides_agree(seed in any::<u64>(), n in 1usize..=3) {
        let (sys, delta) = random_square(seed, n);
        let Ok(s_hat) = stability_matrix(&sys) else { return Ok(()) };
        let left = delta.checked_mul(&s_hat).unwrap().identity_minus().unwrap().inverse();
        let right = s_hat.checked_mul(&delta).unwrap().identity_minus().unwrap().inverse();
        if let (Ok(l), Ok(r)) = (left, right) {
            prop_assert_eq!(s_hat.checked_mul(&l).unwrap(), r.checked_mul(&s_hat).unwrap());
        }
    }

    #[test]
    fn transformations_preserve_the_identity(seed in any::<u64>(), kind in 0usize..4) {
        let mut r = rng(seed);
        let sys = random_realization(&mut r, kind).unwrap();
        let Ok(sm) = stability_matrix(&sys) else { return Ok(()) };
        let n = sys.dim();
        let tq = QMatrix::from_fn(n, n, |i, j| if i == j { q(4 + r.random_range(0..=4), 4) } else if i < j { realstab::fixtures::random_q(&mut r, 2, 4) } else { qi(0) });
        let t = Transformation::new(tq.to_transfer()).unwrap();
        let (eq, s_eq) = apply_transformation(&sys, &sm, &t).unwrap();
        prop_assert_eq!(stability_matrix(&eq).unwrap().without_blocks(), s_eq.without_blocks());
    }

    #[test]
    fn equal_r_gives_equal_s(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rm = random_matrix(&mut r, 3, 3, |g| random_proper(g, 2, true));
        let a = RealizationSystem::new(rm.clone(), blocks(&[1, 1, 1])).unwrap();
        let b = RealizationSystem::new(rm, blocks(&[2, 1])).unwrap();
        match (stability_matrix(&a), stability_matrix(&b)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.without_blocks(), y.without_blocks()),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }
}
