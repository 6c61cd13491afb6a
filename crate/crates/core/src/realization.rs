//! Realization matrices of closed loops and their stability matrices.
//!
//! A [`RealizationSystem`] holds `R` with one block per internal signal.
//! The builders produce `R` for the plant/controller loop, state feedback,
//! the robust state-feedback SLS controller and output feedback.
//! `S = (I - R)^-1` is computed exactly, and an additive perturbation
//! `R + Δ` turns into the feedback `S(Δ) = Ŝ (I - ΔŜ)^-1 = (I - ŜΔ)^-1 Ŝ`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ratfun::{Block, StateSpace, TransferMatrix};

/// Realization matrix `R` plus its signal partition.
///
/// `R` is square with identical row and column partitions. Blocks coupling
/// two different signals must be proper; diagonal blocks may be improper
/// (e.g. `I - (zI - A)`).
#[derive(Clone, Debug, PartialEq)]
pub struct RealizationSystem {
    r: TransferMatrix,
    blocks: Vec<Block>,
}

impl RealizationSystem {
    /// Validates the partition and off-diagonal properness.
    pub fn new(r: TransferMatrix, blocks: Vec<Block>) -> Result<Self> {
        let sys = Self::with_partition(r, blocks)?;
        if let Some((bi, bj)) = sys.first_improper_offdiagonal(&sys.r) {
            return Err(Error::ImproperBlock(format!(
                "block R[{}, {}]",
                sys.blocks[bi].label, sys.blocks[bj].label
            )));
        }
        Ok(sys)
    }

    /// Checks shape and partition only; used for transformed and perturbed
    /// realizations whose coupling blocks need not be proper.
    pub fn with_partition(r: TransferMatrix, blocks: Vec<Block>) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::DimensionMismatch {
                op: "RealizationSystem",
                left: r.shape(),
                right: r.shape(),
            });
        }
        let r = r.with_blocks(blocks.clone(), blocks.clone())?;
        Ok(RealizationSystem { r, blocks })
    }

    /// Builds the system from `I - R`, the form in which loops are usually drawn.
    pub fn from_loop_matrix(i_minus_r: TransferMatrix, blocks: Vec<Block>) -> Result<Self> {
        Self::new(i_minus_r.identity_minus()?, blocks)
    }

    pub fn r(&self) -> &TransferMatrix {
        &self.r
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn signals(&self) -> Vec<&str> {
        self.blocks.iter().map(|b| b.label.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    /// `I - R`.
    pub fn loop_matrix(&self) -> TransferMatrix {
        self.r
            .identity_minus()
            .expect("R is square")
            .with_blocks(self.blocks.clone(), self.blocks.clone())
            .expect("partition already validated")
    }

    /// Index of the block labelled `label`.
    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    fn first_improper_offdiagonal(&self, m: &TransferMatrix) -> Option<(usize, usize)> {
        let nb = self.blocks.len();
        (0..nb)
            .flat_map(|bi| (0..nb).map(move |bj| (bi, bj)))
            .filter(|(bi, bj)| bi != bj)
            .find(|&(bi, bj)| {
                !m.clone()
                    .with_blocks(self.blocks.clone(), self.blocks.clone())
                    .and_then(|m| m.block(bi, bj))
                    .map(|b| b.is_proper())
                    .unwrap_or(false)
            })
    }
}

fn partition(labels: &[&str], sizes: &[usize]) -> Vec<Block> {
    labels.iter().zip(sizes).map(|(l, &s)| Block::new(*l, s)).collect()
}

fn expect_shape(op: &'static str, m: &TransferMatrix, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::DimensionMismatch {
            op,
            left: m.shape(),
            right: shape,
        });
    }
    Ok(())
}

/// Plant/controller loop: `R = [[0, G], [K, 0]]` over signals `(y, u)`.
pub fn build_plant_controller(g: &TransferMatrix, k: &TransferMatrix) -> Result<RealizationSystem> {
    let (p, m) = g.shape();
    expect_shape("build_plant_controller", k, (m, p))?;
    if !g.is_proper() {
        return Err(Error::ImproperBlock("plant G".into()));
    }
    if !k.is_proper() {
        return Err(Error::ImproperBlock("controller K".into()));
    }
    let r = TransferMatrix::block_matrix(
        &[
            vec![TransferMatrix::zeros(p, p), g.clone()],
            vec![k.clone(), TransferMatrix::zeros(m, m)],
        ],
        None,
    )?;
    RealizationSystem::new(r, partition(&["y", "u"], &[p, m]))
}

/// State feedback: `I - R = [[zI - A, -B], [-K, I]]` over signals `(x, u)`.
pub fn build_state_feedback(ss: &StateSpace, k: &TransferMatrix) -> Result<RealizationSystem> {
    let (n, m) = (ss.n(), ss.m());
    expect_shape("build_state_feedback", k, (m, n))?;
    let loop_matrix = TransferMatrix::block_matrix(
        &[
            vec![ss.zi_minus_a(), ss.b().to_transfer().neg()],
            vec![k.neg(), TransferMatrix::identity(m)],
        ],
        None,
    )?;
    RealizationSystem::from_loop_matrix(loop_matrix, partition(&["x", "u"], &[n, m]))
}

/// Robust state-feedback SLS controller realization over signals `(x, u, δ)`:
/// `I - R = [[zI - A, -B, 0], [0, I, -zΦu], [-I, 0, zΦx]]`.
pub fn build_sf_sls(ss: &StateSpace, phi_x: &TransferMatrix, phi_u: &TransferMatrix) -> Result<RealizationSystem> {
    let (n, m) = (ss.n(), ss.m());
    expect_shape("build_sf_sls", phi_x, (n, n))?;
    expect_shape("build_sf_sls", phi_u, (m, n))?;
    if !phi_x.is_strictly_proper() {
        return Err(Error::NotStrictlyProper("Phi_x".into()));
    }
    if !phi_u.is_strictly_proper() {
        return Err(Error::NotStrictlyProper("Phi_u".into()));
    }
    let loop_matrix = TransferMatrix::block_matrix(
        &[
            vec![ss.zi_minus_a(), ss.b().to_transfer().neg(), TransferMatrix::zeros(n, n)],
            vec![
                TransferMatrix::zeros(m, n),
                TransferMatrix::identity(m),
                phi_u.shift().neg(),
            ],
            vec![
                TransferMatrix::identity(n).neg(),
                TransferMatrix::zeros(n, m),
                phi_x.shift(),
            ],
        ],
        None,
    )?;
    RealizationSystem::from_loop_matrix(loop_matrix, partition(&["x", "u", "delta"], &[n, m, n]))
}

/// Output feedback over signals `(x, u, y)`:
/// `I - R = [[zI - A, -B, 0], [0, I, -K], [-C, -D, I]]`.
pub fn build_output_feedback(ss: &StateSpace, k: &TransferMatrix) -> Result<RealizationSystem> {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    expect_shape("build_output_feedback", k, (m, p))?;
    let loop_matrix = TransferMatrix::block_matrix(
        &[
            vec![ss.zi_minus_a(), ss.b().to_transfer().neg(), TransferMatrix::zeros(n, p)],
            vec![TransferMatrix::zeros(m, n), TransferMatrix::identity(m), k.neg()],
            vec![
                ss.c().to_transfer().neg(),
                ss.d().to_transfer().neg(),
                TransferMatrix::identity(p),
            ],
        ],
        None,
    )?;
    RealizationSystem::from_loop_matrix(loop_matrix, partition(&["x", "u", "y"], &[n, m, p]))
}

/// `S = (I - R)^-1`.
pub fn stability_matrix(sys: &RealizationSystem) -> Result<TransferMatrix> {
    sys.loop_matrix().inverse().map_err(|e| match e {
        Error::SingularMatrix => Error::NoStabilityMatrix,
        other => other,
    })
}

/// `(I - R) S = S (I - R) = I`, exactly.
pub fn verify_rs_identity(sys: &RealizationSystem, s: &TransferMatrix) -> bool {
    let l = sys.loop_matrix();
    if s.shape() != l.shape() {
        return false;
    }
    let id = TransferMatrix::identity(l.rows());
    matches!(l.checked_mul(s), Ok(ref p) if *p == id) && matches!(s.checked_mul(&l), Ok(ref p) if *p == id)
}

/// An invertible change of disturbance basis `d = T w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transformation {
    t: TransferMatrix,
    t_inv: TransferMatrix,
}

impl Transformation {
    pub fn new(t: TransferMatrix) -> Result<Self> {
        let t_inv = t.inverse()?;
        Ok(Transformation { t, t_inv })
    }

    pub fn identity(n: usize) -> Self {
        Transformation {
            t: TransferMatrix::identity(n),
            t_inv: TransferMatrix::identity(n),
        }
    }

    pub fn matrix(&self) -> &TransferMatrix {
        &self.t
    }

    pub fn inverse_matrix(&self) -> &TransferMatrix {
        &self.t_inv
    }

    pub fn inverse(&self) -> Transformation {
        Transformation {
            t: self.t_inv.clone(),
            t_inv: self.t.clone(),
        }
    }
}

/// `R_eq = I - T^-1 (I - R)` and `S_eq = S T`.
pub fn apply_transformation(
    sys: &RealizationSystem,
    s: &TransferMatrix,
    t: &Transformation,
) -> Result<(RealizationSystem, TransferMatrix)> {
    let l = sys.loop_matrix();
    let r_eq = t.t_inv.checked_mul(&l)?.identity_minus()?;
    let s_eq = s.checked_mul(&t.t)?;
    let sys_eq = RealizationSystem::with_partition(r_eq, sys.blocks.clone())?;
    Ok((sys_eq, s_eq))
}

/// Additive perturbation `Δ` of a realization, confined to a set of blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AdditivePerturbation {
    delta: TransferMatrix,
    block_mask: BTreeSet<(usize, usize)>,
}

impl AdditivePerturbation {
    /// `delta` must match the host's shape and vanish outside `block_mask`.
    pub fn new(host: &RealizationSystem, delta: TransferMatrix, block_mask: BTreeSet<(usize, usize)>) -> Result<Self> {
        expect_shape("AdditivePerturbation", &delta, host.r.shape())?;
        let nb = host.blocks.len();
        if let Some(&(bi, bj)) = block_mask.iter().find(|&&(bi, bj)| bi >= nb || bj >= nb) {
            return Err(Error::InvalidPartition(format!("mask block ({bi}, {bj}) out of range")));
        }
        let delta = delta.with_blocks(host.blocks.clone(), host.blocks.clone())?;
        for bi in 0..nb {
            for bj in 0..nb {
                if !block_mask.contains(&(bi, bj)) && !delta.block(bi, bj)?.is_zero() {
                    return Err(Error::InvalidArgument(format!(
                        "perturbation is nonzero outside its mask at block ({bi}, {bj})"
                    )));
                }
            }
        }
        Ok(AdditivePerturbation { delta, block_mask })
    }

    /// Mask inferred from the nonzero blocks of `delta`.
    pub fn infer(host: &RealizationSystem, delta: TransferMatrix) -> Result<Self> {
        expect_shape("AdditivePerturbation", &delta, host.r.shape())?;
        let nb = host.blocks.len();
        let d = delta.clone().with_blocks(host.blocks.clone(), host.blocks.clone())?;
        let mut mask = BTreeSet::new();
        for bi in 0..nb {
            for bj in 0..nb {
                if !d.block(bi, bj)?.is_zero() {
                    mask.insert((bi, bj));
                }
            }
        }
        Self::new(host, delta, mask)
    }

    /// Places the given blocks into an otherwise zero perturbation.
    pub fn from_blocks(host: &RealizationSystem, blocks: &[(usize, usize, TransferMatrix)]) -> Result<Self> {
        let nb = host.blocks.len();
        let sizes: Vec<usize> = host.blocks.iter().map(|b| b.size).collect();
        let mut grid: Vec<Vec<TransferMatrix>> = (0..nb)
            .map(|bi| (0..nb).map(|bj| TransferMatrix::zeros(sizes[bi], sizes[bj])).collect())
            .collect();
        let mut mask = BTreeSet::new();
        for (bi, bj, m) in blocks {
            if *bi >= nb || *bj >= nb {
                return Err(Error::InvalidPartition(format!("no block ({bi}, {bj})")));
            }
            expect_shape("AdditivePerturbation::from_blocks", m, (sizes[*bi], sizes[*bj]))?;
            grid[*bi][*bj] = m.clone();
            mask.insert((*bi, *bj));
        }
        Self::new(host, TransferMatrix::block_matrix(&grid, None)?, mask)
    }

    pub fn zero(host: &RealizationSystem) -> Self {
        AdditivePerturbation {
            delta: TransferMatrix::zeros(host.dim(), host.dim())
                .with_blocks(host.blocks.clone(), host.blocks.clone())
                .expect("host partition is valid"),
            block_mask: BTreeSet::new(),
        }
    }

    pub fn delta(&self) -> &TransferMatrix {
        &self.delta
    }

    pub fn block_mask(&self) -> &BTreeSet<(usize, usize)> {
        &self.block_mask
    }
}

/// Stability matrix of `R̂ + Δ` from the nominal `Ŝ`.
///
/// Both closed forms `Ŝ (I - ΔŜ)^-1` and `(I - ŜΔ)^-1 Ŝ` are evaluated and
/// must agree exactly.
pub fn perturbed_stability(s_hat: &TransferMatrix, delta: &AdditivePerturbation) -> Result<TransferMatrix> {
    perturbed_stability_raw(s_hat, &delta.delta)
}

/// [`perturbed_stability`] for an unstructured square `Δ`.
pub fn perturbed_stability_raw(s_hat: &TransferMatrix, delta: &TransferMatrix) -> Result<TransferMatrix> {
    expect_shape("perturbed_stability", delta, s_hat.shape())?;
    if delta.is_zero() {
        return Ok(s_hat.clone());
    }
    let singular = |e| match e {
        Error::SingularMatrix => Error::SingularPerturbedLoop,
        other => other,
    };
    let ds = delta.checked_mul(s_hat)?.identity_minus()?;
    let left = s_hat.checked_mul(&ds.inverse().map_err(singular)?)?;
    let sd = s_hat.checked_mul(delta)?.identity_minus()?;
    let right = sd.inverse().map_err(singular)?.checked_mul(s_hat)?;
    if left != right {
        return Err(Error::FormMismatch);
    }
    left.with_blocks_of(s_hat)
}

/// `Ŝ (I - ΔŜ)^-1` alone, for callers that only need the verdict.
pub(crate) fn perturbed_stability_left(s_hat: &TransferMatrix, delta: &TransferMatrix) -> Result<TransferMatrix> {
    expect_shape("perturbed_stability", delta, s_hat.shape())?;
    if delta.is_zero() {
        return Ok(s_hat.clone());
    }
    let ds = delta.checked_mul(s_hat)?.identity_minus()?;
    let inv = ds.inverse().map_err(|e| match e {
        Error::SingularMatrix => Error::SingularPerturbedLoop,
        other => other,
    })?;
    s_hat.checked_mul(&inv)
}

/// The perturbed realization `R̂ + Δ`.
pub fn perturbed_realization(sys: &RealizationSystem, delta: &AdditivePerturbation) -> Result<RealizationSystem> {
    RealizationSystem::with_partition(sys.r.checked_add(&delta.delta)?, sys.blocks.clone())
}

/// `(I - R̂ - Δ)^-1` by direct inversion, the cross-check for
/// [`perturbed_stability`].
pub fn direct_perturbed_stability(sys: &RealizationSystem, delta: &AdditivePerturbation) -> Result<TransferMatrix> {
    stability_matrix(&perturbed_realization(sys, delta)?).map_err(|e| match e {
        Error::NoStabilityMatrix => Error::SingularPerturbedLoop,
        other => other,
    })
}

/// Every block of `R̂ + Δ` coupling two distinct signals is proper.
pub fn check_offdiagonal_properness(sys: &RealizationSystem, delta: &AdditivePerturbation) -> bool {
    match sys.r.checked_add(&delta.delta) {
        Ok(r) => sys.first_improper_offdiagonal(&r).is_none(),
        Err(_) => false,
    }
}

/// User-supplied membership test `(R(Δ), S(Δ)) ∈ C` for the general robust
/// synthesis constraint set. No built-in instances exist beyond
/// [`check_offdiagonal_properness`].
pub trait RealizationConstraint {
    fn admits(&self, r: &TransferMatrix, s: &TransferMatrix) -> bool;
}

impl<F> RealizationConstraint for F
where
    F: Fn(&TransferMatrix, &TransferMatrix) -> bool,
{
    fn admits(&self, r: &TransferMatrix, s: &TransferMatrix) -> bool {
        self(r, s)
    }
}

/// Evaluates off-diagonal properness plus the given constraints on the
/// perturbed pair `(R̂ + Δ, S(Δ))`.
pub fn satisfies_constraints(
    sys: &RealizationSystem,
    s_hat: &TransferMatrix,
    delta: &AdditivePerturbation,
    constraints: &[&dyn RealizationConstraint],
) -> Result<bool> {
    if !check_offdiagonal_properness(sys, delta) {
        return Ok(false);
    }
    let r = sys.r.checked_add(&delta.delta)?;
    let s = perturbed_stability(s_hat, delta)?;
    Ok(constraints.iter().all(|c| c.admits(&r, &s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::poly::{q, qi};
    use crate::ratfun::{canonicalize, Polynomial, QMatrix, RationalFunction};

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        canonicalize(Polynomial::from_ints(num), Polynomial::from_ints(den)).unwrap()
    }

    fn c(v: num_rational::BigRational) -> RationalFunction {
        RationalFunction::constant(v)
    }

    fn scalar(f: RationalFunction) -> TransferMatrix {
        TransferMatrix::scalar(f)
    }

    fn fig4() -> RealizationSystem {
        build_plant_controller(&scalar(RationalFunction::z_inv()), &scalar(c(q(1, 2)))).unwrap()
    }

    fn fig4_s() -> TransferMatrix {
        TransferMatrix::from_rows(vec![
            vec![rf(&[0, 2], &[-1, 2]), rf(&[2], &[-1, 2])],
            vec![rf(&[0, 1], &[-1, 2]), rf(&[0, 2], &[-1, 2])],
        ])
        .unwrap()
    }

    #[test]
    fn plant_controller_instantiation() {
        let sys = fig4();
        let expect = TransferMatrix::from_rows(vec![
            vec![RationalFunction::zero(), RationalFunction::z_inv()],
            vec![c(q(1, 2)), RationalFunction::zero()],
        ])
        .unwrap();
        assert_eq!(sys.r(), &expect);
        assert_eq!(sys.signals(), vec!["y", "u"]);
        let s = stability_matrix(&sys).unwrap();
        assert_eq!(s, fig4_s());
        assert!(verify_rs_identity(&sys, &s));
    }

    #[test]
    fn open_loop_and_zero_plant() {
        let g = scalar(rf(&[1], &[-1, 3]));
        let open = build_plant_controller(&g, &TransferMatrix::zeros(1, 1)).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![RationalFunction::one(), g.get(0, 0).clone()],
            vec![RationalFunction::zero(), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(stability_matrix(&open).unwrap(), expect);

        let k = scalar(c(qi(3)));
        let no_plant = build_plant_controller(&TransferMatrix::zeros(1, 1), &k).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![RationalFunction::one(), RationalFunction::zero()],
            vec![c(qi(3)), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(stability_matrix(&no_plant).unwrap(), expect);
    }

    #[test]
    fn improper_plant_rejected() {
        let g = scalar(RationalFunction::z());
        assert!(matches!(
            build_plant_controller(&g, &TransferMatrix::zeros(1, 1)),
            Err(Error::ImproperBlock(_))
        ));
        assert!(matches!(
            build_plant_controller(&TransferMatrix::zeros(1, 2), &TransferMatrix::zeros(1, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn state_feedback_loop_matrix() {
        let ss = StateSpace::state_feedback(
            QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
            QMatrix::from_ints(1, 1, &[1]).unwrap(),
        )
        .unwrap();
        let sys = build_state_feedback(&ss, &scalar(c(q(-1, 2)))).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![rf(&[-1, 2], &[2]), c(qi(-1))],
            vec![c(q(1, 2)), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(sys.loop_matrix(), expect);
        // the (x, x) block of R is improper, which is allowed
        assert!(!sys.r().get(0, 0).is_proper());
    }

    #[test]
    fn state_feedback_open_loop_is_block_triangular() {
        // A = 0, B = 1, K = 0 -> S = [[1/z, 1/z], [0, 1]]
        let ss = StateSpace::state_feedback(
            QMatrix::from_ints(1, 1, &[0]).unwrap(),
            QMatrix::from_ints(1, 1, &[1]).unwrap(),
        )
        .unwrap();
        let sys = build_state_feedback(&ss, &TransferMatrix::zeros(1, 1)).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![RationalFunction::z_inv(), RationalFunction::z_inv()],
            vec![RationalFunction::zero(), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(stability_matrix(&sys).unwrap(), expect);
    }

    #[test]
    fn sf_sls_realization() {
        let ss = StateSpace::state_feedback(
            QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
            QMatrix::from_ints(1, 1, &[1]).unwrap(),
        )
        .unwrap();
        let phi_x = scalar(RationalFunction::z_inv());
        let phi_u = scalar(rf(&[-1], &[0, 2]));
        let sys = build_sf_sls(&ss, &phi_x, &phi_u).unwrap();
        let expect = TransferMatrix::from_rows(vec![
            vec![rf(&[-1, 2], &[2]), c(qi(-1)), RationalFunction::zero()],
            vec![RationalFunction::zero(), RationalFunction::one(), c(q(1, 2))],
            vec![c(qi(-1)), RationalFunction::zero(), RationalFunction::one()],
        ])
        .unwrap();
        assert_eq!(sys.loop_matrix(), expect);
        let s = stability_matrix(&sys).unwrap();
        assert!(verify_rs_identity(&sys, &s));

        assert!(matches!(
            build_sf_sls(&ss, &scalar(RationalFunction::one()), &phi_u),
            Err(Error::NotStrictlyProper(_))
        ));
    }

    #[test]
    fn output_feedback_with_identity_measurement() {
        // C = I, D = 0: the y rows of S equal the x rows
        let ss = StateSpace::new(
            QMatrix::new(1, 1, vec![q(1, 2)]).unwrap(),
            QMatrix::from_ints(1, 1, &[1]).unwrap(),
            QMatrix::from_ints(1, 1, &[1]).unwrap(),
            QMatrix::from_ints(1, 1, &[0]).unwrap(),
        )
        .unwrap();
        let sys = build_output_feedback(&ss, &scalar(c(q(-1, 4)))).unwrap();
        let s = stability_matrix(&sys).unwrap();
        assert!(verify_rs_identity(&sys, &s));
        assert_eq!(s.block(2, 0).unwrap(), s.block(0, 0).unwrap());
    }

    #[test]
    fn zero_realization_and_algebraic_loop() {
        let blocks = vec![Block::new("a", 1), Block::new("b", 1)];
        let sys = RealizationSystem::new(TransferMatrix::zeros(2, 2), blocks.clone()).unwrap();
        assert_eq!(stability_matrix(&sys).unwrap(), TransferMatrix::identity(2));

        let one = RationalFunction::one();
        let zero = RationalFunction::zero();
        let r = TransferMatrix::from_rows(vec![vec![zero.clone(), one.clone()], vec![one, zero]]).unwrap();
        let sys = RealizationSystem::new(r, blocks).unwrap();
        assert_eq!(stability_matrix(&sys), Err(Error::NoStabilityMatrix));
    }

    #[test]
    fn identity_rejects_wrong_s() {
        let sys = fig4();
        let s = stability_matrix(&sys).unwrap();
        let bumped = s.checked_add(&TransferMatrix::identity(2)).unwrap();
        assert!(!verify_rs_identity(&sys, &bumped));
        assert!(!verify_rs_identity(&sys, &TransferMatrix::identity(3)));
    }

    #[test]
    fn transformations() {
        let sys = fig4();
        let s = stability_matrix(&sys).unwrap();

        let (same, s_same) = apply_transformation(&sys, &s, &Transformation::identity(2)).unwrap();
        assert_eq!(same.r(), sys.r());
        assert_eq!(s_same, s);

        let t = Transformation::new(
            TransferMatrix::from_rows(vec![
                vec![c(qi(2)), RationalFunction::zero()],
                vec![RationalFunction::zero(), RationalFunction::one()],
            ])
            .unwrap(),
        )
        .unwrap();
        let (eq, s_eq) = apply_transformation(&sys, &s, &t).unwrap();
        assert_eq!(s_eq, s.checked_mul(t.matrix()).unwrap());
        assert!(verify_rs_identity(&eq, &s_eq));
        assert_eq!(stability_matrix(&eq).unwrap(), s_eq);

        let (back, s_back) = apply_transformation(&eq, &s_eq, &t.inverse()).unwrap();
        assert_eq!(back.r(), sys.r());
        assert_eq!(s_back, s);

        assert_eq!(
            Transformation::new(TransferMatrix::zeros(2, 2)),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn scalar_perturbation_moves_pole() {
        // R̂ = a/z, Ŝ = z/(z - a); Δ = b/z gives z/(z - a - b)
        let (a, b) = (q(1, 3), q(1, 4));
        let r = scalar(RationalFunction::z_inv().scale(&a));
        let sys = RealizationSystem::new(r, vec![Block::new("x", 1)]).unwrap();
        let s_hat = stability_matrix(&sys).unwrap();
        assert_eq!(
            s_hat.get(0, 0),
            &canonicalize(Polynomial::z(), Polynomial::new(vec![-a.clone(), qi(1)])).unwrap()
        );
        let delta = AdditivePerturbation::infer(&sys, scalar(RationalFunction::z_inv().scale(&b))).unwrap();
        let s = perturbed_stability(&s_hat, &delta).unwrap();
        let expect = canonicalize(Polynomial::z(), Polynomial::new(vec![-(&a + &b), qi(1)])).unwrap();
        assert_eq!(s.get(0, 0), &expect);
        assert_eq!(direct_perturbed_stability(&sys, &delta).unwrap(), s);

        let zero = AdditivePerturbation::zero(&sys);
        assert_eq!(perturbed_stability(&s_hat, &zero).unwrap(), s_hat);
    }

    #[test]
    fn singular_perturbed_loop() {
        let s_hat = TransferMatrix::identity(1);
        assert_eq!(
            perturbed_stability_raw(&s_hat, &TransferMatrix::identity(1)),
            Err(Error::SingularPerturbedLoop)
        );
    }

    #[test]
    fn mask_enforced() {
        let sys = fig4();
        let d = TransferMatrix::from_rows(vec![
            vec![RationalFunction::zero(), RationalFunction::z_inv()],
            vec![RationalFunction::zero(), RationalFunction::zero()],
        ])
        .unwrap();
        assert!(AdditivePerturbation::new(&sys, d.clone(), BTreeSet::from([(0, 1)])).is_ok());
        assert!(AdditivePerturbation::new(&sys, d, BTreeSet::from([(1, 0)])).is_err());
    }

    #[test]
    fn offdiagonal_properness() {
        let sys = fig4();
        let proper = AdditivePerturbation::from_blocks(&sys, &[(0, 1, scalar(rf(&[1], &[1, 4])))]).unwrap();
        assert!(check_offdiagonal_properness(&sys, &proper));

        let z2 = scalar(RationalFunction::from_poly(Polynomial::from_ints(&[0, 0, 1])));
        let improper = AdditivePerturbation::from_blocks(&sys, &[(0, 1, z2)]).unwrap();
        assert!(!check_offdiagonal_properness(&sys, &improper));

        let ss = StateSpace::state_feedback(
            QMatrix::from_ints(2, 2, &[0, 1, 0, 0]).unwrap(),
            QMatrix::from_ints(2, 1, &[0, 1]).unwrap(),
        )
        .unwrap();
        let sf = build_state_feedback(&ss, &TransferMatrix::zeros(1, 2)).unwrap();
        assert!(check_offdiagonal_properness(&sf, &AdditivePerturbation::zero(&sf)));
    }

    #[test]
    fn user_constraints() {
        let sys = fig4();
        let s_hat = stability_matrix(&sys).unwrap();
        let delta = AdditivePerturbation::from_blocks(&sys, &[(0, 1, scalar(rf(&[1], &[0, 4])))]).unwrap();
        let stable_s = |_: &TransferMatrix, s: &TransferMatrix| crate::ratfun::stability_verdict(s).is_stable();
        let never = |_: &TransferMatrix, _: &TransferMatrix| false;
        assert!(satisfies_constraints(&sys, &s_hat, &delta, &[&stable_s]).unwrap());
        assert!(!satisfies_constraints(&sys, &s_hat, &delta, &[&stable_s, &never]).unwrap());
    }
}
