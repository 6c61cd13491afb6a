use std::collections::BTreeSet;

use super::{sample_delta_at, Certificate, CertificateKind, Checker, DeltaShape, SampleStats, UncertaintySpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::param::{
    iop_margin, iop_robust_check, iop_verify, sls_of_margin, sls_of_robust_check, sls_of_verify, IopQuadruple,
    PlantPerturbation, SlsOutputFeedback,
};
use crate::ratfun::{
    hinf_norm, stability_verdict, Block, StabilityStatus, StabilityVerdict, StateSpace, TransferMatrix,
};
use crate::realization::{perturbed_stability_left, stability_matrix, RealizationSystem};

/// Nominal closed loop a Monte-Carlo run perturbs.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Nominal {
    /// A realization and its stability matrix; pairs with [`Checker::Direct`].
    Realization {
        sys: RealizationSystem,
        s_hat: TransferMatrix,
    },
    /// A plant and a verified IOP quadruple; pairs with
    /// [`Checker::IopLoop`] and [`Checker::IopReduced`].
    Iop { g: TransferMatrix, quad: IopQuadruple },
    /// A plant and verified output-feedback responses; pairs with
    /// [`Checker::SlsOutput`].
    SlsOutput { ss: StateSpace, p: SlsOutputFeedback },
}

impl Nominal {
    pub fn realization(sys: RealizationSystem) -> Result<Self> {
        let s_hat = stability_matrix(&sys)?;
        Ok(Nominal::Realization { sys, s_hat })
    }

    pub fn iop(g: TransferMatrix, quad: IopQuadruple) -> Result<Self> {
        if !iop_verify(&g, &quad) {
            return Err(Error::IdentityCheckFailed(
                "IOP quadruple does not parameterize the plant".into(),
            ));
        }
        Ok(Nominal::Iop { g, quad })
    }

    pub fn sls_output(ss: StateSpace, p: SlsOutputFeedback) -> Result<Self> {
        if !sls_of_verify(&ss, &p) {
            return Err(Error::IdentityCheckFailed(
                "output-feedback responses do not satisfy the affine constraints".into(),
            ));
        }
        Ok(Nominal::SlsOutput { ss, p })
    }

    pub fn supports(&self, checker: Checker) -> bool {
        matches!(
            (self, checker),
            (Nominal::Realization { .. }, Checker::Direct)
                | (Nominal::Iop { .. }, Checker::IopLoop | Checker::IopReduced)
                | (Nominal::SlsOutput { .. }, Checker::SlsOutput)
        )
    }

    /// Partition of the perturbation: the realization's own blocks, a single
    /// `Δ_G` block, or `[[ΔA, ΔB], [ΔC, ΔD]]` over rows `(x, y)` and
    /// columns `(x, u)`.
    pub fn delta_shape(&self) -> DeltaShape {
        match self {
            Nominal::Realization { sys, .. } => DeltaShape::square(sys.blocks().to_vec()),
            Nominal::Iop { g, .. } => DeltaShape::new(vec![Block::new("y", g.rows())], vec![Block::new("u", g.cols())]),
            Nominal::SlsOutput { ss, .. } => DeltaShape::new(
                vec![Block::new("x", ss.n()), Block::new("y", ss.p())],
                vec![Block::new("x", ss.n()), Block::new("u", ss.m())],
            ),
        }
    }

    /// Off-diagonal blocks of a realization, otherwise every block.
    pub fn default_mask(&self) -> BTreeSet<(usize, usize)> {
        let shape = self.delta_shape();
        match self {
            Nominal::Realization { .. } => shape.offdiagonal_mask(),
            _ => shape.full_mask(),
        }
    }
}

/// Small-gain radius below which `checker` guarantees stability: `1/||Ŝ||∞`,
/// `1/||U||∞` or `1/||Φ||∞`. A realization whose nominal `Ŝ` is not stable
/// has margin `0`.
pub fn analytic_margin(nominal: &Nominal, checker: Checker) -> Result<f64> {
    require_support(nominal, checker)?;
    match nominal {
        Nominal::Realization { s_hat, .. } => {
            if !stability_verdict(s_hat).is_stable() {
                return Ok(0.0);
            }
            let norm = hinf_norm(s_hat)?;
            Ok(if norm == 0.0 { f64::INFINITY } else { 1.0 / norm })
        }
        Nominal::Iop { quad, .. } => iop_margin(quad),
        Nominal::SlsOutput { p, .. } => sls_of_margin(p),
    }
}

fn require_support(nominal: &Nominal, checker: Checker) -> Result<()> {
    if nominal.supports(checker) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "condition {checker} does not apply to this nominal system"
        )))
    }
}

struct Outcome {
    norm: f64,
    verdict: StabilityVerdict,
    singular: bool,
}

fn evaluate(nominal: &Nominal, checker: Checker, delta: &TransferMatrix) -> Result<(StabilityVerdict, bool)> {
    let result = match (nominal, checker) {
        (Nominal::Realization { s_hat, .. }, _) => {
            perturbed_stability_left(s_hat, delta).map(|s| stability_verdict(&s))
        }
        (Nominal::Iop { g, quad }, Checker::IopLoop) => {
            let (p, m) = g.shape();
            let full = TransferMatrix::block_matrix(
                &[
                    vec![TransferMatrix::zeros(p, p), delta.clone()],
                    vec![TransferMatrix::zeros(m, p), TransferMatrix::zeros(m, m)],
                ],
                None,
            )?;
            perturbed_stability_left(&quad.as_matrix()?, &full).map(|s| stability_verdict(&s))
        }
        (Nominal::Iop { quad, .. }, _) => iop_robust_check(&quad.u, delta),
        (Nominal::SlsOutput { ss, p }, _) => {
            sls_of_robust_check(ss, p, &PlantPerturbation::from_stacked(ss, delta)?).map(|(_, v)| v)
        }
    };
    match result {
        Ok(v) => Ok((v, false)),
        Err(Error::SingularMatrix | Error::SingularPerturbedLoop) => Ok((StabilityVerdict::singular(), true)),
        Err(e) => Err(e),
    }
}

/// [`monte_carlo_certify_with`] using the default execution mode.
pub fn monte_carlo_certify(
    nominal: &Nominal,
    spec: &UncertaintySpec,
    n: usize,
    checker: Checker,
) -> Result<Certificate> {
    monte_carlo_certify_with(nominal, spec, n, checker, Execution::default())
}

/// Evaluates `checker` on samples `0..n` of the ball described by `spec`.
///
/// Samples are independent and aggregated in index order, so the
/// certificate does not depend on `exec`. Singular perturbed loops are
/// recorded per sample. A non-stable sample whose norm lies below the
/// analytic margin is listed in `soundness_violations`.
pub fn monte_carlo_certify_with(
    nominal: &Nominal,
    spec: &UncertaintySpec,
    n: usize,
    checker: Checker,
    exec: Execution,
) -> Result<Certificate> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    require_support(nominal, checker)?;
    let shape = nominal.delta_shape();
    shape.check_mask(&spec.block_mask)?;
    let margin = analytic_margin(nominal, checker)?;
    let outcomes = exec.map(n, |i| -> Result<Outcome> {
        let (delta, norm) = sample_delta_at(spec, &shape, i)?;
        let (verdict, singular) = evaluate(nominal, checker, &delta)?;
        Ok(Outcome {
            norm,
            verdict,
            singular,
        })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut stats = SampleStats {
        n_samples: n,
        n_stable: 0,
        n_marginal: 0,
        n_unstable: 0,
        n_singular: 0,
        worst_sample_norm: 0.0,
        worst_sample_index: 0,
        radius: spec.radius,
        sample_order: spec.sample_order,
    };
    let mut worst: Option<usize> = None;
    let mut violations = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        match o.verdict.status {
            StabilityStatus::Stable => stats.n_stable += 1,
            StabilityStatus::Marginal => stats.n_marginal += 1,
            StabilityStatus::Unstable | StabilityStatus::Improper => stats.n_unstable += 1,
        }
        stats.n_singular += usize::from(o.singular);
        if o.verdict.is_stable() {
            continue;
        }
        if o.norm < margin * (1.0 - 1e-6) {
            violations.push(i);
        }
        if worst.is_none_or(|w| o.norm < outcomes[w].norm) {
            worst = Some(i);
        }
    }
    let verdict = match worst {
        Some(w) => {
            stats.worst_sample_index = w;
            stats.worst_sample_norm = outcomes[w].norm;
            outcomes[w].verdict.clone()
        }
        None => {
            let (i, o) = outcomes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm.total_cmp(&b.1.norm).then(b.0.cmp(&a.0)))
                .expect("n >= 1");
            stats.worst_sample_index = i;
            stats.worst_sample_norm = o.norm;
            StabilityVerdict::stable()
        }
    };
    Ok(Certificate {
        kind: CertificateKind::MonteCarlo,
        margin,
        verdict,
        sample_stats: Some(stats),
        condition_ref: checker.tag().to_string(),
        seed: Some(spec.seed),
        soundness_violations: violations,
    })
}
