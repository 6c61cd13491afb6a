//! Norm-ball uncertainty sets, Monte-Carlo certification and the
//! worst-case tightness probe.
//!
//! Sampled perturbations are FIR blocks with exact rational coefficients,
//! so every per-sample verdict is computed in exact arithmetic. Sample `0`
//! is always `Δ = 0`; sample `i > 0` is drawn from a ChaCha8 stream seeded
//! with `seed + i`, which makes results independent of evaluation order.

mod certify;
mod probe;
mod sample;

pub use certify::{analytic_margin, monte_carlo_certify, monte_carlo_certify_with, Nominal};
pub use probe::{worst_case_delta, ProbeOutcome};
pub use sample::{sample_delta, sample_delta_at, COEFF_RESOLUTION, SCALE_RESOLUTION};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratfun::{Block, StabilityVerdict};

/// A norm ball `{Δ : ||Δ||∞ < radius}` restricted to the masked blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub block_mask: BTreeSet<(usize, usize)>,
    pub radius: f64,
    pub sample_order: usize,
    pub seed: u64,
}

impl UncertaintySpec {
    pub fn new(block_mask: BTreeSet<(usize, usize)>, radius: f64, sample_order: usize, seed: u64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        Ok(UncertaintySpec {
            block_mask,
            radius,
            sample_order,
            seed,
        })
    }
}

/// Row and column partition of the perturbation a checker expects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaShape {
    pub row_blocks: Vec<Block>,
    pub col_blocks: Vec<Block>,
}

impl DeltaShape {
    pub fn new(row_blocks: Vec<Block>, col_blocks: Vec<Block>) -> Self {
        DeltaShape { row_blocks, col_blocks }
    }

    /// Same partition on both sides, as for a realization matrix.
    pub fn square(blocks: Vec<Block>) -> Self {
        DeltaShape::new(blocks.clone(), blocks)
    }

    pub fn rows(&self) -> usize {
        self.row_blocks.iter().map(|b| b.size).sum()
    }

    pub fn cols(&self) -> usize {
        self.col_blocks.iter().map(|b| b.size).sum()
    }

    /// Every `(row_block, col_block)` pair.
    pub fn full_mask(&self) -> BTreeSet<(usize, usize)> {
        (0..self.row_blocks.len())
            .flat_map(|i| (0..self.col_blocks.len()).map(move |j| (i, j)))
            .collect()
    }

    /// Off-diagonal pairs, or the single block when there is only one.
    pub fn offdiagonal_mask(&self) -> BTreeSet<(usize, usize)> {
        let full = self.full_mask();
        if full.len() == 1 {
            return full;
        }
        full.into_iter().filter(|(i, j)| i != j).collect()
    }

    fn check_mask(&self, mask: &BTreeSet<(usize, usize)>) -> Result<()> {
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        let (nr, nc) = (self.row_blocks.len(), self.col_blocks.len());
        match mask.iter().find(|&&(i, j)| i >= nr || j >= nc) {
            Some((i, j)) => Err(Error::InvalidPartition(format!(
                "mask block ({i}, {j}) outside a {nr}x{nc} partition"
            ))),
            None => Ok(()),
        }
    }
}

/// Robust condition evaluated per sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Checker {
    /// `S(Δ)` of a realization by the additive-perturbation formula.
    #[serde(rename = "lemma2-direct")]
    Direct,
    /// Full plant/controller loop with `G + Δ_G`.
    #[serde(rename = "cor3")]
    IopLoop,
    /// `Ψ = (I - [[ΔA, ΔB], [ΔC, ΔD]] Φ)^-1` for output-feedback SLS.
    #[serde(rename = "cor7")]
    SlsOutput,
    /// `(I - Δ_G U)^-1` for an IOP quadruple.
    #[serde(rename = "cor9")]
    IopReduced,
}

impl Checker {
    pub const ALL: [Checker; 4] = [
        Checker::Direct,
        Checker::IopLoop,
        Checker::SlsOutput,
        Checker::IopReduced,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Checker::Direct => "lemma2-direct",
            Checker::IopLoop => "cor3",
            Checker::SlsOutput => "cor7",
            Checker::IopReduced => "cor9",
        }
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Checker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Checker::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown condition tag {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    #[serde(rename = "small-gain-iop")]
    SmallGainIop,
    #[serde(rename = "small-gain-sls-of")]
    SmallGainSlsOf,
    #[serde(rename = "pointwise")]
    Pointwise,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

/// Counts over a Monte-Carlo run.
///
/// Singular perturbed loops are counted as unstable and additionally
/// tallied in `n_singular`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n_samples: usize,
    pub n_stable: usize,
    pub n_marginal: usize,
    pub n_unstable: usize,
    pub n_singular: usize,
    /// Smallest norm among non-stable samples, else the largest norm sampled.
    pub worst_sample_norm: f64,
    pub worst_sample_index: usize,
    pub radius: f64,
    pub sample_order: usize,
}

/// Outcome of a robust stability analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(with = "margin_serde")]
    pub margin: f64,
    pub verdict: StabilityVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_stats: Option<SampleStats>,
    pub condition_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sample indices that were non-stable below the analytic margin.
    #[serde(default)]
    pub soundness_violations: Vec<usize>,
}

impl Certificate {
    /// A margin-only certificate.
    pub fn small_gain(kind: CertificateKind, margin: f64, verdict: StabilityVerdict, condition_ref: &str) -> Self {
        Certificate {
            kind,
            margin,
            verdict,
            sample_stats: None,
            condition_ref: condition_ref.to_string(),
            seed: None,
            soundness_violations: Vec::new(),
        }
    }

    /// A single-verdict certificate with no margin claim.
    pub fn pointwise(verdict: StabilityVerdict, condition_ref: &str) -> Self {
        Certificate::small_gain(CertificateKind::Pointwise, 0.0, verdict, condition_ref)
    }
}

/// Serializes non-finite margins as the strings `"inf"`, `"-inf"`, `"nan"`.
mod margin_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else if v.is_nan() {
            Repr::Text("nan".into()).serialize(s)
        } else if *v > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Text("-inf".into()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("invalid margin {other:?}"))),
            },
        }
    }
}
