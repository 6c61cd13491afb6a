//! The `realstab/1` JSON schema for system, perturbation and report files.
//!
//! Coefficients are exact rationals written as `"p/q"` strings or integers.
//! A transfer-matrix entry is either a bare coefficient (a constant) or
//! `{"num": [...], "den": [...]}` with ascending coefficients in `z`.

use serde::{Deserialize, Serialize};

use realstab::param::{CoprimeFactorization, IopQuadruple, SlsOutputFeedback};
use realstab::ratfun::poly::{format_q, parse_q, Q};
use realstab::ratfun::{canonicalize, Block, Polynomial, QMatrix, RationalFunction, StateSpace, TransferMatrix};
use realstab::realization::{
    build_output_feedback, build_plant_controller, build_sf_sls, build_state_feedback, RealizationSystem,
};

use crate::CliError;

pub const VERSION_TAG: &str = "realstab/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Int(i64),
    Text(String),
}

impl Coeff {
    pub fn from_q(c: &Q) -> Self {
        Coeff::Text(format_q(c))
    }

    pub fn to_q(&self) -> Result<Q, CliError> {
        match self {
            Coeff::Int(v) => Ok(Q::from_integer((*v).into())),
            Coeff::Text(t) => parse_q(t).ok_or_else(|| CliError::parse(format!("invalid coefficient {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Constant(Coeff),
    Ratio {
        num: Vec<Coeff>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        den: Option<Vec<Coeff>>,
    },
}

fn poly(coeffs: &[Coeff]) -> Result<Polynomial, CliError> {
    Ok(Polynomial::new(
        coeffs.iter().map(Coeff::to_q).collect::<Result<_, _>>()?,
    ))
}

impl Entry {
    pub fn from_rf(f: &RationalFunction) -> Self {
        match f.constant_value() {
            Some(c) => Entry::Constant(Coeff::from_q(&c)),
            None => Entry::Ratio {
                num: f.num().coeffs().iter().map(Coeff::from_q).collect(),
                den: Some(f.den().coeffs().iter().map(Coeff::from_q).collect()),
            },
        }
    }

    pub fn to_rf(&self) -> Result<RationalFunction, CliError> {
        match self {
            Entry::Constant(c) => Ok(RationalFunction::constant(c.to_q()?)),
            Entry::Ratio { num, den } => {
                let den = match den {
                    Some(d) => poly(d)?,
                    None => Polynomial::one(),
                };
                canonicalize(poly(num)?, den).map_err(|_| CliError::parse("zero denominator polynomial"))
            }
        }
    }
}

pub type MatrixRepr = Vec<Vec<Entry>>;
pub type ConstRepr = Vec<Vec<Coeff>>;

fn check_rectangular<T>(rows: &[Vec<T>], what: &str) -> Result<usize, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::dimension(format!(
            "{what} must be a non-empty rectangular array"
        )));
    }
    Ok(cols)
}

pub fn decode_tm(m: &MatrixRepr, what: &str) -> Result<TransferMatrix, CliError> {
    check_rectangular(m, what)?;
    let rows = m
        .iter()
        .map(|r| r.iter().map(Entry::to_rf).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    TransferMatrix::from_rows(rows).map_err(|e| CliError::dimension(e.to_string()))
}

pub fn encode_tm(m: &TransferMatrix) -> MatrixRepr {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| Entry::from_rf(m.get(i, j))).collect())
        .collect()
}

pub fn decode_q(m: &ConstRepr, what: &str) -> Result<QMatrix, CliError> {
    check_rectangular(m, what)?;
    let rows = m
        .iter()
        .map(|r| r.iter().map(Coeff::to_q).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    QMatrix::from_rows(rows).map_err(|e| CliError::dimension(e.to_string()))
}

pub fn encode_q(m: &QMatrix) -> ConstRepr {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| Coeff::from_q(m.get(i, j))).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    PlantController,
    StateFeedback,
    SfSls,
    OutputFeedback,
    RawRealization,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ConstRepr>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ConstRepr>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<ConstRepr>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<ConstRepr>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MatrixRepr>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixRepr>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_u: Option<MatrixRepr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRepr {
    pub label: String,
    pub size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ConstRepr>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<ConstRepr>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<ConstRepr>,
}

impl Gains {
    pub fn is_empty(&self) -> bool {
        self.f.is_none() && self.l.is_none() && self.k.is_none()
    }

    /// Fields of `self`, falling back to `other`.
    pub fn or(&self, other: &Gains) -> Gains {
        Gains {
            f: self.f.clone().or_else(|| other.f.clone()),
            l: self.l.clone().or_else(|| other.l.clone()),
            k: self.k.clone().or_else(|| other.k.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoulaBlocks {
    #[serde(rename = "Ml")]
    pub ml: MatrixRepr,
    #[serde(rename = "Nl")]
    pub nl: MatrixRepr,
    #[serde(rename = "Vl")]
    pub vl: MatrixRepr,
    #[serde(rename = "Ul")]
    pub ul: MatrixRepr,
    #[serde(rename = "Ur")]
    pub ur: MatrixRepr,
    #[serde(rename = "Nr")]
    pub nr: MatrixRepr,
    #[serde(rename = "Vr")]
    pub vr: MatrixRepr,
    #[serde(rename = "Mr")]
    pub mr: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IopBlocks {
    #[serde(rename = "Y")]
    pub y: MatrixRepr,
    #[serde(rename = "W")]
    pub w: MatrixRepr,
    #[serde(rename = "U")]
    pub u: MatrixRepr,
    #[serde(rename = "Z")]
    pub z: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlsSfBlocks {
    pub phi_x: MatrixRepr,
    pub phi_u: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlsOfBlocks {
    pub phi_xx: MatrixRepr,
    pub phi_xy: MatrixRepr,
    pub phi_ux: MatrixRepr,
    pub phi_uy: MatrixRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "blocks", rename_all = "kebab-case")]
pub enum Parameterization {
    Youla(YoulaBlocks),
    Iop(IopBlocks),
    SlsSf(SlsSfBlocks),
    SlsOf(SlsOfBlocks),
}

impl Parameterization {
    pub fn family(&self) -> &'static str {
        match self {
            Parameterization::Youla(_) => "youla",
            Parameterization::Iop(_) => "iop",
            Parameterization::SlsSf(_) => "sls-sf",
            Parameterization::SlsOf(_) => "sls-of",
        }
    }

    pub fn youla(f: &CoprimeFactorization) -> Self {
        Parameterization::Youla(YoulaBlocks {
            ml: encode_tm(&f.ml),
            nl: encode_tm(&f.nl),
            vl: encode_tm(&f.vl),
            ul: encode_tm(&f.ul),
            ur: encode_tm(&f.ur),
            nr: encode_tm(&f.nr),
            vr: encode_tm(&f.vr),
            mr: encode_tm(&f.mr),
        })
    }

    pub fn iop(q: &IopQuadruple) -> Self {
        Parameterization::Iop(IopBlocks {
            y: encode_tm(&q.y),
            w: encode_tm(&q.w),
            u: encode_tm(&q.u),
            z: encode_tm(&q.z),
        })
    }

    pub fn sls_sf(phi_x: &TransferMatrix, phi_u: &TransferMatrix) -> Self {
        Parameterization::SlsSf(SlsSfBlocks {
            phi_x: encode_tm(phi_x),
            phi_u: encode_tm(phi_u),
        })
    }

    pub fn sls_of(p: &SlsOutputFeedback) -> Self {
        Parameterization::SlsOf(SlsOfBlocks {
            phi_xx: encode_tm(&p.phi_xx),
            phi_xy: encode_tm(&p.phi_xy),
            phi_ux: encode_tm(&p.phi_ux),
            phi_uy: encode_tm(&p.phi_uy),
        })
    }
}

pub fn decode_youla(b: &YoulaBlocks) -> Result<CoprimeFactorization, CliError> {
    Ok(CoprimeFactorization {
        ml: decode_tm(&b.ml, "Ml")?,
        nl: decode_tm(&b.nl, "Nl")?,
        vl: decode_tm(&b.vl, "Vl")?,
        ul: decode_tm(&b.ul, "Ul")?,
        ur: decode_tm(&b.ur, "Ur")?,
        nr: decode_tm(&b.nr, "Nr")?,
        vr: decode_tm(&b.vr, "Vr")?,
        mr: decode_tm(&b.mr, "Mr")?,
    })
}

pub fn decode_iop(b: &IopBlocks) -> Result<IopQuadruple, CliError> {
    IopQuadruple::new(
        decode_tm(&b.y, "Y")?,
        decode_tm(&b.w, "W")?,
        decode_tm(&b.u, "U")?,
        decode_tm(&b.z, "Z")?,
    )
    .map_err(CliError::from)
}

pub fn decode_sls_of(ss: &StateSpace, b: &SlsOfBlocks) -> Result<SlsOutputFeedback, CliError> {
    SlsOutputFeedback::with_plant(
        ss,
        decode_tm(&b.phi_xx, "phi_xx")?,
        decode_tm(&b.phi_xy, "phi_xy")?,
        decode_tm(&b.phi_ux, "phi_ux")?,
        decode_tm(&b.phi_uy, "phi_uy")?,
    )
    .map_err(CliError::from)
}

/// A `realstab/1` system file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub version: String,
    pub kind: SystemKind,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Gains::is_empty")]
    pub gains: Gains,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameterization: Option<Parameterization>,
}

/// A `realstab/1` perturbation file: a full `Δ` matching the host
/// realization, or a list of blocks placed into an otherwise zero `Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaFile {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocks: Vec<DeltaBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaBlock {
    /// Row signal label.
    pub row: String,
    /// Column signal label.
    pub col: String,
    pub value: MatrixRepr,
}

pub fn check_version(v: &str) -> Result<(), CliError> {
    if v == VERSION_TAG {
        Ok(())
    } else {
        Err(CliError::parse(format!(
            "unrecognized version tag {v:?}, expected {VERSION_TAG:?}"
        )))
    }
}

fn need<'a, T>(field: &'a Option<T>, name: &str, kind: SystemKind) -> Result<&'a T, CliError> {
    field
        .as_ref()
        .ok_or_else(|| CliError::dimension(format!("{kind:?} payload requires {name}")))
}

impl SystemFile {
    pub fn new(kind: SystemKind, payload: Payload) -> Self {
        SystemFile {
            version: VERSION_TAG.to_string(),
            kind,
            payload,
            gains: Gains::default(),
            parameterization: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| CliError::parse(e.to_string()))?;
        check_version(&file.version)?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// `(A, B, C, D)`; state-feedback kinds default to `C = I`, `D = 0`
    /// and output-feedback defaults `D = 0`.
    pub fn state_space(&self) -> Result<StateSpace, CliError> {
        let p = &self.payload;
        let a = decode_q(need(&p.a, "A", self.kind)?, "A")?;
        let b = decode_q(need(&p.b, "B", self.kind)?, "B")?;
        let ss = match (&p.c, self.kind) {
            (Some(c), _) => {
                let c = decode_q(c, "C")?;
                let d = match &p.d {
                    Some(d) => decode_q(d, "D")?,
                    None => QMatrix::zeros(c.rows(), b.cols()),
                };
                StateSpace::new(a, b, c, d)
            }
            (None, SystemKind::OutputFeedback) => {
                return Err(CliError::dimension("output-feedback payload requires C"))
            }
            (None, _) => StateSpace::state_feedback(a, b),
        };
        ss.map_err(CliError::from)
    }

    pub fn gain(&self, which: &str) -> Result<Option<QMatrix>, CliError> {
        let g = match which {
            "F" => &self.gains.f,
            "L" => &self.gains.l,
            _ => &self.gains.k,
        };
        g.as_ref().map(|m| decode_q(m, which)).transpose()
    }

    /// Dynamic controller from the payload, else the static gain `K`.
    pub fn controller(&self) -> Result<Option<TransferMatrix>, CliError> {
        if let Some(k) = &self.payload.k {
            return decode_tm(k, "K").map(Some);
        }
        Ok(self.gain("K")?.map(|k| k.to_transfer()))
    }

    /// Plant transfer matrix: `G` from the payload or `C(zI - A)^-1 B + D`.
    pub fn plant(&self) -> Result<TransferMatrix, CliError> {
        match &self.payload.g {
            Some(g) => decode_tm(g, "G"),
            None => Ok(self.state_space()?.transfer()?),
        }
    }

    pub fn realization(&self) -> Result<RealizationSystem, CliError> {
        let p = &self.payload;
        let missing_k = || CliError::dimension(format!("{:?} system requires a controller K", self.kind));
        let sys = match self.kind {
            SystemKind::PlantController => build_plant_controller(
                &decode_tm(need(&p.g, "G", self.kind)?, "G")?,
                &self.controller()?.ok_or_else(missing_k)?,
            ),
            SystemKind::StateFeedback => {
                build_state_feedback(&self.state_space()?, &self.controller()?.ok_or_else(missing_k)?)
            }
            SystemKind::SfSls => build_sf_sls(
                &self.state_space()?,
                &decode_tm(need(&p.phi_x, "phi_x", self.kind)?, "phi_x")?,
                &decode_tm(need(&p.phi_u, "phi_u", self.kind)?, "phi_u")?,
            ),
            SystemKind::OutputFeedback => {
                build_output_feedback(&self.state_space()?, &self.controller()?.ok_or_else(missing_k)?)
            }
            SystemKind::RawRealization => {
                let r = decode_tm(need(&p.r, "R", self.kind)?, "R")?;
                let blocks = match &p.blocks {
                    Some(b) => b.iter().map(|b| Block::new(b.label.clone(), b.size)).collect(),
                    None => (0..r.rows()).map(|i| Block::new(format!("s{i}"), 1)).collect(),
                };
                RealizationSystem::new(r, blocks)
            }
        };
        sys.map_err(CliError::from)
    }
}

impl DeltaFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: DeltaFile = serde_json::from_str(text).map_err(|e| CliError::parse(e.to_string()))?;
        check_version(&file.version)?;
        if file.delta.is_some() == !file.blocks.is_empty() {
            return Err(CliError::parse(
                "perturbation file needs exactly one of \"delta\" or \"blocks\"",
            ));
        }
        Ok(file)
    }
}
