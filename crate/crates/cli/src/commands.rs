use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use realstab::error::Error;
use realstab::param::{
    coprime_from_gains, iop_margin, iop_verify, sls_of_controller, sls_of_from_controller, sls_of_from_gains,
    sls_of_margin, sls_of_verify, sls_sf_from_gain, sls_sf_robust, IopQuadruple, SlsOutputFeedback, SlsStateFeedback,
};
use realstab::ratfun::{
    freq_response, hinf_norm, matrix_poles, stability_verdict, Pole, QMatrix, StabilityVerdict, StateSpace,
    TransferMatrix,
};
use realstab::realization::{
    check_offdiagonal_properness, direct_perturbed_stability, perturbed_stability, stability_matrix,
    AdditivePerturbation, RealizationSystem,
};
use realstab::robust::{
    monte_carlo_certify, worst_case_delta, Certificate, CertificateKind, Checker, Nominal, ProbeOutcome,
    UncertaintySpec,
};

use crate::report::{read_input, sha256_hex, write_output, Report};
use crate::schema::{
    decode_iop, decode_q, decode_sls_of, decode_tm, decode_youla, encode_q, encode_tm, BlockRepr, DeltaFile, Entry,
    Gains, Parameterization, Payload, SystemFile, SystemKind,
};
use crate::{exit, verdict_code, CliError, Command, Family, MarginCondition, Output, SampleCondition, Target};

pub fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Analyze { system, output } => analyze(&system, &output),
        Command::Perturb { system, delta, output } => perturb(&system, &delta, &output),
        Command::Margin {
            system,
            condition,
            probe,
            output,
        } => margin(&system, condition, probe, &output),
        Command::Sample {
            system,
            radius,
            n,
            seed,
            condition,
            order,
            mask,
            output,
        } => sample(
            &system,
            radius,
            n as usize,
            seed,
            condition,
            order,
            mask.as_deref(),
            &output,
        ),
        Command::Freqresp {
            system,
            points,
            out,
            target,
        } => freqresp(&system, points, out.as_deref(), target),
        Command::Synthesize {
            system,
            family,
            gains,
            out,
            output,
        } => synthesize(&system, family, gains.as_deref(), &out, &output),
    }
}

fn load_system(path: &Path) -> Result<(SystemFile, String), CliError> {
    let (text, hash) = read_input(path)?;
    Ok((SystemFile::parse(&text)?, hash))
}

fn signals(sys: &RealizationSystem) -> Vec<BlockRepr> {
    sys.blocks()
        .iter()
        .map(|b| BlockRepr {
            label: b.label.clone(),
            size: b.size,
        })
        .collect()
}

/// Every distinct pole, largest modulus first.
fn pole_list(x: &TransferMatrix) -> Vec<Pole> {
    let mut poles: Vec<Pole> = matrix_poles(x).into_iter().map(Pole::from).collect();
    poles.sort_by(|a, b| {
        b.modulus
            .total_cmp(&a.modulus)
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    poles.dedup_by(|a, b| (a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-9);
    poles
}

fn fmt_pole(p: &Pole) -> String {
    if p.im == 0.0 {
        format!("{}", p.re)
    } else if p.im > 0.0 {
        format!("{}+{}i", p.re, p.im)
    } else {
        format!("{}{}i", p.re, p.im)
    }
}

fn fmt_poles(poles: &[Pole]) -> String {
    if poles.is_empty() {
        "none".into()
    } else {
        poles.iter().map(fmt_pole).collect::<Vec<_>>().join(", ")
    }
}

fn fmt_margin(m: f64) -> String {
    if m.is_infinite() {
        "inf".into()
    } else {
        format!("{m}")
    }
}

fn small_gain(x: &TransferMatrix) -> Result<(f64, f64), CliError> {
    let norm = hinf_norm(x)?;
    Ok((norm, if norm == 0.0 { f64::INFINITY } else { 1.0 / norm }))
}

#[derive(Serialize)]
struct AnalyzeDetails {
    kind: SystemKind,
    signals: Vec<BlockRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability_matrix: Option<crate::schema::MatrixRepr>,
    poles: Vec<Pole>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hinf_norm: Option<f64>,
}

fn analyze(path: &Path, output: &Output) -> Result<u8, CliError> {
    let started = Instant::now();
    let (file, hash) = load_system(path)?;
    let sys = file.realization()?;
    let (cert, details, code) = match stability_matrix(&sys) {
        Err(Error::NoStabilityMatrix) => (
            Certificate::pointwise(StabilityVerdict::singular(), "internal-stability"),
            AnalyzeDetails {
                kind: file.kind,
                signals: signals(&sys),
                stability_matrix: None,
                poles: Vec::new(),
                hinf_norm: None,
            },
            exit::NO_STABILITY_MATRIX,
        ),
        Err(e) => return Err(e.into()),
        Ok(s) => {
            let verdict = stability_verdict(&s);
            let (norm, margin) = if verdict.is_stable() {
                let (n, m) = small_gain(&s)?;
                (Some(n), m)
            } else {
                (None, 0.0)
            };
            let code = verdict_code(verdict.status);
            let mut cert = Certificate::pointwise(verdict, "internal-stability");
            cert.margin = margin;
            let details = AnalyzeDetails {
                kind: file.kind,
                signals: signals(&sys),
                stability_matrix: Some(encode_tm(&s)),
                poles: pole_list(&s),
                hinf_norm: norm,
            };
            (cert, details, code)
        }
    };
    let mut summary = String::new();
    let sig: Vec<String> = details
        .signals
        .iter()
        .map(|b| format!("{}:{}", b.label, b.size))
        .collect();
    writeln!(summary, "signals: {}", sig.join(" ")).unwrap();
    if code == exit::NO_STABILITY_MATRIX {
        writeln!(summary, "verdict: no stability matrix (I - R is singular)").unwrap();
    } else {
        writeln!(summary, "verdict: {}", cert.verdict.status).unwrap();
        writeln!(summary, "poles: {}", fmt_poles(&details.poles)).unwrap();
        if let Some(n) = details.hinf_norm {
            writeln!(summary, "hinf norm of S: {n}").unwrap();
        }
    }
    Report::new("analyze", vec![hash], cert, details, started, output).emit(output, &summary)?;
    Ok(code)
}

#[derive(Serialize)]
struct SlsSfDetails {
    defect: crate::schema::MatrixRepr,
    responses: crate::schema::MatrixRepr,
    verdict: StabilityVerdict,
}

#[derive(Serialize)]
struct PerturbDetails {
    signals: Vec<BlockRepr>,
    mask: Vec<(usize, usize)>,
    forms_agree: bool,
    direct_agrees: bool,
    agreement: bool,
    offdiagonal_proper: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturbed_stability_matrix: Option<crate::schema::MatrixRepr>,
    poles: Vec<Pole>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sls_sf: Option<SlsSfDetails>,
}

fn load_delta(sys: &RealizationSystem, file: &DeltaFile) -> Result<AdditivePerturbation, CliError> {
    if let Some(d) = &file.delta {
        return Ok(AdditivePerturbation::infer(sys, decode_tm(d, "delta")?)?);
    }
    let index = |label: &str| {
        sys.block_index(label)
            .ok_or_else(|| CliError::dimension(format!("no signal {label:?} in the system")))
    };
    let blocks = file
        .blocks
        .iter()
        .map(|b| Ok((index(&b.row)?, index(&b.col)?, decode_tm(&b.value, "delta block")?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(AdditivePerturbation::from_blocks(sys, &blocks)?)
}

fn same_entries(a: &TransferMatrix, b: &TransferMatrix) -> bool {
    a.shape() == b.shape() && a.entries() == b.entries()
}

/// Nominal state-feedback responses applied to `A + ΔA`, `B + ΔB` when
/// `Δ` is constant and confined to the plant rows.
fn sls_sf_section(file: &SystemFile, delta: &AdditivePerturbation) -> Option<SlsSfDetails> {
    if file.kind != SystemKind::SfSls || !delta.delta().is_static() {
        return None;
    }
    if delta.block_mask().iter().any(|&(bi, bj)| bi != 0 || bj > 1) {
        return None;
    }
    let ss = file.state_space().ok()?;
    let (n, m) = (ss.n(), ss.m());
    let d = delta.delta();
    let constant = |r0, nr, c0, nc| -> Option<QMatrix> {
        let block = d.submatrix(r0, nr, c0, nc).ok()?;
        let vals = block
            .entries()
            .iter()
            .map(|e| e.constant_value())
            .collect::<Option<Vec<_>>>()?;
        QMatrix::new(nr, nc, vals).ok()
    };
    let a = ss.a() + &constant(0, n, 0, n)?;
    let b = ss.b() + &constant(0, n, n, m)?;
    let ss_true = StateSpace::state_feedback(a, b).ok()?;
    let phi_x = decode_tm(file.payload.phi_x.as_ref()?, "phi_x").ok()?;
    let phi_u = decode_tm(file.payload.phi_u.as_ref()?, "phi_u").ok()?;
    let robust = sls_sf_robust(&ss_true, &phi_x, &phi_u).ok()?;
    Some(SlsSfDetails {
        defect: encode_tm(&robust.defect),
        responses: encode_tm(&robust.responses),
        verdict: robust.verdict,
    })
}

fn perturb(path: &Path, delta_path: &Path, output: &Output) -> Result<u8, CliError> {
    let started = Instant::now();
    let (file, hash) = load_system(path)?;
    let (dtext, dhash) = read_input(delta_path)?;
    let dfile = DeltaFile::parse(&dtext)?;
    let sys = file.realization()?;
    let s_hat = stability_matrix(&sys)?;
    let delta = load_delta(&sys, &dfile)?;
    let mut details = PerturbDetails {
        signals: signals(&sys),
        mask: delta.block_mask().iter().copied().collect(),
        forms_agree: true,
        direct_agrees: true,
        agreement: true,
        offdiagonal_proper: check_offdiagonal_properness(&sys, &delta),
        perturbed_stability_matrix: None,
        poles: Vec::new(),
        sls_sf: sls_sf_section(&file, &delta),
    };
    let hashes = vec![hash, dhash];
    let lemma = match perturbed_stability(&s_hat, &delta) {
        Ok(s) => Some(s),
        Err(Error::FormMismatch) => {
            details.forms_agree = false;
            None
        }
        Err(Error::SingularPerturbedLoop) => {
            let cert = Certificate::pointwise(StabilityVerdict::singular(), "additive-perturbation");
            let summary = "verdict: singular perturbed loop (I - Delta S is singular)\n";
            Report::new("perturb", hashes, cert, details, started, output).emit(output, summary)?;
            return Ok(exit::SINGULAR_LOOP);
        }
        Err(e) => return Err(e.into()),
    };
    let direct = direct_perturbed_stability(&sys, &delta)?;
    details.direct_agrees = lemma.as_ref().is_some_and(|s| same_entries(s, &direct));
    details.agreement = details.forms_agree && details.direct_agrees;
    let s = lemma.unwrap_or(direct);
    let verdict = stability_verdict(&s);
    details.poles = pole_list(&s);
    details.perturbed_stability_matrix = Some(encode_tm(&s));
    let code = if details.agreement {
        verdict_code(verdict.status)
    } else {
        exit::FAILED
    };

    let mut summary = String::new();
    writeln!(summary, "agreement: {}", details.agreement).unwrap();
    writeln!(summary, "verdict: {}", verdict.status).unwrap();
    writeln!(summary, "poles: {}", fmt_poles(&details.poles)).unwrap();
    if let Some(sf) = &details.sls_sf {
        writeln!(
            summary,
            "state-feedback responses on the perturbed plant: {}",
            sf.verdict.status
        )
        .unwrap();
    }
    let cert = Certificate::pointwise(verdict, "additive-perturbation");
    Report::new("perturb", hashes, cert, details, started, output).emit(output, &summary)?;
    Ok(code)
}

#[derive(Serialize, Default)]
struct ProbeDetails {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<crate::schema::MatrixRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    det: Option<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root_modulus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_distance: Option<f64>,
    singular_loop: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn probe(x: &TransferMatrix, epsilon: f64) -> Result<ProbeDetails, CliError> {
    let out = match worst_case_delta(x, epsilon) {
        Err(Error::InfiniteMargin) => {
            return Ok(ProbeDetails {
                status: "infinite-margin",
                reason: Some("no finite perturbation destabilizes the loop".into()),
                ..Default::default()
            })
        }
        other => other?,
    };
    let distance = out.boundary_distance();
    Ok(match out {
        ProbeOutcome::Witness {
            delta,
            omega,
            det,
            root,
        } => ProbeDetails {
            status: "witness",
            omega: Some(omega),
            delta: Some(encode_tm(&delta)),
            det: Some(Entry::from_rf(&det)),
            root: root.map(|r| [r.re, r.im]),
            root_modulus: root.map(|r| r.norm()),
            boundary_distance: distance,
            singular_loop: root.is_none(),
            reason: None,
        },
        ProbeOutcome::Inconclusive { omega, reason } => ProbeDetails {
            status: "inconclusive",
            omega: Some(omega),
            reason: Some(reason),
            ..Default::default()
        },
    })
}

#[derive(Serialize)]
struct MarginDetails {
    condition: &'static str,
    norm_of: &'static str,
    hinf_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<ProbeDetails>,
}

fn iop_blocks(file: &SystemFile) -> Result<Option<IopQuadruple>, CliError> {
    match &file.parameterization {
        Some(Parameterization::Iop(b)) => decode_iop(b).map(Some),
        _ => Ok(None),
    }
}

/// Plant of an IOP file: stored `G`, the state-space transfer, or `Y^-1 W`.
fn iop_plant(file: &SystemFile, quad: &IopQuadruple) -> Result<TransferMatrix, CliError> {
    if file.payload.g.is_some() || file.payload.a.is_some() {
        return file.plant();
    }
    Ok(quad.y.inverse()?.checked_mul(&quad.w)?)
}

fn sls_of_blocks(file: &SystemFile) -> Result<Option<(StateSpace, SlsOutputFeedback)>, CliError> {
    match &file.parameterization {
        Some(Parameterization::SlsOf(b)) => {
            let ss = file.state_space()?;
            let p = decode_sls_of(&ss, b)?;
            Ok(Some((ss, p)))
        }
        _ => Ok(None),
    }
}

fn margin(path: &Path, condition: MarginCondition, with_probe: bool, output: &Output) -> Result<u8, CliError> {
    let started = Instant::now();
    let (file, hash) = load_system(path)?;
    let (kind, tag, norm_of, target, margin) = match condition {
        MarginCondition::Cor3 => {
            let quad = iop_blocks(&file)?.ok_or_else(|| CliError::missing("system file carries no IOP blocks"))?;
            let g = iop_plant(&file, &quad)?;
            if !iop_verify(&g, &quad) {
                return Err(CliError::dimension("IOP blocks do not parameterize the plant"));
            }
            let m = iop_margin(&quad)?;
            (CertificateKind::SmallGainIop, "cor3", "U", quad.u, m)
        }
        MarginCondition::Cor8 => {
            let (ss, p) = sls_of_blocks(&file)?
                .ok_or_else(|| CliError::missing("system file carries no output-feedback SLS blocks"))?;
            if !sls_of_verify(&ss, &p) {
                return Err(CliError::dimension(
                    "SLS blocks do not satisfy the affine constraints for the plant",
                ));
            }
            let m = sls_of_margin(&p)?;
            (CertificateKind::SmallGainSlsOf, "cor8", "Phi", p.phi()?, m)
        }
    };
    let details = MarginDetails {
        condition: tag,
        norm_of,
        hinf_norm: hinf_norm(&target)?,
        probe: if with_probe {
            Some(probe(&target, margin)?)
        } else {
            None
        },
    };
    let mut summary = String::new();
    writeln!(summary, "margin: {}", fmt_margin(margin)).unwrap();
    writeln!(summary, "hinf norm of {norm_of}: {}", details.hinf_norm).unwrap();
    if let Some(p) = &details.probe {
        match p.status {
            "witness" => {
                let d = p.boundary_distance.unwrap_or(0.0);
                writeln!(
                    summary,
                    "probe: witness at omega = {}, ||root| - 1| = {d}",
                    p.omega.unwrap_or(0.0)
                )
                .unwrap();
            }
            _ => writeln!(summary, "probe: {}", p.reason.as_deref().unwrap_or(p.status)).unwrap(),
        }
    }
    let cert = Certificate::small_gain(kind, margin, StabilityVerdict::stable(), tag);
    Report::new("margin", vec![hash], cert, details, started, output).emit(output, &summary)?;
    Ok(exit::OK)
}

fn parse_mask(text: &str) -> Result<BTreeSet<(usize, usize)>, CliError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (r, c) = pair
                .split_once(',')
                .ok_or_else(|| CliError::parse(format!("mask entry {pair:?} is not row,col")))?;
            let p = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::parse(format!("bad mask index {s:?}")))
            };
            Ok((p(r)?, p(c)?))
        })
        .collect()
}

fn unstable_nominal() -> CliError {
    CliError::new(exit::UNSTABLE, "nominal closed loop is not stable")
}

fn nominal_for(file: &SystemFile, checker: Checker) -> Result<Nominal, CliError> {
    match checker {
        Checker::Direct => Ok(Nominal::realization(file.realization()?)?),
        Checker::IopLoop | Checker::IopReduced => {
            let (g, quad) = match iop_blocks(file)? {
                Some(quad) => (iop_plant(file, &quad)?, quad),
                None => {
                    let g = file.plant()?;
                    let k = file
                        .controller()?
                        .ok_or_else(|| CliError::missing("system file carries neither IOP blocks nor a controller"))?;
                    let quad = IopQuadruple::from_loop(&g, &k)?;
                    if !iop_verify(&g, &quad) {
                        return Err(unstable_nominal());
                    }
                    (g, quad)
                }
            };
            Nominal::iop(g, quad).map_err(|_| CliError::dimension("IOP blocks do not parameterize the plant"))
        }
        Checker::SlsOutput => {
            let (ss, p) = match sls_of_blocks(file)? {
                Some(sp) => sp,
                None => {
                    let ss = file.state_space()?;
                    let p = match (file.gain("F")?, file.gain("L")?, file.controller()?) {
                        (Some(f), Some(l), _) => sls_of_from_gains(&ss, &f, &l)?,
                        (_, _, Some(k)) => sls_of_from_controller(&ss, &k)?,
                        _ => {
                            return Err(CliError::missing(
                                "system file carries neither SLS blocks nor a controller",
                            ))
                        }
                    };
                    if !sls_of_verify(&ss, &p) {
                        return Err(unstable_nominal());
                    }
                    (ss, p)
                }
            };
            Nominal::sls_output(ss, p)
                .map_err(|_| CliError::dimension("SLS blocks do not satisfy the affine constraints"))
        }
    }
}

#[derive(Serialize)]
struct SampleDetails {
    condition: &'static str,
    mask: Vec<(usize, usize)>,
    delta_rows: Vec<BlockRepr>,
    delta_cols: Vec<BlockRepr>,
}

#[allow(clippy::too_many_arguments)]
fn sample(
    path: &Path,
    radius: f64,
    n: usize,
    seed: u64,
    condition: SampleCondition,
    order: usize,
    mask: Option<&str>,
    output: &Output,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let (file, hash) = load_system(path)?;
    let checker = match condition {
        SampleCondition::Lemma2Direct => Checker::Direct,
        SampleCondition::Cor3 => Checker::IopLoop,
        SampleCondition::Cor7 => Checker::SlsOutput,
        SampleCondition::Cor9 => Checker::IopReduced,
    };
    let nominal = nominal_for(&file, checker)?;
    let mask = match mask {
        Some(text) => parse_mask(text)?,
        None => nominal.default_mask(),
    };
    let spec = UncertaintySpec::new(mask.clone(), radius, order, seed)?;
    let cert = monte_carlo_certify(&nominal, &spec, n, checker)?;
    let stats = cert.sample_stats.clone().expect("monte-carlo certificates carry stats");
    let shape = nominal.delta_shape();
    let to_repr = |blocks: &[realstab::ratfun::Block]| {
        blocks
            .iter()
            .map(|b| BlockRepr {
                label: b.label.clone(),
                size: b.size,
            })
            .collect()
    };
    let details = SampleDetails {
        condition: checker.tag(),
        mask: mask.into_iter().collect(),
        delta_rows: to_repr(&shape.row_blocks),
        delta_cols: to_repr(&shape.col_blocks),
    };
    let mut summary = String::new();
    writeln!(
        summary,
        "condition: {} (analytic margin {})",
        checker.tag(),
        fmt_margin(cert.margin)
    )
    .unwrap();
    writeln!(
        summary,
        "samples: {} stable, {} marginal, {} unstable ({} singular) of {}",
        stats.n_stable, stats.n_marginal, stats.n_unstable, stats.n_singular, stats.n_samples
    )
    .unwrap();
    writeln!(
        summary,
        "worst sample: #{} with norm {}",
        stats.worst_sample_index, stats.worst_sample_norm
    )
    .unwrap();
    if !cert.soundness_violations.is_empty() {
        writeln!(summary, "soundness violations: {:?}", cert.soundness_violations).unwrap();
    }
    let code = if stats.n_stable == stats.n_samples {
        exit::OK
    } else {
        exit::FAILED
    };
    Report::new("sample", vec![hash], cert, details, started, output).emit(output, &summary)?;
    Ok(code)
}

fn freqresp(path: &Path, points: usize, out: Option<&Path>, target: Target) -> Result<u8, CliError> {
    if points < 2 {
        return Err(CliError::parse("--points must be at least 2"));
    }
    let (file, _) = load_system(path)?;
    let x = match target {
        Target::S => stability_matrix(&file.realization()?)?,
        Target::G => file.plant()?,
        Target::U => match nominal_for(&file, Checker::IopReduced)? {
            Nominal::Iop { quad, .. } => quad.u,
            _ => unreachable!("IOP checker yields an IOP nominal"),
        },
        Target::Phi => match nominal_for(&file, Checker::SlsOutput)? {
            Nominal::SlsOutput { p, .. } => p.phi()?,
            _ => unreachable!("SLS checker yields an SLS nominal"),
        },
    };
    let grid = freq_response(&x, points).map_err(|e| match e {
        Error::PoleOnGrid { omega } => CliError::new(
            exit::POLE_ON_GRID,
            format!("pole on the unit circle at omega = {omega}"),
        ),
        other => other.into(),
    })?;
    let k = grid[0].singular_values.len();
    let mut csv = String::from("omega");
    for i in 1..=k {
        write!(csv, ",sigma_{i}").unwrap();
    }
    csv.push('\n');
    for p in &grid {
        write!(csv, "{}", p.omega).unwrap();
        for s in &p.singular_values {
            write!(csv, ",{s}").unwrap();
        }
        csv.push('\n');
    }
    match out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(exit::OK)
}

fn parse_gains(arg: Option<&str>, hashes: &mut Vec<String>) -> Result<Option<Gains>, CliError> {
    let Some(arg) = arg else { return Ok(None) };
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            let (text, hash) = read_input(Path::new(path))?;
            hashes.push(hash);
            text
        }
        None => arg.to_string(),
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::parse(format!("invalid gains: {e}")))
}

fn require_gain(gains: &Gains, which: &str) -> Result<QMatrix, CliError> {
    let g = match which {
        "F" => &gains.f,
        "L" => &gains.l,
        _ => &gains.k,
    };
    decode_q(
        g.as_ref()
            .ok_or_else(|| CliError::missing(format!("gain {which} is required")))?,
        which,
    )
}

fn static_gain(file: &SystemFile, gains: &Gains) -> Result<QMatrix, CliError> {
    if gains.k.is_some() {
        return require_gain(gains, "K");
    }
    let k = file
        .controller()?
        .ok_or_else(|| CliError::missing("a static gain K is required"))?;
    let vals = k
        .entries()
        .iter()
        .map(|e| e.constant_value())
        .collect::<Option<Vec<_>>>();
    let vals = vals.ok_or_else(|| CliError::dimension("state-feedback SLS needs a static gain K"))?;
    Ok(QMatrix::new(k.rows(), k.cols(), vals)?)
}

fn state_payload(ss: &StateSpace, with_output: bool) -> Payload {
    Payload {
        a: Some(encode_q(ss.a())),
        b: Some(encode_q(ss.b())),
        c: with_output.then(|| encode_q(ss.c())),
        d: with_output.then(|| encode_q(ss.d())),
        ..Payload::default()
    }
}

/// Re-reads an emitted file and re-runs the family's verify operation.
fn self_check(text: &str, family: Family) -> Result<bool, CliError> {
    let file = SystemFile::parse(text)?;
    Ok(match (&file.parameterization, family) {
        (Some(Parameterization::Youla(b)), Family::Youla) => decode_youla(b)?.identity_holds(),
        (Some(Parameterization::Iop(b)), Family::Iop) => iop_verify(&file.plant()?, &decode_iop(b)?),
        (Some(Parameterization::SlsSf(b)), Family::SlsSf) => {
            let ss = file.state_space()?;
            let sls = SlsStateFeedback::new(&ss, decode_tm(&b.phi_x, "phi_x")?, decode_tm(&b.phi_u, "phi_u")?)?;
            sls.defect.is_zero() && file.realization().is_ok()
        }
        (Some(Parameterization::SlsOf(b)), Family::SlsOf) => {
            let ss = file.state_space()?;
            sls_of_verify(&ss, &decode_sls_of(&ss, b)?)
        }
        _ => false,
    })
}

#[derive(Serialize)]
struct SynthesizeDetails {
    family: &'static str,
    kind: SystemKind,
    output_sha256: String,
}

fn synthesize(
    path: &Path,
    family: Family,
    gains_arg: Option<&str>,
    out: &Path,
    output: &Output,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let (file, hash) = load_system(path)?;
    let mut hashes = vec![hash];
    let gains = match parse_gains(gains_arg, &mut hashes)? {
        Some(g) => g.or(&file.gains),
        None => file.gains.clone(),
    };
    let emitted = match family {
        Family::Youla => {
            let ss = file.state_space()?;
            let cf = coprime_from_gains(&ss, &require_gain(&gains, "F")?, &require_gain(&gains, "L")?)?;
            let mut f = file.clone();
            f.payload.k = Some(encode_tm(&cf.vr.checked_mul(&cf.ur.inverse()?)?));
            f.gains = gains.clone();
            f.parameterization = Some(Parameterization::youla(&cf));
            f
        }
        Family::Iop => {
            let g = file.plant()?;
            let k = match file.controller()? {
                Some(k) if gains.f.is_none() => k,
                _ => {
                    let ss = file.state_space()?;
                    let cf = coprime_from_gains(&ss, &require_gain(&gains, "F")?, &require_gain(&gains, "L")?)?;
                    cf.vr.checked_mul(&cf.ur.inverse()?)?
                }
            };
            let quad = IopQuadruple::from_loop(&g, &k)?;
            if !iop_verify(&g, &quad) {
                return Err(CliError::new(
                    exit::NOT_STABILIZING,
                    "controller does not stabilize the plant",
                ));
            }
            let mut f = SystemFile::new(
                SystemKind::PlantController,
                Payload {
                    g: Some(encode_tm(&g)),
                    k: Some(encode_tm(&k)),
                    ..Payload::default()
                },
            );
            f.parameterization = Some(Parameterization::iop(&quad));
            f
        }
        Family::SlsSf => {
            let ss = file.state_space()?;
            let k = static_gain(&file, &gains)?;
            let sls = sls_sf_from_gain(&ss, &k)?;
            let mut payload = state_payload(&ss, false);
            payload.phi_x = Some(encode_tm(&sls.phi_x));
            payload.phi_u = Some(encode_tm(&sls.phi_u));
            let mut f = SystemFile::new(SystemKind::SfSls, payload);
            f.gains = Gains {
                k: Some(encode_q(&k)),
                ..Gains::default()
            };
            f.parameterization = Some(Parameterization::sls_sf(&sls.phi_x, &sls.phi_u));
            f
        }
        Family::SlsOf => {
            let ss = file.state_space()?;
            let p = match (&gains.f, &gains.l) {
                (Some(_), Some(_)) => sls_of_from_gains(&ss, &require_gain(&gains, "F")?, &require_gain(&gains, "L")?)?,
                _ => {
                    let k = match file.controller()? {
                        Some(k) => k,
                        None => require_gain(&gains, "K")?.to_transfer(),
                    };
                    sls_of_from_controller(&ss, &k)?
                }
            };
            if !sls_of_verify(&ss, &p) {
                return Err(CliError::new(
                    exit::NOT_STABILIZING,
                    "controller does not stabilize the plant",
                ));
            }
            let mut payload = state_payload(&ss, true);
            payload.k = Some(encode_tm(&sls_of_controller(&p, ss.d())?));
            let mut f = SystemFile::new(SystemKind::OutputFeedback, payload);
            f.gains = gains.clone();
            f.parameterization = Some(Parameterization::sls_of(&p));
            f
        }
    };
    let text = emitted.to_json();
    if !self_check(&text, family)? {
        return Err(CliError::dimension("synthesized blocks failed re-verification"));
    }
    write_output(out, &text)?;
    let family_tag = emitted.parameterization.as_ref().map_or("", Parameterization::family);
    let details = SynthesizeDetails {
        family: family_tag,
        kind: emitted.kind,
        output_sha256: sha256_hex(text.as_bytes()),
    };
    let summary = format!(
        "wrote {} parameterization ({} blocks re-verified)\n",
        family_tag, family_tag
    );
    let cert = Certificate::pointwise(StabilityVerdict::stable(), family_tag);
    Report::new("synthesize", hashes, cert, details, started, output).emit(output, &summary)?;
    Ok(exit::OK)
}
