//! Stage orchestration: build what the mode asks for, record every outcome
//! as a report check, and map failures to distinct exit codes. Every stage
//! is deterministic, so identical configurations produce byte-identical
//! reports.

use std::collections::BTreeMap;

use thinbend::bending::{
    bending_matrix, build_unitary_setup, certify_bending_in_su, certify_centralizer,
    find_bending_unit, BendingUnit, UnitarySetup,
};
use thinbend::certify::{
    assemble_thinness_certificate, gather_density_evidence, record_check, render_report_json,
    serialize_report, skipped_check, summarize, tier_name, CertificateReport, CheckStatus,
    PipelineStages, ReportCheck,
};
use thinbend::forms::integral_entries;
use thinbend::gps::{
    build_gps_instance, enumerate_commensurability_certificates, trace_integrality_sample,
    validate_gps_parameters, adjoint_trace_field_report, GpsError, GpsInstance, GpsParameters,
    ValidationRecord,
};
use thinbend::matrix::TowerMatrix;
use thinbend::numfield::{FieldElement, FieldTower};
use thinbend::rational_string;

use crate::config::{ExactValue, Mode, PipelineConfig};

/// Every computable check passed and the report was written.
pub const EXIT_OK: i32 = 0;
/// The configuration is unusable for the requested mode, so no report exists.
pub const EXIT_CONFIG: i32 = 1;
/// Field or parameter construction failed, or the parameters fail validation.
pub const EXIT_VALIDATION: i32 = 2;
/// The bending-unit search or the unitary setup failed.
pub const EXIT_UNIT_STAGE: i32 = 3;
/// A certification check failed downstream of a certified unit.
pub const EXIT_CERTIFICATION: i32 = 4;

/// How many corner-embedded hyperplane-stabilizer witnesses to test the
/// bending matrix against.
const CENTRALIZER_WITNESSES: usize = 3;
/// Sample pool scanned for the densest hyperplane-side generator.
const HAT_POOL: usize = 4096;
/// Sample pool scanned for a transportable bending letter.
const LETTER_POOL: usize = 60;
/// Word length for the adjoint-trace-field probe. The bending scalar's own
/// adjoint trace already lives at the deepest level, so short words suffice.
const TRACE_FIELD_WORDS: usize = 2;

/// What one run produced. The report is absent only when the run could not
/// produce one (mode-specific configuration errors).
#[derive(Debug)]
pub struct PipelineOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub report: Option<String>,
}

/// Run the configured mode and produce the canonical report document.
pub fn run_pipeline(config: &PipelineConfig) -> PipelineOutcome {
    if config.mode == Mode::Enumerate && config.enumerate_betas.is_empty() {
        return PipelineOutcome {
            exit_code: EXIT_CONFIG,
            summary: "enumerate mode needs a non-empty \"enumerate_betas\" list".to_string(),
            report: None,
        };
    }
    let input = input_echo(config);
    let field = match build_field(config) {
        Ok(f) => f,
        Err(message) => return hard_failure(input, "field_construction", message),
    };
    let params = match build_params(config, &field) {
        Ok(p) => p,
        Err(message) => return hard_failure(input, "parameter_construction", message),
    };
    match config.mode {
        Mode::Validate => run_validate(input, &params),
        Mode::Build => run_build(config, input, &params),
        Mode::Certify => run_certify(config, input, &params),
        Mode::Enumerate => run_enumerate(config, input, &field, &params),
    }
}

/// The sorted input echo every report carries. The output path is left out
/// on purpose: where a report is written must not change its bytes.
fn input_echo(config: &PipelineConfig) -> BTreeMap<String, String> {
    let mut input = BTreeMap::new();
    input.insert("mode".to_string(), config.mode.name().to_string());
    input.insert("alpha".to_string(), config.gps.alpha.render());
    input.insert("beta".to_string(), config.gps.beta.render());
    input.insert("middles".to_string(), render_list(&config.gps.middles));
    input.insert("last".to_string(), config.gps.last.render());
    input.insert("n".to_string(), config.gps.n.to_string());
    input.insert("unit_search_bound".to_string(), config.unit_search_bound.to_string());
    input.insert("max_word_length".to_string(), config.max_word_length.to_string());
    input.insert("sample_height".to_string(), config.generators.sample_height.to_string());
    input.insert("sample_count".to_string(), config.generators.sample_count.to_string());
    if let Some(base) = &config.base_field {
        let coeffs: Vec<String> = base.polynomial.iter().map(rational_string).collect();
        input.insert("base_polynomial".to_string(), format!("[{}]", coeffs.join(", ")));
        if !base.step_radicands.is_empty() {
            input.insert("step_radicands".to_string(), render_list(&base.step_radicands));
        }
        if let Some(root) = base.designated_root {
            input.insert("designated_root".to_string(), root.to_string());
        }
    }
    if !config.enumerate_betas.is_empty() {
        input.insert("enumerate_betas".to_string(), render_list(&config.enumerate_betas));
    }
    if !config.generators.inline.is_empty() {
        input.insert("inline_generators".to_string(), config.generators.inline.len().to_string());
    }
    input
}

fn render_list(values: &[ExactValue]) -> String {
    let inner: Vec<String> = values.iter().map(ExactValue::render).collect();
    format!("[{}]", inner.join(", "))
}

fn render_element(e: &FieldElement) -> String {
    let coords = e.coords();
    if coords.len() == 1 {
        rational_string(&coords[0])
    } else {
        let inner: Vec<String> = coords.iter().map(rational_string).collect();
        format!("[{}]", inner.join(", "))
    }
}

fn build_field(config: &PipelineConfig) -> Result<FieldTower, String> {
    let Some(base) = &config.base_field else {
        return Ok(FieldTower::rationals());
    };
    // degree equals the real-root count once total reality is verified
    let degree = base.polynomial.len() - 1;
    let mut field = FieldTower::make_base_field(&base.polynomial)
        .map_err(|e| format!("base polynomial rejected: {e}"))?;
    if let Some(index) = base.designated_root {
        if index >= degree {
            return Err(format!(
                "designated root index {index} is out of range for degree {degree}"
            ));
        }
        field = field.with_designated_root(index);
    }
    for (i, radicand) in base.step_radicands.iter().enumerate() {
        let elem = materialize(&field, radicand).map_err(|e| format!("step radicand {i}: {e}"))?;
        field = field
            .adjoin_sqrt(&elem, true)
            .map_err(|e| format!("step radicand {i} rejected: {e}"))?;
    }
    Ok(field)
}

fn materialize(field: &FieldTower, value: &ExactValue) -> Result<FieldElement, String> {
    let level = field.top_level();
    match value {
        ExactValue::Rational(r) => Ok(field.rational(level, r.clone())),
        ExactValue::Coordinates(coords) => field.element(level, coords.clone()).map_err(|_| {
            format!(
                "coordinate array of length {} does not match the field degree {}",
                coords.len(),
                field.degree(level)
            )
        }),
    }
}

fn build_params(config: &PipelineConfig, field: &FieldTower) -> Result<GpsParameters, String> {
    let get = |value: &ExactValue, name: &str| {
        materialize(field, value).map_err(|e| format!("{name}: {e}"))
    };
    let alpha = get(&config.gps.alpha, "alpha")?;
    let beta = get(&config.gps.beta, "beta")?;
    let mut middles = Vec::with_capacity(config.gps.middles.len());
    for (i, m) in config.gps.middles.iter().enumerate() {
        middles.push(get(m, &format!("middle coefficient {i}"))?);
    }
    let last = get(&config.gps.last, "last")?;
    GpsParameters::new(field, alpha, beta, middles, last)
        .map_err(|e| format!("parameters rejected: {e}"))
}

/// A run that cannot reach its mode's stages still writes a report: one
/// failed check naming what broke.
fn hard_failure(
    input: BTreeMap<String, String>,
    name: &str,
    message: String,
) -> PipelineOutcome {
    let checks = vec![fail_check(name, message)];
    finish(input, checks, EXIT_VALIDATION)
}

fn fail_check(name: &str, message: String) -> ReportCheck {
    ReportCheck {
        name: name.to_string(),
        status: CheckStatus::Fail,
        witness: Some(message),
        citation: None,
    }
}

/// Seal a direct (non-certificate) report and choose the exit code.
fn finish(
    input: BTreeMap<String, String>,
    checks: Vec<ReportCheck>,
    failure_exit: i32,
) -> PipelineOutcome {
    let all_passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    let summary = summarize(&checks, all_passed);
    let report = CertificateReport { schema_version: 1, input, checks, summary: summary.clone() };
    PipelineOutcome {
        exit_code: if all_passed { EXIT_OK } else { failure_exit },
        summary,
        report: Some(render_report_json(&report)),
    }
}

/// Validate mode: the arithmetic conditions as individual checks, nothing
/// else — in particular no unit search.
fn run_validate(input: BTreeMap<String, String>, params: &GpsParameters) -> PipelineOutcome {
    let record = validate_gps_parameters(params);
    let checks: Vec<ReportCheck> = record
        .checks
        .iter()
        .map(|c| ReportCheck {
            name: c.name.clone(),
            status: if c.passed { CheckStatus::Pass } else { CheckStatus::Fail },
            witness: Some(c.detail.clone()),
            citation: None,
        })
        .collect();
    finish(input, checks, EXIT_VALIDATION)
}

/// Everything from the unit search through the centralizer certificate.
/// The unit is carried per-stage so failures map to the right exit code.
struct BendingStage {
    unit: BendingUnit,
    setup: UnitarySetup,
    c: TowerMatrix,
    membership: ValidationRecord,
    centralizer: ValidationRecord,
}

fn bending_stage(config: &PipelineConfig, inst: &GpsInstance) -> Result<BendingStage, String> {
    let unit =
        find_bending_unit(inst.extension_field(), config.unit_search_bound).map_err(|e| e.to_string())?;
    let setup =
        build_unitary_setup(inst, &unit).map_err(|e| format!("unitary setup failed: {e}"))?;
    let c = bending_matrix(&setup, inst.params().n())
        .map_err(|e| format!("bending matrix construction failed: {e}"))?;
    let membership = certify_bending_in_su(&setup, &c)
        .map_err(|e| format!("membership certification failed: {e}"))?;
    let centralizer = centralizer_stage(config, inst, &c)
        .map_err(|e| format!("centralizer certification failed: {e}"))?;
    Ok(BendingStage { unit, setup, c, membership, centralizer })
}

/// Commutation witnesses: corner-embedded special isometries of the
/// restricted form. When the restricted form yields no integral reflections
/// at this height the structural check stands alone.
fn centralizer_stage(
    config: &PipelineConfig,
    inst: &GpsInstance,
    c: &TowerMatrix,
) -> Result<ValidationRecord, String> {
    let j1 = inst.j1();
    let mut witnesses = Vec::new();
    if let Ok(blocks) = j1
        .restricted()
        .sample_isometries(config.generators.sample_height, CENTRALIZER_WITNESSES)
    {
        for block in &blocks {
            witnesses.push(j1.hyperplane_stabilizer_member(block).map_err(|e| e.to_string())?);
        }
    }
    certify_centralizer(c, j1, &witnesses).map_err(|e| e.to_string())
}

fn unit_check(unit: &BendingUnit) -> ReportCheck {
    ReportCheck {
        name: "unit_certified".to_string(),
        status: CheckStatus::Pass,
        witness: Some(format!(
            "{} ({}; norm {})",
            unit.detail,
            tier_name(unit.tier),
            unit.norm_witness.norm
        )),
        citation: None,
    }
}

/// Build mode: instance, unit, setup, membership, centralizer — then stop.
fn run_build(
    config: &PipelineConfig,
    input: BTreeMap<String, String>,
    params: &GpsParameters,
) -> PipelineOutcome {
    let record = validate_gps_parameters(params);
    let mut checks = vec![record_check("gps_validation", &record)];
    if !record.all_passed {
        for name in ["unit_certified", "bending_membership", "centralizer_structure"] {
            checks.push(skipped_check(name));
        }
        return finish(input, checks, EXIT_VALIDATION);
    }
    let inst = match build_gps_instance(params) {
        Ok(i) => i,
        Err(e) => {
            checks.push(fail_check("instance_construction", e.to_string()));
            for name in ["unit_certified", "bending_membership", "centralizer_structure"] {
                checks.push(skipped_check(name));
            }
            return finish(input, checks, EXIT_VALIDATION);
        }
    };
    match bending_stage(config, &inst) {
        Ok(stage) => {
            checks.push(unit_check(&stage.unit));
            checks.push(record_check("bending_membership", &stage.membership));
            checks.push(record_check("centralizer_structure", &stage.centralizer));
            finish(input, checks, EXIT_CERTIFICATION)
        }
        Err(message) => {
            checks.push(fail_check("unit_certified", message));
            checks.push(skipped_check("bending_membership"));
            checks.push(skipped_check("centralizer_structure"));
            finish(input, checks, EXIT_UNIT_STAGE)
        }
    }
}

/// Certify mode: the full stage record collated into a thinness certificate.
fn run_certify(
    config: &PipelineConfig,
    input: BTreeMap<String, String>,
    params: &GpsParameters,
) -> PipelineOutcome {
    let record = validate_gps_parameters(params);
    let mut stages = PipelineStages {
        input,
        validation: Some(record.clone()),
        ..PipelineStages::default()
    };
    if !record.all_passed {
        return certify_outcome(stages, EXIT_VALIDATION, Vec::new());
    }
    let inst = match build_gps_instance(params) {
        Ok(i) => i,
        Err(e) => {
            stages.unit = Some(Err(format!("instance construction failed: {e}")));
            return certify_outcome(stages, EXIT_VALIDATION, Vec::new());
        }
    };
    stages.instance_summary = instance_summary(&inst);
    match bending_stage(config, &inst) {
        Err(message) => {
            stages.unit = Some(Err(message));
            certify_outcome(stages, EXIT_UNIT_STAGE, Vec::new())
        }
        Ok(stage) => {
            stages.unit = Some(Ok(stage.unit.clone()));
            stages.membership = Some(stage.membership.clone());
            stages.centralizer = Some(stage.centralizer.clone());
            match certify_stages(config, &inst, &stage, &mut stages) {
                Ok(inline_checks) => {
                    certify_outcome(stages, EXIT_CERTIFICATION, inline_checks)
                }
                // unreachable in practice: an arithmetic error after a
                // certified membership stage; report it as its own failure
                Err(message) => {
                    let mut checks = vec![record_check("gps_validation", &record)];
                    checks.push(unit_check(&stage.unit));
                    checks.push(record_check("bending_membership", &stage.membership));
                    checks.push(record_check("centralizer_structure", &stage.centralizer));
                    checks.push(fail_check("certification_arithmetic", message));
                    finish(stages.input, checks, EXIT_CERTIFICATION)
                }
            }
        }
    }
}

fn instance_summary(inst: &GpsInstance) -> String {
    let params = inst.params();
    let field = params.field();
    let ell = inst.extension_field();
    format!(
        "base field of degree {}; quadratic extension of absolute degree {}; forms of dimension {}",
        field.degree(field.top_level()),
        ell.degree(ell.top_level()),
        params.dimension()
    )
}

/// The bent pair fed to the word-level probes: the densest sampled
/// hyperplane-side generator, and the bending matrix times a letter.
struct BentPair {
    hat: TowerMatrix,
    letter: TowerMatrix,
    c: TowerMatrix,
}

/// Trace integrality, the adjoint-trace-field probe, and density evidence.
/// Returns the per-generator checks for inline matrices.
fn certify_stages(
    config: &PipelineConfig,
    inst: &GpsInstance,
    stage: &BendingStage,
    stages: &mut PipelineStages,
) -> Result<Vec<ReportCheck>, String> {
    let (inline_checks, pair) = bent_letter(config, inst, stage);
    match pair {
        Some(pair) => {
            let members = vec![pair.hat.clone(), pair.letter.clone()];
            stages.trace_integrality = Some(
                trace_integrality_sample(&members, config.max_word_length)
                    .map_err(|e| format!("trace integrality sampling failed: {e}"))?,
            );
            let form = stage.setup.hermitian();
            let mut with_scalar = members.clone();
            with_scalar.push(
                pair.c
                    .lift_to(form.tower(), form.level())
                    .map_err(|e| format!("lifting the bending matrix failed: {e}"))?,
            );
            stages.trace_field = Some(
                adjoint_trace_field_report(form, &with_scalar, TRACE_FIELD_WORDS)
                    .map_err(|e| format!("adjoint trace field probe failed: {e}"))?,
            );
            stages.density = Some(
                gather_density_evidence(&members, config.max_word_length)
                    .map_err(|e| format!("density probes failed: {e}"))?,
            );
        }
        None => {
            // no usable letter: word-level evidence from the bending matrix
            // alone; the optional probes stay absent and read inconclusive
            stages.trace_integrality = Some(
                trace_integrality_sample(&[stage.c.clone()], config.max_word_length)
                    .map_err(|e| format!("trace integrality sampling failed: {e}"))?,
            );
        }
    }
    Ok(inline_checks)
}

/// Pick the bending letter: inline matrices first (each one validated and
/// reported), then deterministically sampled isometries of the second form.
/// A letter must transport to an integral matrix that genuinely uses the
/// quadratic extension.
fn bent_letter(
    config: &PipelineConfig,
    inst: &GpsInstance,
    stage: &BendingStage,
) -> (Vec<ReportCheck>, Option<BentPair>) {
    let suitable = |m: &TowerMatrix| {
        integral_entries(m).all_integral && m.flattened().iter().any(|e| e.minimal_level() > 0)
    };

    let mut checks = Vec::new();
    let mut letter_source: Option<TowerMatrix> = None;
    for (i, rows) in config.generators.inline.iter().enumerate() {
        let name = format!("inline_generator_{i}");
        match inline_candidate(inst, rows) {
            Ok(transported) => {
                let usable = suitable(&transported);
                let witness = if usable && letter_source.is_none() {
                    "a special isometry of the second form; transported exactly and used as the bending letter"
                } else if usable {
                    "a special isometry of the second form; transported exactly"
                } else {
                    "valid, but its transport is not an integral extension-level matrix; not used as the bending letter"
                };
                if usable && letter_source.is_none() {
                    letter_source = Some(transported);
                }
                checks.push(ReportCheck {
                    name,
                    status: CheckStatus::Pass,
                    witness: Some(witness.to_string()),
                    citation: None,
                });
            }
            Err(reason) => checks.push(fail_check(&name, reason)),
        }
    }

    if letter_source.is_none() {
        if let Ok(samples) = inst
            .j2()
            .sample_isometries(config.generators.sample_height, LETTER_POOL)
        {
            letter_source = samples
                .iter()
                .filter_map(|b| inst.transport_isometry(b).ok())
                .find(suitable);
        }
    }
    let Some(s) = letter_source else {
        return (checks, None);
    };
    let Some(hat) = hat_generator(config, inst) else {
        return (checks, None);
    };
    let form = stage.setup.hermitian();
    let (tower, level) = (form.tower(), form.level());
    let pair = (|| {
        let hat = hat.lift_to(tower, level).ok()?;
        let letter = stage.c.lift_to(tower, level).ok()?.mul(&s.lift_to(tower, level).ok()?).ok()?;
        Some(BentPair { hat, letter, c: stage.c.clone() })
    })();
    (checks, pair)
}

/// The sampled first-form isometry with the most nonzero entries, earliest
/// in generation order on ties.
fn hat_generator(config: &PipelineConfig, inst: &GpsInstance) -> Option<TowerMatrix> {
    let samples = inst.j1().sample_isometries(config.generators.sample_height, HAT_POOL).ok()?;
    let nonzero = |m: &TowerMatrix| m.flattened().iter().filter(|e| !e.is_zero()).count();
    let mut best = samples.first()?.clone();
    let mut best_count = nonzero(&best);
    for m in &samples[1..] {
        let count = nonzero(m);
        if count > best_count {
            best_count = count;
            best = m.clone();
        }
    }
    Some(best)
}

fn inline_candidate(inst: &GpsInstance, rows: &[Vec<ExactValue>]) -> Result<TowerMatrix, String> {
    let field = inst.params().field();
    let mut matrix_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let mut out = Vec::with_capacity(row.len());
        for cell in row {
            out.push(materialize(field, cell)?);
        }
        matrix_rows.push(out);
    }
    let matrix = TowerMatrix::from_rows(matrix_rows).map_err(|e| format!("matrix rejected: {e}"))?;
    inst.transport_isometry(&matrix).map_err(|e| match e {
        GpsError::NotJ2Isometry => "not a special isometry of the second form".to_string(),
        other => format!("transport failed: {other}"),
    })
}

/// Collate certify-mode stages, splice in per-generator checks, and choose
/// the exit code.
fn certify_outcome(
    stages: PipelineStages,
    failure_exit: i32,
    inline_checks: Vec<ReportCheck>,
) -> PipelineOutcome {
    let mut certificate = assemble_thinness_certificate(&stages)
        .expect("all stages required by the mode are recorded before assembly");
    if !inline_checks.is_empty() {
        let position = certificate
            .checks
            .iter()
            .position(|c| c.name == "trace_integrality")
            .unwrap_or(certificate.checks.len());
        for (offset, check) in inline_checks.into_iter().enumerate() {
            certificate.checks.insert(position + offset, check);
        }
        certificate.all_computable_passed =
            certificate.checks.iter().all(|c| c.status != CheckStatus::Fail);
        certificate.summary =
            summarize(&certificate.checks, certificate.all_computable_passed);
    }
    PipelineOutcome {
        exit_code: if certificate.all_computable_passed { EXIT_OK } else { failure_exit },
        summary: certificate.summary.clone(),
        report: Some(serialize_report(&certificate)),
    }
}

/// Enumerate mode: one passing check per distinct quadratic extension, one
/// inconclusive check per rejected candidate.
fn run_enumerate(
    config: &PipelineConfig,
    input: BTreeMap<String, String>,
    field: &FieldTower,
    params: &GpsParameters,
) -> PipelineOutcome {
    let alpha = params.alpha();
    if alpha.is_zero() {
        return hard_failure(input, "parameter_construction", "alpha must be nonzero".to_string());
    }
    let mut betas = Vec::with_capacity(config.enumerate_betas.len());
    for (i, b) in config.enumerate_betas.iter().enumerate() {
        match materialize(field, b) {
            Ok(e) => betas.push(e),
            Err(e) => {
                return hard_failure(
                    input,
                    "parameter_construction",
                    format!("beta candidate {i}: {e}"),
                )
            }
        }
    }
    let report = match enumerate_commensurability_certificates(field, alpha, &betas) {
        Ok(r) => r,
        Err(e) => {
            return hard_failure(input, "parameter_construction", format!("enumeration failed: {e}"))
        }
    };
    let mut checks = Vec::new();
    for (k, class) in report.classes.iter().enumerate() {
        let members: Vec<String> =
            class.member_indices.iter().map(|i| format!("beta_{i}")).collect();
        checks.push(ReportCheck {
            name: format!("commensurability_class_{k}"),
            status: CheckStatus::Pass,
            witness: Some(format!(
                "radicand {}; members: {}",
                render_element(&class.radicand),
                members.join(", ")
            )),
            citation: None,
        });
    }
    for (idx, reason) in &report.skipped {
        checks.push(ReportCheck {
            name: format!("beta_candidate_{idx}"),
            status: CheckStatus::Inconclusive,
            witness: Some(format!("skipped: {reason}")),
            citation: None,
        });
    }
    let all_passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    let summary = format!(
        "{} distinct quadratic extension field(s) among {} candidate(s); {}",
        report.distinct_field_count(),
        config.enumerate_betas.len(),
        summarize(&checks, all_passed)
    );
    let document =
        CertificateReport { schema_version: 1, input, checks, summary: summary.clone() };
    PipelineOutcome {
        exit_code: if all_passed { EXIT_OK } else { EXIT_CERTIFICATION },
        summary,
        report: Some(render_report_json(&document)),
    }
}
