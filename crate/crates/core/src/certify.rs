//! Zariski-density evidence and assembled thinness certificates.
//!
//! The probes here are exact but one-sided: a full Burnside span, an empty
//! space of invariant bilinear forms, and a failed search for invariant
//! subspaces are all *evidence* for density of a matrix group, never a proof.
//! The certificate assembler is explicit about that distinction: computable
//! checks carry pass/fail status, geometric claims ride along as cited
//! theorems, and everything serializes to canonical JSON with exact numbers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bending::{BendingUnit, SearchTier};
use crate::forms::FormsError;
use crate::gps::{
    enumerate_words, AdjointTraceFieldReport, GpsError, TraceIntegralityRecord, ValidationRecord,
};
use crate::matrix::{kernel_basis, RowSpace, TowerMatrix};
use crate::numfield::{FieldElement, FieldTower, NumFieldError};
use crate::Rat;

use num_traits::{One, Zero};

/// Largest matrix size the invariant-subspace probe will attempt.
const PROBE_DIMENSION_BOUND: usize = 6;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("at least one generator is required")]
    EmptyGenerators,
    #[error("matrices of size {size} exceed the exact probe bound {bound}")]
    DimensionTooLarge { size: usize, bound: usize },
    #[error("certificate assembly is missing the `{0}` stage")]
    MissingStage(String),
    #[error("field arithmetic failed: {0}")]
    Field(#[from] NumFieldError),
    #[error("form computation failed: {0}")]
    Forms(#[from] FormsError),
    #[error("word enumeration failed: {0}")]
    Gps(#[from] GpsError),
}

/// Deepest tower frame among the generators; every product of generators
/// lives at or below it.
fn common_frame(generators: &[TowerMatrix]) -> (FieldTower, usize) {
    let mut deepest = &generators[0];
    for g in &generators[1..] {
        if g.level() > deepest.level() {
            deepest = g;
        }
    }
    (deepest.tower().clone(), deepest.level())
}

/// Dimension of the linear span of all words of length at most
/// `max_word_length` inside the full matrix space.
///
/// By Burnside's theorem the span of an absolutely irreducible matrix group
/// is the whole algebra, so hitting the full dimension at a finite word
/// length is irreducibility evidence. Enumeration stops early once the span
/// cannot grow further.
pub fn burnside_span(
    generators: &[TowerMatrix],
    max_word_length: usize,
) -> Result<usize, CertifyError> {
    if generators.is_empty() {
        return Err(CertifyError::EmptyGenerators);
    }
    let (tower, level) = common_frame(generators);
    let n = generators[0].size();
    let full = n * n;
    let mut span = RowSpace::new(&tower, level, full);
    for bound in 0..=max_word_length {
        for entry in enumerate_words(generators, bound)? {
            if entry.length == bound {
                span.insert(&entry.matrix.flattened())?;
            }
        }
        if span.dim() == full {
            break;
        }
    }
    Ok(span.dim())
}

#[derive(Debug, Clone)]
pub struct InvariantBilinearSpace {
    pub dimension: usize,
    /// Matrices spanning the solution space, one per kernel vector.
    pub basis: Vec<TowerMatrix>,
    pub symmetric_only: bool,
}

/// Solve `g^T X g = X` for all generators simultaneously, over the matrix
/// space or its symmetric part. The system is linear in `X`, so the solution
/// space comes out of one exact kernel computation. Isometry groups always
/// leave their Gram matrix here; a zero-dimensional answer means no nonzero
/// bilinear form is preserved.
pub fn invariant_bilinear_space(
    generators: &[TowerMatrix],
    symmetric_only: bool,
) -> Result<InvariantBilinearSpace, CertifyError> {
    if generators.is_empty() {
        return Err(CertifyError::EmptyGenerators);
    }
    let (tower, level) = common_frame(generators);
    let n = generators[0].size();
    // coordinate matrices spanning the candidate space
    let mut coords: Vec<TowerMatrix> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if symmetric_only && j < i {
                continue;
            }
            let mut rows = vec![vec![Rat::zero(); n]; n];
            rows[i][j] = Rat::one();
            if symmetric_only && i != j {
                rows[j][i] = Rat::one();
            }
            coords.push(TowerMatrix::from_rationals(&tower, level, &rows)?);
        }
    }
    let width = coords.len();
    let mut rows: Vec<Vec<FieldElement>> = Vec::new();
    for g in generators {
        let gt = g.transpose();
        let moved: Vec<Vec<FieldElement>> = coords
            .iter()
            .map(|b| Ok(gt.mul(b)?.mul(g)?.sub(b)?.flattened()))
            .collect::<Result<_, NumFieldError>>()?;
        for pos in 0..n * n {
            rows.push(moved.iter().map(|m| m[pos].clone()).collect());
        }
    }
    let kernel = kernel_basis(&tower, level, width, &rows)?;
    let mut basis = Vec::new();
    for vector in &kernel {
        let mut x = coords[0].scale(&vector[0])?;
        for (t, coeff) in vector.iter().enumerate().skip(1) {
            x = x.add(&coords[t].scale(coeff)?)?;
        }
        basis.push(x);
    }
    Ok(InvariantBilinearSpace { dimension: kernel.len(), basis, symmetric_only })
}

#[derive(Debug, Clone)]
pub struct SubspaceWitness {
    pub dimension: usize,
    /// Vectors spanning the invariant subspace.
    pub basis: Vec<Vec<FieldElement>>,
}

#[derive(Debug, Clone)]
pub struct SubspaceProbe {
    /// A proper nonzero invariant subspace, when one was found.
    pub witness: Option<SubspaceWitness>,
    /// Whether the probe actually ran (it is skipped above the size bound).
    pub searched: bool,
    pub note: String,
}

/// Search for a proper nonzero subspace invariant under every generator.
///
/// The probe is exact and one-sided. A common eigenvector of the generators
/// is killed by every pairwise commutator, so the search starts from the
/// intersection of the commutator kernels and shrinks it to its largest
/// generator-stable subspace. When the generators commute outright the probe
/// falls back to testing coordinate lines. A `None` witness is evidence of
/// irreducibility over every extension field reachable this way, not a proof.
pub fn invariant_subspace_probe(
    generators: &[TowerMatrix],
) -> Result<SubspaceProbe, CertifyError> {
    if generators.is_empty() {
        return Err(CertifyError::EmptyGenerators);
    }
    let n = generators[0].size();
    if n > PROBE_DIMENSION_BOUND {
        return Err(CertifyError::DimensionTooLarge { size: n, bound: PROBE_DIMENSION_BOUND });
    }
    let (tower, level) = common_frame(generators);
    let lifted: Vec<TowerMatrix> = generators
        .iter()
        .map(|g| g.lift_to(&tower, level))
        .collect::<Result<_, _>>()?;
    let mut constraint_rows: Vec<Vec<FieldElement>> = Vec::new();
    for (i, a) in lifted.iter().enumerate() {
        for b in &lifted[i + 1..] {
            let commutator = a.mul(b)?.sub(&b.mul(a)?)?;
            constraint_rows.extend(commutator.rows());
        }
    }
    let mut basis = kernel_basis(&tower, level, n, &constraint_rows)?;
    loop {
        if basis.is_empty() {
            return Ok(SubspaceProbe {
                witness: None,
                searched: true,
                note: "no nonzero subspace survives the commutator-kernel refinement \
                       (evidence of irreducibility, not a proof)"
                    .to_string(),
            });
        }
        let annihilator = kernel_basis(&tower, level, n, &basis)?;
        if annihilator.is_empty() {
            // the candidate is the whole space, which happens exactly when
            // the generators pairwise commute; settle for coordinate lines
            for pos in 0..n {
                let mut e = vec![tower.zero(level); n];
                e[pos] = tower.one(level);
                let mut fixed = true;
                for g in &lifted {
                    let image = g.mul_vector(&e)?;
                    let mut line = RowSpace::new(&tower, level, n);
                    line.insert(&e)?;
                    if line.insert(&image)? {
                        fixed = false;
                        break;
                    }
                }
                if fixed {
                    return Ok(SubspaceProbe {
                        witness: Some(SubspaceWitness { dimension: 1, basis: vec![e] }),
                        searched: true,
                        note: format!(
                            "coordinate line {pos} is invariant under every generator"
                        ),
                    });
                }
            }
            return Ok(SubspaceProbe {
                witness: None,
                searched: true,
                note: "the generators pairwise commute yet no coordinate line is \
                       invariant over the working field (evidence, not a proof)"
                    .to_string(),
            });
        }
        // refine to {x in W : g x in W for all g}; the annihilator functionals
        // pulled back through each generator cut exactly that subspace
        let mut rows = annihilator.clone();
        for g in &lifted {
            let gt = g.transpose();
            for functional in &annihilator {
                rows.push(gt.mul_vector(functional)?);
            }
        }
        let refined = kernel_basis(&tower, level, n, &rows)?;
        if refined.len() == basis.len() {
            let dimension = refined.len();
            return Ok(SubspaceProbe {
                witness: Some(SubspaceWitness { dimension, basis: refined }),
                searched: true,
                note: format!(
                    "invariant subspace of dimension {dimension} found inside the \
                     common commutator kernel"
                ),
            });
        }
        basis = refined;
    }
}

#[derive(Debug, Clone)]
pub struct DensityEvidence {
    pub burnside_dimension: usize,
    /// Full dimension of the ambient matrix space.
    pub ambient_dimension: usize,
    pub invariant_bilinear_dimension: usize,
    pub invariant_subspace: SubspaceProbe,
    pub word_length_used: usize,
}

/// Run the three density probes on one generator set. The bilinear solve
/// runs without the symmetry restriction, so a zero dimension rules out skew
/// invariant forms as well. Above the probe size bound the subspace search
/// is skipped and recorded as such rather than erroring out.
pub fn gather_density_evidence(
    generators: &[TowerMatrix],
    max_word_length: usize,
) -> Result<DensityEvidence, CertifyError> {
    if generators.is_empty() {
        return Err(CertifyError::EmptyGenerators);
    }
    let n = generators[0].size();
    let burnside = burnside_span(generators, max_word_length)?;
    let bilinear = invariant_bilinear_space(generators, false)?;
    let probe = if n <= PROBE_DIMENSION_BOUND {
        invariant_subspace_probe(generators)?
    } else {
        SubspaceProbe {
            witness: None,
            searched: false,
            note: format!(
                "subspace probe skipped: size {n} exceeds the exact search bound \
                 {PROBE_DIMENSION_BOUND}"
            ),
        }
    };
    Ok(DensityEvidence {
        burnside_dimension: burnside,
        ambient_dimension: n * n,
        invariant_bilinear_dimension: bilinear.dimension,
        invariant_subspace: probe,
        word_length_used: max_word_length,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    ByTheorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCheck {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
}

/// The serializable certificate: input echo, ordered checks, one summary
/// line. Field order is fixed, map keys sort themselves, and every number in
/// the document is exact, so equal reports serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub input: BTreeMap<String, String>,
    pub checks: Vec<ReportCheck>,
    pub summary: String,
}

/// Everything the pipeline produced, stage by stage. Absent required stages
/// are assembly errors; absent optional ones are reported inconclusive. A
/// failed unit search is carried as `Err` with its message so the stages
/// after it can be marked skipped rather than missing.
#[derive(Debug, Default)]
pub struct PipelineStages {
    pub input: BTreeMap<String, String>,
    pub instance_summary: String,
    pub validation: Option<ValidationRecord>,
    pub unit: Option<Result<BendingUnit, String>>,
    pub membership: Option<ValidationRecord>,
    pub centralizer: Option<ValidationRecord>,
    pub trace_integrality: Option<TraceIntegralityRecord>,
    pub trace_field: Option<AdjointTraceFieldReport>,
    pub density: Option<DensityEvidence>,
}

#[derive(Debug)]
pub struct ThinnessCertificate {
    pub input: BTreeMap<String, String>,
    pub instance_summary: String,
    pub unit_summary: String,
    pub checks: Vec<ReportCheck>,
    pub density: Option<DensityEvidence>,
    /// True when no check in the list carries a `fail` status.
    pub all_computable_passed: bool,
    pub summary: String,
}

impl ThinnessCertificate {
    /// Flatten into the serializable report. The instance and unit summaries
    /// ride along in the input echo under reserved keys.
    pub fn report(&self) -> CertificateReport {
        let mut input = self.input.clone();
        input.insert("instance_summary".to_string(), self.instance_summary.clone());
        input.insert("unit_summary".to_string(), self.unit_summary.clone());
        CertificateReport {
            schema_version: 1,
            input,
            checks: self.checks.clone(),
            summary: self.summary.clone(),
        }
    }
}

/// Human-readable name of a unit-search tier for witnesses and summaries.
pub fn tier_name(tier: SearchTier) -> &'static str {
    match tier {
        SearchTier::ContinuedFraction => "continued-fraction tier",
        SearchTier::BruteForce => "brute-force tier",
        SearchTier::Supplied => "supplied unit",
    }
}

/// Render a validation record as a single report check: pass with a count,
/// or fail with the offending sub-checks in the witness.
pub fn record_check(name: &str, record: &ValidationRecord) -> ReportCheck {
    if record.all_passed {
        ReportCheck {
            name: name.to_string(),
            status: CheckStatus::Pass,
            witness: Some(format!("{} checks passed", record.checks.len())),
            citation: None,
        }
    } else {
        let failures: Vec<String> = record
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        ReportCheck {
            name: name.to_string(),
            status: CheckStatus::Fail,
            witness: Some(failures.join("; ")),
            citation: None,
        }
    }
}

/// The fixed rendering of a stage that never ran because an earlier one
/// failed.
pub fn skipped_check(name: &str) -> ReportCheck {
    ReportCheck {
        name: name.to_string(),
        status: CheckStatus::Inconclusive,
        witness: Some("skipped: an upstream stage failed".to_string()),
        citation: None,
    }
}

fn density_checks(evidence: &DensityEvidence) -> Vec<ReportCheck> {
    let burnside_status = if evidence.burnside_dimension == evidence.ambient_dimension {
        CheckStatus::Pass
    } else {
        CheckStatus::Inconclusive
    };
    let subspace = match (&evidence.invariant_subspace.witness, evidence.invariant_subspace.searched)
    {
        (Some(w), _) => ReportCheck {
            name: "density_no_invariant_subspace".to_string(),
            status: CheckStatus::Fail,
            witness: Some(format!(
                "invariant subspace of dimension {} found: {}",
                w.dimension, evidence.invariant_subspace.note
            )),
            citation: None,
        },
        (None, true) => ReportCheck {
            name: "density_no_invariant_subspace".to_string(),
            status: CheckStatus::Pass,
            witness: Some(evidence.invariant_subspace.note.clone()),
            citation: None,
        },
        (None, false) => ReportCheck {
            name: "density_no_invariant_subspace".to_string(),
            status: CheckStatus::Inconclusive,
            witness: Some(evidence.invariant_subspace.note.clone()),
            citation: None,
        },
    };
    vec![
        ReportCheck {
            name: "density_burnside_span".to_string(),
            status: burnside_status,
            witness: Some(format!(
                "word span dimension {} of {} at word length {} (evidence, not proof)",
                evidence.burnside_dimension, evidence.ambient_dimension, evidence.word_length_used
            )),
            citation: None,
        },
        ReportCheck {
            name: "density_no_invariant_bilinear_form".to_string(),
            status: if evidence.invariant_bilinear_dimension == 0 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            witness: Some(format!(
                "invariant bilinear solution space has dimension {}",
                evidence.invariant_bilinear_dimension
            )),
            citation: None,
        },
        subspace,
    ]
}

fn by_theorem_items() -> Vec<ReportCheck> {
    vec![
        ReportCheck {
            name: "isomorphism_type_preserved".to_string(),
            status: CheckStatus::ByTheorem,
            witness: Some(
                "bending deforms the holonomy through discrete faithful representations, \
                 so the bent group stays isomorphic to the unbent group"
                    .to_string(),
            ),
            citation: Some(
                "Johnson & Millson, Deformation spaces associated to compact hyperbolic \
                 manifolds (1987); Benoist, Convexes divisibles I-IV"
                    .to_string(),
            ),
        },
        ReportCheck {
            name: "infinite_index_in_ambient_lattice".to_string(),
            status: CheckStatus::ByTheorem,
            witness: Some(
                "a bent subgroup of finite index would itself be a lattice, and the \
                 nontrivial bending family would contradict strong rigidity"
                    .to_string(),
            ),
            citation: Some("Mostow, Strong Rigidity of Locally Symmetric Spaces (1973)".to_string()),
        },
        ReportCheck {
            name: "ambient_lattice_non_arithmetic".to_string(),
            status: CheckStatus::ByTheorem,
            witness: Some(
                "interbreeding two non-similar quadratic forms produces a non-arithmetic \
                 ambient lattice"
                    .to_string(),
            ),
            citation: Some(
                "Gromov & Piatetski-Shapiro, Non-arithmetic groups in Lobachevsky spaces \
                 (1988)"
                    .to_string(),
            ),
        },
    ]
}

/// One-line tally of check statuses, ending in the overall verdict.
pub fn summarize(checks: &[ReportCheck], all_passed: bool) -> String {
    let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    format!(
        "{} pass, {} fail, {} inconclusive, {} by-theorem; {}",
        count(CheckStatus::Pass),
        count(CheckStatus::Fail),
        count(CheckStatus::Inconclusive),
        count(CheckStatus::ByTheorem),
        if all_passed { "all computable checks passed" } else { "at least one computable check failed" }
    )
}

/// Collate the pipeline stages into one certificate.
///
/// Required stages (validation, unit, membership, centralizer, trace
/// integrality) must be present unless an earlier stage already failed, in
/// which case the later ones are reported as skipped. The trace-field report
/// and density evidence are optional and reported inconclusive when absent.
/// Three geometric claims that no finite computation can settle are attached
/// with theorem citations.
pub fn assemble_thinness_certificate(
    stages: &PipelineStages,
) -> Result<ThinnessCertificate, CertifyError> {
    let validation = stages
        .validation
        .as_ref()
        .ok_or_else(|| CertifyError::MissingStage("validation".to_string()))?;
    let mut checks = vec![record_check("gps_validation", validation)];
    let mut upstream_failed = !validation.all_passed;

    let unit_summary = match &stages.unit {
        Some(Ok(unit)) => {
            checks.push(ReportCheck {
                name: "unit_certified".to_string(),
                status: CheckStatus::Pass,
                witness: Some(format!(
                    "{} ({}; norm {})",
                    unit.detail,
                    tier_name(unit.tier),
                    unit.norm_witness.norm
                )),
                citation: None,
            });
            format!("{} ({})", unit.detail, tier_name(unit.tier))
        }
        Some(Err(message)) => {
            checks.push(ReportCheck {
                name: "unit_certified".to_string(),
                status: CheckStatus::Fail,
                witness: Some(message.clone()),
                citation: None,
            });
            upstream_failed = true;
            format!("unit search failed: {message}")
        }
        None if upstream_failed => {
            checks.push(skipped_check("unit_certified"));
            "skipped".to_string()
        }
        None => return Err(CertifyError::MissingStage("unit".to_string())),
    };

    for (name, record) in [
        ("bending_membership", &stages.membership),
        ("centralizer_structure", &stages.centralizer),
    ] {
        match record {
            Some(r) => checks.push(record_check(name, r)),
            None if upstream_failed => checks.push(skipped_check(name)),
            None => return Err(CertifyError::MissingStage(name.to_string())),
        }
    }

    match &stages.trace_integrality {
        Some(record) => {
            if record.all_integral {
                checks.push(ReportCheck {
                    name: "trace_integrality".to_string(),
                    status: CheckStatus::Pass,
                    witness: Some(format!(
                        "all {} word traces up to length {} are algebraic integers",
                        record.words_checked, record.max_word_length
                    )),
                    citation: None,
                });
            } else {
                checks.push(ReportCheck {
                    name: "trace_integrality".to_string(),
                    status: CheckStatus::Fail,
                    witness: Some(format!(
                        "non-integral trace at word {}",
                        record.failures[0].0
                    )),
                    citation: None,
                });
            }
        }
        None if upstream_failed => checks.push(skipped_check("trace_integrality")),
        None => return Err(CertifyError::MissingStage("trace_integrality".to_string())),
    }

    match &stages.trace_field {
        Some(report) => checks.push(ReportCheck {
            name: "adjoint_trace_field".to_string(),
            status: if report.reaches_target { CheckStatus::Pass } else { CheckStatus::Inconclusive },
            witness: Some(report.note.clone()),
            citation: None,
        }),
        None => checks.push(ReportCheck {
            name: "adjoint_trace_field".to_string(),
            status: CheckStatus::Inconclusive,
            witness: Some(if upstream_failed {
                "skipped: an upstream stage failed".to_string()
            } else {
                "not computed".to_string()
            }),
            citation: None,
        }),
    }

    match &stages.density {
        Some(evidence) => checks.extend(density_checks(evidence)),
        None => checks.push(ReportCheck {
            name: "density_evidence".to_string(),
            status: CheckStatus::Inconclusive,
            witness: Some(if upstream_failed {
                "skipped: an upstream stage failed".to_string()
            } else {
                "no density probes were run (no generators supplied)".to_string()
            }),
            citation: None,
        }),
    }

    checks.extend(by_theorem_items());

    let all_computable_passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    let summary = summarize(&checks, all_computable_passed);
    Ok(ThinnessCertificate {
        input: stages.input.clone(),
        instance_summary: stages.instance_summary.clone(),
        unit_summary,
        checks,
        density: stages.density.clone(),
        all_computable_passed,
        summary,
    })
}

/// Canonical JSON for a certificate: struct fields in declaration order, map
/// keys sorted, every number exact, trailing newline. Identical certificates
/// serialize to identical bytes.
pub fn serialize_report(certificate: &ThinnessCertificate) -> String {
    render_report_json(&certificate.report())
}

/// Canonical JSON for a bare report, with the same byte-stability guarantee
/// as [`serialize_report`].
pub fn render_report_json(report: &CertificateReport) -> String {
    let mut text = serde_json::to_string_pretty(report)
        .expect("certificate reports contain only strings and integers");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bending::{
        bending_matrix, build_unitary_setup, certify_bending_in_su, certify_centralizer,
        find_bending_unit, UnitarySetup,
    };
    use crate::forms::{integral_entries, DiagonalForm};
    use crate::gps::{
        adjoint_trace_field_report, build_gps_instance, trace_integrality_sample, GpsInstance,
        GpsParameters, ValidationCheck,
    };
    use crate::Int;

    fn q(n: i64) -> Rat {
        Rat::from_integer(Int::from(n))
    }

    fn qq(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    fn canonical_instance() -> GpsInstance {
        build_gps_instance(&GpsParameters::canonical()).unwrap()
    }

    fn nonzero_entries(m: &TowerMatrix) -> usize {
        m.flattened().iter().filter(|e| !e.is_zero()).count()
    }

    /// The designated dense pair: the sampled first-form isometry with the
    /// most nonzero entries (first in generation order) and the bent letter
    /// c*s built from the first transported second-form isometry that stays
    /// integral while picking up an irrational entry.
    fn bent_pair(inst: &GpsInstance, setup: &UnitarySetup, c: &TowerMatrix) -> Vec<TowerMatrix> {
        let samples = inst.j1().sample_isometries(2, 4096).unwrap();
        let mut hat = samples[0].clone();
        let mut best = nonzero_entries(&hat);
        for m in &samples[1..] {
            let count = nonzero_entries(m);
            if count > best {
                best = count;
                hat = m.clone();
            }
        }
        let s = inst
            .j2()
            .sample_isometries(2, 60)
            .unwrap()
            .into_iter()
            .filter_map(|b| inst.transport_isometry(&b).ok())
            .find(|t| {
                integral_entries(t).all_integral
                    && t.flattened().iter().any(|e| e.minimal_level() > 0)
            })
            .expect("a transported isometry with irrational integral entries exists");
        let em = setup.extension().clone();
        let letter = c.lift_to(&em, 2).unwrap().mul(&s.lift_to(&em, 2).unwrap()).unwrap();
        vec![hat, letter]
    }

    fn canonical_bent_pair() -> Vec<TowerMatrix> {
        let inst = canonical_instance();
        let unit = find_bending_unit(inst.extension_field(), 16).unwrap();
        let setup = build_unitary_setup(&inst, &unit).unwrap();
        let c = bending_matrix(&setup, 3).unwrap();
        bent_pair(&inst, &setup, &c)
    }

    fn check<'a>(cert: &'a ThinnessCertificate, name: &str) -> &'a ReportCheck {
        cert.checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn burnside_span_counts_word_span_dimensions() {
        let tower = FieldTower::rationals();
        assert_eq!(burnside_span(&[], 3).unwrap_err(), CertifyError::EmptyGenerators);
        let identity = TowerMatrix::identity(&tower, 0, 4);
        assert_eq!(burnside_span(&[identity.clone()], 0).unwrap(), 1);
        assert_eq!(burnside_span(&[identity], 3).unwrap(), 1);
        // a diagonal generator: all words stay diagonal, and the three
        // distinct eigenvalue patterns span exactly three directions
        let diagonal = TowerMatrix::diagonal(vec![
            tower.rational(0, q(1)),
            tower.rational(0, q(2)),
            tower.rational(0, qq(1, 2)),
            tower.rational(0, q(1)),
        ])
        .unwrap();
        assert_eq!(burnside_span(&[diagonal], 6).unwrap(), 3);
    }

    #[test]
    fn burnside_span_is_monotone_and_conjugation_invariant() {
        let inst = canonical_instance();
        let gens = inst.j1().sample_isometries(2, 2).unwrap();
        let mut previous = 0;
        for bound in 0..=3 {
            let dim = burnside_span(&gens, bound).unwrap();
            assert!(dim >= previous, "span shrank from {previous} to {dim} at bound {bound}");
            previous = dim;
        }
        // conjugating the whole set is a change of basis and moves nothing
        let t = TowerMatrix::from_integers(
            inst.j1().tower(),
            0,
            &[&[1, 1, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 1, 1]],
        );
        let t_inv = t.inverse().unwrap();
        let conjugated: Vec<TowerMatrix> = gens
            .iter()
            .map(|g| t_inv.mul(g).unwrap().mul(&t).unwrap())
            .collect();
        assert_eq!(burnside_span(&conjugated, 3).unwrap(), previous);
    }

    #[test]
    fn invariant_bilinear_space_of_identity_and_isometries() {
        let tower = FieldTower::rationals();
        assert_eq!(
            invariant_bilinear_space(&[], true).unwrap_err(),
            CertifyError::EmptyGenerators
        );
        let identity = TowerMatrix::identity(&tower, 0, 3);
        let symmetric = invariant_bilinear_space(&[identity.clone()], true).unwrap();
        assert_eq!(symmetric.dimension, 6);
        assert_eq!(symmetric.basis.len(), 6);
        let general = invariant_bilinear_space(&[identity], false).unwrap();
        assert_eq!(general.dimension, 9);

        // enough sampled isometries of the first form preserve exactly the
        // line spanned by its Gram matrix (early samples share a block
        // structure and keep one extra form alive)
        let inst = canonical_instance();
        let gens = inst.j1().sample_isometries(2, 24).unwrap();
        let space = invariant_bilinear_space(&gens, true).unwrap();
        assert_eq!(space.dimension, 1);
        let gram = inst.j1().gram_matrix();
        let found = &space.basis[0];
        assert_eq!(
            gram.scale(found.entry(0, 0)).unwrap(),
            found.scale(gram.entry(0, 0)).unwrap()
        );
        for g in &gens {
            assert_eq!(&g.transpose().mul(found).unwrap().mul(g).unwrap(), found);
        }
        assert_eq!(found.transpose(), found.clone());
    }

    #[test]
    fn invariant_bilinear_space_matches_grid_enumeration() {
        // independent oracle: enumerate symmetric matrices over a small
        // integer grid, keep the invariant ones, and compare spans
        fn grid_dimension(gens: &[TowerMatrix], bound: i64) -> usize {
            let tower = FieldTower::rationals();
            let n = gens[0].size();
            let slots = n * (n + 1) / 2;
            let mut values = vec![-bound; slots];
            let mut span = RowSpace::new(&tower, 0, n * n);
            loop {
                let mut rows = vec![vec![Rat::zero(); n]; n];
                let mut t = 0;
                for i in 0..n {
                    for j in i..n {
                        rows[i][j] = q(values[t]);
                        rows[j][i] = q(values[t]);
                        t += 1;
                    }
                }
                let candidate = TowerMatrix::from_rationals(&tower, 0, &rows).unwrap();
                if gens.iter().all(|g| {
                    g.transpose().mul(&candidate).unwrap().mul(g).unwrap() == candidate
                }) {
                    span.insert(&candidate.flattened()).unwrap();
                }
                let mut pos = slots;
                while pos > 0 && values[pos - 1] == bound {
                    values[pos - 1] = -bound;
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                values[pos - 1] += 1;
            }
            span.dim()
        }

        let tower = FieldTower::rationals();
        let cases: Vec<(Vec<TowerMatrix>, i64)> = vec![
            (vec![TowerMatrix::identity(&tower, 0, 2)], 2),
            (
                DiagonalForm::from_integers(&tower, 0, &[1, -1])
                    .sample_isometries(3, 3)
                    .unwrap(),
                2,
            ),
            (
                DiagonalForm::from_integers(&tower, 0, &[1, 1, -1])
                    .sample_isometries(2, 4)
                    .unwrap(),
                1,
            ),
        ];
        for (gens, bound) in &cases {
            let space = invariant_bilinear_space(gens, true).unwrap();
            assert_eq!(grid_dimension(gens, *bound), space.dimension);
        }
    }

    #[test]
    fn invariant_bilinear_space_ignores_order_and_inversion() {
        let inst = canonical_instance();
        let mut gens = inst.j1().sample_isometries(2, 4).unwrap();
        let base = invariant_bilinear_space(&gens, true).unwrap().dimension;
        gens.reverse();
        assert_eq!(invariant_bilinear_space(&gens, true).unwrap().dimension, base);
        let inverted = gens.last().unwrap().inverse().unwrap();
        *gens.last_mut().unwrap() = inverted;
        assert_eq!(invariant_bilinear_space(&gens, true).unwrap().dimension, base);
    }

    #[test]
    fn bent_pair_density_evidence_is_clean() {
        let pair = canonical_bent_pair();
        // the designated hat generator has no zero entries at all
        assert_eq!(nonzero_entries(&pair[0]), 16);
        let evidence = gather_density_evidence(&pair, 5).unwrap();
        assert_eq!(evidence.burnside_dimension, 16);
        assert_eq!(evidence.ambient_dimension, 16);
        assert_eq!(evidence.invariant_bilinear_dimension, 0);
        assert!(evidence.invariant_subspace.witness.is_none());
        assert!(evidence.invariant_subspace.searched);
        assert_eq!(evidence.word_length_used, 5);
        // the symmetric restriction agrees
        assert_eq!(invariant_bilinear_space(&pair, true).unwrap().dimension, 0);
    }

    #[test]
    fn invariant_subspace_probe_finds_lines_and_blocks() {
        let tower = FieldTower::rationals();
        // everything fixes a line when nothing moves at all
        let identity = TowerMatrix::identity(&tower, 0, 4);
        let probe = invariant_subspace_probe(&[identity]).unwrap();
        let witness = probe.witness.unwrap();
        assert_eq!(witness.dimension, 1);
        assert!(!witness.basis[0][0].is_zero());

        // corner-embedded stabilizers share the first coordinate line
        let inst = canonical_instance();
        let blocks = inst.j1().restricted().sample_isometries(2, 6).unwrap();
        let mut pair = None;
        'outer: for (i, a) in blocks.iter().enumerate() {
            for b in &blocks[i + 1..] {
                if a.mul(b).unwrap() != b.mul(a).unwrap() {
                    pair = Some((a.clone(), b.clone()));
                    break 'outer;
                }
            }
        }
        let (a, b) = pair.expect("noncommuting block isometries exist");
        fn corner_embed(block: &TowerMatrix) -> TowerMatrix {
            let tower = block.tower().clone();
            let level = block.level();
            let n = block.size() + 1;
            let mut rows = vec![vec![tower.zero(level); n]; n];
            rows[0][0] = tower.one(level);
            for i in 0..block.size() {
                for j in 0..block.size() {
                    rows[i + 1][j + 1] = block.entry(i, j).clone();
                }
            }
            TowerMatrix::from_rows(rows).unwrap()
        }
        let gens = vec![corner_embed(&a), corner_embed(&b)];
        let probe = invariant_subspace_probe(&gens).unwrap();
        let witness = probe.witness.unwrap();
        assert!(witness.dimension < 4);
        let mut space = RowSpace::new(&tower, 0, 4);
        for v in &witness.basis {
            space.insert(v).unwrap();
        }
        assert_eq!(space.dim(), witness.dimension);
        let mut e0 = vec![tower.zero(0); 4];
        e0[0] = tower.one(0);
        assert!(!space.insert(&e0).unwrap(), "e0 must lie in the invariant subspace");
        for g in &gens {
            for v in &witness.basis {
                let image = g.mul_vector(v).unwrap();
                assert!(!space.insert(&image).unwrap(), "subspace is not invariant");
            }
        }

        // a plane rotation has no invariant line over the rationals
        let rotation = TowerMatrix::from_integers(&tower, 0, &[&[0, -1], &[1, 0]]);
        let probe = invariant_subspace_probe(&[rotation]).unwrap();
        assert!(probe.witness.is_none());
        assert!(probe.note.contains("evidence"));

        // a single shear keeps its axis
        let shear = TowerMatrix::from_integers(&tower, 0, &[&[1, 1], &[0, 1]]);
        let probe = invariant_subspace_probe(&[shear]).unwrap();
        assert_eq!(probe.witness.unwrap().dimension, 1);

        // refusals: empty input and oversized matrices
        assert_eq!(invariant_subspace_probe(&[]).unwrap_err(), CertifyError::EmptyGenerators);
        let big = TowerMatrix::identity(&tower, 0, 7);
        assert_eq!(
            invariant_subspace_probe(&[big]).unwrap_err(),
            CertifyError::DimensionTooLarge { size: 7, bound: 6 }
        );
    }

    #[test]
    fn thinness_certificate_collates_the_canonical_pipeline() {
        let inst = canonical_instance();
        let unit = find_bending_unit(inst.extension_field(), 16).unwrap();
        let setup = build_unitary_setup(&inst, &unit).unwrap();
        let c = bending_matrix(&setup, 3).unwrap();
        let membership = certify_bending_in_su(&setup, &c).unwrap();
        let centralizer = certify_centralizer(&c, inst.j1(), &[]).unwrap();
        let pair = bent_pair(&inst, &setup, &c);
        let density = gather_density_evidence(&pair, 5).unwrap();
        let trace = trace_integrality_sample(&pair, 2).unwrap();
        let mut trace_gens = pair.clone();
        trace_gens.push(c.lift_to(setup.extension(), 2).unwrap());
        let field_report =
            adjoint_trace_field_report(setup.hermitian(), &trace_gens, 2).unwrap();

        let mut input = BTreeMap::new();
        input.insert("alpha".to_string(), "1/1".to_string());
        input.insert("beta".to_string(), "2/1".to_string());
        input.insert("middles".to_string(), "1/1,1/1".to_string());
        input.insert("bend_power".to_string(), "3".to_string());
        let stages = PipelineStages {
            input: input.clone(),
            instance_summary: "forms <1,1,1,-1> and <2,1,1,-1> over the rationals".to_string(),
            validation: Some(inst.validation().clone()),
            unit: Some(Ok(unit)),
            membership: Some(membership),
            centralizer: Some(centralizer),
            trace_integrality: Some(trace),
            trace_field: Some(field_report),
            density: Some(density),
        };
        let cert = assemble_thinness_certificate(&stages).unwrap();
        assert!(cert.all_computable_passed);
        assert_eq!(check(&cert, "gps_validation").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "unit_certified").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "bending_membership").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "trace_integrality").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "adjoint_trace_field").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "density_burnside_span").status, CheckStatus::Pass);
        assert_eq!(
            check(&cert, "density_no_invariant_bilinear_form").status,
            CheckStatus::Pass
        );
        let cited: Vec<&ReportCheck> = cert
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::ByTheorem)
            .collect();
        assert_eq!(cited.len(), 3);
        assert!(cited.iter().all(|c| c.citation.is_some()));
        assert!(cited.iter().any(|c| c.citation.as_ref().unwrap().contains("Mostow")));
        assert!(cited
            .iter()
            .any(|c| c.citation.as_ref().unwrap().contains("Piatetski-Shapiro")));
        assert!(cert.summary.contains("0 fail"));

        // canonical serialization: byte-identical and round-tripping
        let text = serialize_report(&cert);
        assert_eq!(text, serialize_report(&cert));
        let parsed: CertificateReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, cert.report());
        assert_eq!(parsed.schema_version, 1);
        assert!(text.contains("\"by-theorem\""));
        assert!(text.contains("\"beta\": \"2/1\""));
    }

    #[test]
    fn certificate_assembly_reports_missing_and_failed_stages() {
        fn record(names: &[(&str, bool)]) -> ValidationRecord {
            ValidationRecord::from_checks(
                names
                    .iter()
                    .map(|(n, passed)| ValidationCheck {
                        name: n.to_string(),
                        passed: *passed,
                        detail: if *passed { String::new() } else { "wrong count".to_string() },
                    })
                    .collect(),
            )
        }

        let empty = PipelineStages::default();
        assert_eq!(
            assemble_thinness_certificate(&empty).unwrap_err(),
            CertifyError::MissingStage("validation".to_string())
        );

        // a failed unit search marks downstream stages skipped, not missing
        let stages = PipelineStages {
            instance_summary: "test instance".to_string(),
            validation: Some(record(&[("square_class", true), ("sign_pattern", true)])),
            unit: Some(Err("no unit within the bound".to_string())),
            ..Default::default()
        };
        let cert = assemble_thinness_certificate(&stages).unwrap();
        assert!(!cert.all_computable_passed);
        assert_eq!(check(&cert, "unit_certified").status, CheckStatus::Fail);
        assert_eq!(check(&cert, "bending_membership").status, CheckStatus::Inconclusive);
        assert!(check(&cert, "bending_membership")
            .witness
            .as_ref()
            .unwrap()
            .contains("skipped"));
        assert_eq!(check(&cert, "centralizer_structure").status, CheckStatus::Inconclusive);
        assert_eq!(check(&cert, "trace_integrality").status, CheckStatus::Inconclusive);
        assert_eq!(
            cert.checks.iter().filter(|c| c.status == CheckStatus::ByTheorem).count(),
            3
        );
        assert!(cert.unit_summary.contains("no unit within the bound"));

        // a failing validation skips the unit stage outright
        let stages = PipelineStages {
            validation: Some(record(&[("sign_pattern", false)])),
            ..Default::default()
        };
        let cert = assemble_thinness_certificate(&stages).unwrap();
        assert!(!cert.all_computable_passed);
        assert_eq!(check(&cert, "gps_validation").status, CheckStatus::Fail);
        assert!(check(&cert, "gps_validation")
            .witness
            .as_ref()
            .unwrap()
            .contains("sign_pattern: wrong count"));
        assert_eq!(check(&cert, "unit_certified").status, CheckStatus::Inconclusive);

        // a healthy unit with no density probes: inconclusive, nothing fails
        let base = FieldTower::rationals();
        let two = base.rational(0, q(2));
        let ell = base.adjoin_sqrt(&two, true).unwrap();
        let unit = find_bending_unit(&ell, 12).unwrap();
        let stages = PipelineStages {
            instance_summary: "degenerate".to_string(),
            validation: Some(record(&[("square_class", true)])),
            unit: Some(Ok(unit)),
            membership: Some(record(&[("unitary_gram", true)])),
            centralizer: Some(record(&[("block_scalar_structure", true)])),
            trace_integrality: Some(trace_integrality_sample(&[], 3).unwrap()),
            ..Default::default()
        };
        let cert = assemble_thinness_certificate(&stages).unwrap();
        assert!(cert.all_computable_passed);
        assert_eq!(check(&cert, "trace_integrality").status, CheckStatus::Pass);
        assert_eq!(check(&cert, "adjoint_trace_field").status, CheckStatus::Inconclusive);
        assert_eq!(
            check(&cert, "adjoint_trace_field").witness.as_deref(),
            Some("not computed")
        );
        assert_eq!(check(&cert, "density_evidence").status, CheckStatus::Inconclusive);
        assert!(cert.summary.contains("0 fail"));
    }
}
