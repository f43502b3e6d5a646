//! Interbreeding of arithmetic quadratic forms.
//!
//! Over a totally real field `K` with designated embedding, two diagonal
//! forms `J_1 = <alpha, a_2, ..., a_n, -a_{n+1}>` and
//! `J_2 = <beta, a_2, ..., a_n, -a_{n+1}>` are built from parameters chosen
//! so that each form has hyperbolic signature at the designated embedding
//! and is definite at every other one. When `beta/alpha` is not a square,
//! the two forms become isometric only over the quadratic extension
//! `L = K(sqrt(beta/alpha))`: the diagonal conjugator
//! `h = Diag(sqrt(beta/alpha), 1, ..., 1)` satisfies
//! `h^T G_1 h = G_2` and transports isometries of the second form into
//! generically irrational isometries of the first.
//!
//! [`validate_gps_parameters`] records every sign and squareness condition
//! with witnesses and never fails structurally; [`build_gps_instance`]
//! refuses invalid parameters. Word-level diagnostics (trace integrality,
//! adjoint traces and the field they generate) provide the exactly
//! checkable evidence used by downstream certificates.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::forms::{DiagonalForm, FormsError, HermitianForm};
use crate::matrix::TowerMatrix;
use crate::numfield::{FieldElement, FieldTower, NumFieldError, Sign};
use crate::Rat;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GpsError {
    #[error("parameters fail validation")]
    InvalidParameters,
    #[error("matrix is not a special isometry of the second form")]
    NotJ2Isometry,
    #[error("matrix is not an isometry of the form")]
    NotAnIsometry,
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Field(#[from] NumFieldError),
}

/// Parameters of the construction: `alpha`, `beta`, the middle coefficients
/// `a_2, ..., a_n`, and the final coefficient `a_{n+1}` that enters the
/// forms negated. All live at the top level of the field `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpsParameters {
    field: FieldTower,
    alpha: FieldElement,
    beta: FieldElement,
    middles: Vec<FieldElement>,
    last: FieldElement,
}

impl GpsParameters {
    pub fn new(
        field: &FieldTower,
        alpha: FieldElement,
        beta: FieldElement,
        middles: Vec<FieldElement>,
        last: FieldElement,
    ) -> Result<GpsParameters, GpsError> {
        assert!(!middles.is_empty(), "the construction needs at least one middle coefficient");
        let level = field.top_level();
        let lift = |e: FieldElement| e.lift_to(field, level).map_err(GpsError::Field);
        Ok(GpsParameters {
            field: field.clone(),
            alpha: lift(alpha)?,
            beta: lift(beta)?,
            middles: middles.into_iter().map(lift).collect::<Result<_, _>>()?,
            last: lift(last)?,
        })
    }

    /// The canonical rational instance: `K = Q`, `alpha = 1`, `beta = 2`,
    /// unit middle coefficients, `n = 3` (dimension-4 forms).
    pub fn canonical() -> GpsParameters {
        let q = FieldTower::rationals();
        GpsParameters::new(
            &q,
            q.integer(0, 1),
            q.integer(0, 2),
            vec![q.integer(0, 1), q.integer(0, 1)],
            q.integer(0, 1),
        )
        .expect("rational integers always lift")
    }

    pub fn field(&self) -> &FieldTower {
        &self.field
    }

    pub fn alpha(&self) -> &FieldElement {
        &self.alpha
    }

    pub fn beta(&self) -> &FieldElement {
        &self.beta
    }

    pub fn middles(&self) -> &[FieldElement] {
        &self.middles
    }

    pub fn last(&self) -> &FieldElement {
        &self.last
    }

    /// The `n` of the construction; the forms have dimension `n + 1`.
    pub fn n(&self) -> usize {
        self.middles.len() + 1
    }

    pub fn dimension(&self) -> usize {
        self.middles.len() + 2
    }
}

/// One validated condition, with a human-readable witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The full validation outcome; construction-level failures never panic,
/// they appear here as failed checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationRecord {
    pub checks: Vec<ValidationCheck>,
    pub all_passed: bool,
}

impl ValidationRecord {
    pub(crate) fn from_checks(checks: Vec<ValidationCheck>) -> ValidationRecord {
        let all_passed = checks.iter().all(|c| c.passed);
        ValidationRecord { checks, all_passed }
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Verify every arithmetic condition on the parameters: nonzero entries,
/// positivity at the designated embedding, non-squareness of `beta/alpha`,
/// and the sign patterns at the conjugate embeddings that make both forms
/// definite away from the designated place.
pub fn validate_gps_parameters(params: &GpsParameters) -> ValidationRecord {
    let field = &params.field;
    let level = field.top_level();
    // positive sign count required at the conjugate embeddings
    let required = field.degree(level) - 1;
    let mut checks = Vec::new();

    let mut named: Vec<(String, &FieldElement)> =
        vec![("alpha".to_string(), &params.alpha), ("beta".to_string(), &params.beta)];
    for (i, a) in params.middles.iter().enumerate() {
        named.push((format!("a_{}", i + 2), a));
    }
    named.push((format!("a_{}", params.dimension()), &params.last));

    let zero_names: Vec<&str> =
        named.iter().filter(|(_, e)| e.is_zero()).map(|(n, _)| n.as_str()).collect();
    let nonzero_ok = zero_names.is_empty();
    checks.push(ValidationCheck {
        name: "parameters_nonzero".into(),
        passed: nonzero_ok,
        detail: if nonzero_ok {
            "all coefficients are nonzero".into()
        } else {
            format!("zero coefficients: {}", zero_names.join(", "))
        },
    });
    if !nonzero_ok {
        for name in [
            "designated_embedding_positivity",
            "ratio_not_square",
            "definiteness_sign_counts",
        ] {
            checks.push(ValidationCheck {
                name: name.into(),
                passed: false,
                detail: "not evaluated: a zero coefficient is present".into(),
            });
        }
        return ValidationRecord::from_checks(checks);
    }

    let sigma0 = field.designated_embedding(level);
    let negative_at_sigma0: Vec<&str> = named
        .iter()
        .filter(|(_, e)| {
            e.certified_sign(&sigma0).map(|c| c.sign == Sign::Negative).unwrap_or(true)
        })
        .map(|(n, _)| n.as_str())
        .collect();
    let positivity_ok = negative_at_sigma0.is_empty();
    checks.push(ValidationCheck {
        name: "designated_embedding_positivity".into(),
        passed: positivity_ok,
        detail: if positivity_ok {
            "all coefficients are positive at the designated embedding".into()
        } else {
            format!("negative at the designated embedding: {}", negative_at_sigma0.join(", "))
        },
    });

    let ratio_check = params
        .beta
        .checked_div(&params.alpha)
        .and_then(|r| r.is_square());
    let (ratio_ok, ratio_detail) = match ratio_check {
        Ok(None) => (true, "beta/alpha is not a square, so the extension is quadratic".into()),
        Ok(Some(root)) => (
            false,
            format!("beta/alpha is the square of an element with coordinates {:?}",
                root.coords().iter().map(crate::rational_string).collect::<Vec<_>>()),
        ),
        Err(e) => (false, format!("ratio could not be formed: {e}")),
    };
    checks.push(ValidationCheck { name: "ratio_not_square".into(), passed: ratio_ok, detail: ratio_detail });

    let mut sign_failures = Vec::new();
    for (name, e) in &named {
        let want = if *name == format!("a_{}", params.dimension()) { 0 } else { required };
        match e.sign_count() {
            Ok(got) if got == want => {}
            Ok(got) => sign_failures.push(format!("{name}: positive at {got} conjugate embeddings, required {want}")),
            Err(err) => sign_failures.push(format!("{name}: {err}")),
        }
    }
    let signs_ok = sign_failures.is_empty();
    checks.push(ValidationCheck {
        name: "definiteness_sign_counts".into(),
        passed: signs_ok,
        detail: if signs_ok {
            format!(
                "all coefficients positive at all {required} conjugate embeddings, final coefficient negative at all of them"
            )
        } else {
            sign_failures.join("; ")
        },
    });

    ValidationRecord::from_checks(checks)
}

/// The two validated forms, the quadratic extension where they meet, and
/// the diagonal conjugator between them.
#[derive(Debug, Clone)]
pub struct GpsInstance {
    params: GpsParameters,
    validation: ValidationRecord,
    j1: DiagonalForm,
    j2: DiagonalForm,
    ell: FieldTower,
    h: TowerMatrix,
}

/// Validate the parameters and assemble the instance. The conjugation
/// identity `h^T G_1 h = G_2` is verified exactly before returning.
pub fn build_gps_instance(params: &GpsParameters) -> Result<GpsInstance, GpsError> {
    let validation = validate_gps_parameters(params);
    if !validation.all_passed {
        return Err(GpsError::InvalidParameters);
    }
    let ratio = params.beta.checked_div(&params.alpha)?;
    // valid parameters make the ratio totally positive
    let ell = params.field.adjoin_sqrt(&ratio, true)?;

    let mut coeffs1 = vec![params.alpha.clone()];
    coeffs1.extend(params.middles.iter().cloned());
    coeffs1.push(params.last.neg());
    let j1 = DiagonalForm::new(coeffs1)?;

    let mut coeffs2 = vec![params.beta.clone()];
    coeffs2.extend(params.middles.iter().cloned());
    coeffs2.push(params.last.neg());
    let j2 = DiagonalForm::new(coeffs2)?;

    let level = ell.top_level();
    let sqrt_ratio = ell.step_sqrt(level - 1);
    let mut diag = vec![sqrt_ratio];
    for _ in 1..params.dimension() {
        diag.push(ell.one(level));
    }
    let h = TowerMatrix::diagonal(diag)?;

    let g1 = j1.gram_matrix().lift_to(&ell, level)?;
    let g2 = j2.gram_matrix().lift_to(&ell, level)?;
    let transported = h.transpose().mul(&g1)?.mul(&h)?;
    assert_eq!(transported, g2, "the conjugation identity must hold for validated parameters");

    Ok(GpsInstance { params: params.clone(), validation, j1, j2, ell, h })
}

impl GpsInstance {
    pub fn params(&self) -> &GpsParameters {
        &self.params
    }

    pub fn validation(&self) -> &ValidationRecord {
        &self.validation
    }

    pub fn j1(&self) -> &DiagonalForm {
        &self.j1
    }

    pub fn j2(&self) -> &DiagonalForm {
        &self.j2
    }

    /// The quadratic extension `L = K(sqrt(beta/alpha))`.
    pub fn extension_field(&self) -> &FieldTower {
        &self.ell
    }

    /// The conjugator `h = Diag(sqrt(beta/alpha), 1, ..., 1)`.
    pub fn conjugator(&self) -> &TowerMatrix {
        &self.h
    }

    /// Conjugate a special isometry of the second form into one of the
    /// first, over the extension field.
    pub fn transport_isometry(&self, b: &TowerMatrix) -> Result<TowerMatrix, GpsError> {
        if b.size() != self.params.dimension() || !self.j2.is_special_isometry(b)?.passed {
            return Err(GpsError::NotJ2Isometry);
        }
        let transported = self.h.mul(b)?.mul(&self.h.inverse()?)?;
        debug_assert!(self.j1.is_special_isometry(&transported)?.passed);
        Ok(transported)
    }
}

/// A group word over the generators, its length, and its exact matrix.
#[derive(Debug, Clone)]
pub struct WordEntry {
    pub word: String,
    pub length: usize,
    pub matrix: TowerMatrix,
}

/// Breadth-first enumeration of all distinct words in the generators and
/// their inverses, up to the given length. Duplicate matrices keep their
/// first (shortest, then lexicographically earliest) word. The alphabet
/// order is `g1, ..., gk, g1^-1, ..., gk^-1`.
pub fn enumerate_words(
    generators: &[TowerMatrix],
    max_word_length: usize,
) -> Result<Vec<WordEntry>, GpsError> {
    assert!(!generators.is_empty(), "word enumeration needs at least one generator");
    let size = generators[0].size();
    if generators.iter().any(|g| g.size() != size) {
        return Err(GpsError::Field(NumFieldError::LevelMismatch));
    }
    let mut letters: Vec<(String, TowerMatrix)> = Vec::with_capacity(generators.len() * 2);
    for (i, g) in generators.iter().enumerate() {
        letters.push((format!("g{}", i + 1), g.clone()));
    }
    for (i, g) in generators.iter().enumerate() {
        letters.push((format!("g{}^-1", i + 1), g.inverse()?));
    }
    // promote everything to one common level so matrix keys are comparable
    let mut tower = generators[0].tower().clone();
    let mut level = generators[0].level();
    for (_, m) in &letters {
        if m.tower().top_level() > tower.top_level() {
            tower = m.tower().clone();
        }
        level = level.max(m.level());
    }
    let letters: Vec<(String, TowerMatrix)> = letters
        .into_iter()
        .map(|(w, m)| m.lift_to(&tower, level).map(|m| (w, m)))
        .collect::<Result<_, _>>()?;

    let identity = TowerMatrix::identity(&tower, level, size);
    let mut seen: BTreeSet<Vec<Rat>> = BTreeSet::new();
    seen.insert(matrix_key(&identity));
    let mut out = vec![WordEntry { word: "e".into(), length: 0, matrix: identity }];
    let mut frontier: Vec<usize> = vec![0];
    for length in 1..=max_word_length {
        let mut next_frontier = Vec::new();
        for &idx in &frontier {
            let (prefix, base) = (out[idx].word.clone(), out[idx].matrix.clone());
            for (label, m) in &letters {
                let product = base.mul(m)?;
                if seen.insert(matrix_key(&product)) {
                    let word =
                        if prefix == "e" { label.clone() } else { format!("{prefix}*{label}") };
                    next_frontier.push(out.len());
                    out.push(WordEntry { word, length, matrix: product });
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }
    Ok(out)
}

fn matrix_key(m: &TowerMatrix) -> Vec<Rat> {
    let mut key = Vec::new();
    for e in m.flattened() {
        key.extend(e.coords().iter().cloned());
    }
    key
}

/// Whether every enumerated word has an algebraic-integer trace.
#[derive(Debug, Clone)]
pub struct TraceIntegralityRecord {
    pub words_checked: usize,
    pub max_word_length: usize,
    pub all_integral: bool,
    /// Words whose trace is not an algebraic integer.
    pub failures: Vec<(String, FieldElement)>,
}

/// Check trace integrality for all words up to the given length. An empty
/// generator list yields a vacuously passing record.
pub fn trace_integrality_sample(
    generators: &[TowerMatrix],
    max_word_length: usize,
) -> Result<TraceIntegralityRecord, GpsError> {
    if generators.is_empty() {
        return Ok(TraceIntegralityRecord {
            words_checked: 0,
            max_word_length,
            all_integral: true,
            failures: Vec::new(),
        });
    }
    let words = enumerate_words(generators, max_word_length)?;
    let mut failures = Vec::new();
    for entry in &words {
        let trace = entry.matrix.trace();
        if !trace.is_algebraic_integer() {
            failures.push((entry.word.clone(), trace));
        }
    }
    Ok(TraceIntegralityRecord {
        words_checked: words.len(),
        max_word_length,
        all_integral: failures.is_empty(),
        failures,
    })
}

/// Basis of the Lie algebra of the form's isometry group: for each `i < j`
/// the matrix `E_ij - (g_i/g_j) E_ji`. The dimension is `m(m-1)/2` for an
/// `m`-dimensional form.
pub fn adjoint_basis(form: &DiagonalForm) -> Vec<TowerMatrix> {
    let m = form.dimension();
    let tower = form.tower().clone();
    let level = form.level();
    let g = form.coefficients();
    let mut basis = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let mut rows = vec![vec![tower.zero(level); m]; m];
            rows[i][j] = tower.one(level);
            rows[j][i] = g[i].checked_div(&g[j]).expect("coefficients nonzero").neg();
            basis.push(TowerMatrix::from_rows(rows).expect("one level"));
        }
    }
    basis
}

/// The trace of the adjoint action of an isometry on the Lie algebra,
/// computed two independent ways.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjointTrace {
    /// Sum of diagonal coefficients of `B E_k B^-1` over the explicit basis.
    pub via_basis: FieldElement,
    /// The exterior-square character `((tr B)^2 - tr(B^2)) / 2`.
    pub via_wedge_identity: FieldElement,
}

impl AdjointTrace {
    pub fn agree(&self) -> bool {
        self.via_basis == self.via_wedge_identity
    }

    pub fn value(&self) -> &FieldElement {
        &self.via_basis
    }
}

/// Compute the adjoint trace of `b` on the form's Lie algebra along both
/// paths. Requires `b^T G b = G` (the determinant may be -1; both
/// components act on the algebra).
pub fn adjoint_trace(form: &DiagonalForm, b: &TowerMatrix) -> Result<AdjointTrace, GpsError> {
    if b.size() != form.dimension() {
        return Err(GpsError::Forms(FormsError::DimensionMismatch));
    }
    let g = form.gram_matrix();
    let transformed = b.transpose().mul(&g)?.mul(b)?;
    let g_lifted = g.lift_to(transformed.tower(), transformed.level())?;
    if transformed != g_lifted {
        return Err(GpsError::NotAnIsometry);
    }

    let b_inv = b.inverse()?;
    let m = form.dimension();
    let mut via_basis = b.tower().zero(b.level());
    for (k, e) in adjoint_basis(form).iter().enumerate() {
        let conjugated = b.mul(e)?.mul(&b_inv)?;
        // the basis element for the pair (i, j) is the k-th in row-major
        // upper-triangular order; its coefficient in an algebra element is
        // the (i, j) entry
        let (i, j) = upper_pair(m, k);
        via_basis = via_basis.checked_add(conjugated.entry(i, j))?;
    }

    let t = b.trace();
    let t2 = b.mul(b)?.trace();
    let half = Rat::new(1.into(), 2.into());
    let via_wedge_identity = t.checked_mul(&t)?.checked_sub(&t2)?.scale(&half);

    Ok(AdjointTrace { via_basis, via_wedge_identity })
}

fn upper_pair(m: usize, k: usize) -> (usize, usize) {
    let mut count = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            if count == k {
                return (i, j);
            }
            count += 1;
        }
    }
    unreachable!("basis index out of range");
}

/// Word-by-word evidence about the field generated by unitary adjoint
/// traces `tr(w) conj(tr(w)) - 1`. Each value is fixed by the step
/// conjugation, so it lives at least one level below the matrices; the
/// report tracks the deepest level any word attains.
#[derive(Debug, Clone)]
pub struct AdjointTraceFieldReport {
    pub words_checked: usize,
    pub max_word_length: usize,
    /// Deepest minimal level attained by an adjoint trace.
    pub max_level_attained: usize,
    /// Level the evidence is measured against (one below the matrices).
    pub target_level: usize,
    /// Word achieving `max_level_attained`, when any word was checked.
    pub witness_word: Option<String>,
    /// True when some adjoint trace genuinely needs the target level.
    pub reaches_target: bool,
    pub note: String,
}

/// For every word in the generators, compute the unitary adjoint character
/// `tr(w) conj(tr(w)) - 1` and find the smallest tower level containing it.
/// Generators must be special unitary for the Hermitian form.
pub fn adjoint_trace_field_report(
    form: &HermitianForm,
    generators: &[TowerMatrix],
    max_word_length: usize,
) -> Result<AdjointTraceFieldReport, GpsError> {
    for g in generators {
        if !form.is_special_unitary(g)?.passed {
            return Err(GpsError::NotAnIsometry);
        }
    }
    let target_level = form.level() - 1;
    if generators.is_empty() {
        return Ok(AdjointTraceFieldReport {
            words_checked: 0,
            max_word_length,
            max_level_attained: 0,
            target_level,
            witness_word: None,
            reaches_target: false,
            note: "no generators; inconclusive".into(),
        });
    }
    let words = enumerate_words(generators, max_word_length)?;
    let mut max_level = 0;
    let mut witness = words[0].word.clone();
    for entry in &words {
        let t = entry
            .matrix
            .trace()
            .lift_to(form.tower(), form.level())
            .map_err(GpsError::Field)?;
        let character = t.checked_mul(&t.galois_conjugate()?)?.checked_sub(
            &form.tower().one(form.level()),
        )?;
        let level = character.minimal_level();
        if level > max_level {
            max_level = level;
            witness = entry.word.clone();
        }
    }
    let reaches = max_level >= target_level;
    Ok(AdjointTraceFieldReport {
        words_checked: words.len(),
        max_word_length,
        max_level_attained: max_level,
        target_level,
        witness_word: Some(witness),
        reaches_target: reaches,
        note: if reaches {
            "adjoint traces attain the full extension field".into()
        } else {
            "inconclusive at this word length".into()
        },
    })
}

/// A class of construction parameters whose quadratic extensions coincide.
#[derive(Debug, Clone)]
pub struct CommensurabilityClass {
    /// `beta/alpha` of the first member.
    pub radicand: FieldElement,
    /// Indices into the candidate list.
    pub member_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CommensurabilityReport {
    pub classes: Vec<CommensurabilityClass>,
    /// Candidates that do not define a valid quadratic extension.
    pub skipped: Vec<(usize, String)>,
}

impl CommensurabilityReport {
    pub fn distinct_field_count(&self) -> usize {
        self.classes.len()
    }
}

/// Group candidate `beta` values by the field `K(sqrt(beta/alpha))`: two
/// candidates land in one class exactly when the ratio of their ratios is a
/// square in `K`. Candidates violating the arithmetic conditions are
/// skipped with a note.
pub fn enumerate_commensurability_certificates(
    field: &FieldTower,
    alpha: &FieldElement,
    betas: &[FieldElement],
) -> Result<CommensurabilityReport, GpsError> {
    assert!(!alpha.is_zero(), "alpha must be nonzero");
    let level = field.top_level();
    let alpha = alpha.lift_to(field, level)?;
    let required = field.degree(level) - 1;
    let sigma0 = field.designated_embedding(level);
    let mut classes: Vec<CommensurabilityClass> = Vec::new();
    let mut skipped = Vec::new();
    for (idx, beta) in betas.iter().enumerate() {
        if beta.is_zero() {
            skipped.push((idx, "zero value".to_string()));
            continue;
        }
        let beta = beta.lift_to(field, level)?;
        let ratio = beta.checked_div(&alpha)?;
        if ratio.is_square()?.is_some() {
            skipped.push((idx, "ratio to alpha is already a square; the extension is trivial".into()));
            continue;
        }
        if beta.certified_sign(&sigma0)?.sign == Sign::Negative {
            skipped.push((idx, "negative at the designated embedding".into()));
            continue;
        }
        let signs = beta.sign_count()?;
        if signs != required {
            skipped.push((
                idx,
                format!("positive at {signs} conjugate embeddings, required {required}"),
            ));
            continue;
        }
        let mut placed = false;
        for class in classes.iter_mut() {
            if ratio.checked_div(&class.radicand)?.is_square()?.is_some() {
                class.member_indices.push(idx);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(CommensurabilityClass { radicand: ratio, member_indices: vec![idx] });
        }
    }
    Ok(CommensurabilityReport { classes, skipped })
}
