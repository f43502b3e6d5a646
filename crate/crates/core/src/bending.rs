//! Bending units, the unitary extension carrying them, and the diagonal
//! bending matrices.
//!
//! A bending unit is a unit `u` of the ring of integers of the extension
//! field whose designated image exceeds 2 while every conjugate image lies
//! strictly between -1 and 1 (and away from 0). Adjoining a square root of
//! `u^2 - 4` produces a field with exactly two real places whose top-step
//! conjugation sends the integral scalar `v = (u + sqrt(u^2 - 4))/2` to its
//! own inverse; the bending matrix Diag(v^-n, v, ..., v) is then a special
//! unitary integral matrix commuting with every hyperplane stabilizer.

use crate::forms::{
    integral_entries, DiagonalForm, FormsError, HermitianForm, IsometryViolation,
};
use crate::gps::{GpsInstance, ValidationCheck, ValidationRecord};
use crate::matrix::TowerMatrix;
use crate::numfield::{
    EmbeddingHandle, FieldElement, FieldTower, NumFieldError, Sign, SignCertificate,
};
use crate::{rational_string, Int, Rat};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BendingError {
    #[error("the rationals admit only the units 1 and -1, neither of which bends")]
    DegreeOne,
    #[error("unit search exhausted: {0}")]
    NoUnitFound(String),
    #[error("sign condition failed: {0}")]
    SignConditionFailed(String),
    #[error("not a hyperplane-stabilizer witness: {0}")]
    NotAStabilizer(String),
    #[error("bent generator {index} fails the unitary certificate: {detail}")]
    MemberNotUnitary { index: usize, detail: String },
    #[error(transparent)]
    Field(#[from] NumFieldError),
    #[error(transparent)]
    Forms(#[from] FormsError),
}

/// How a unit was obtained, recorded in its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchTier {
    /// Fundamental unit of a real quadratic field via the continued fraction
    /// of the ring generator, computed with certified floors.
    ContinuedFraction,
    /// Sweep of half-integer coordinate shells in a field of degree three or
    /// more.
    BruteForce,
    /// Handed in from outside and certified after the fact.
    Supplied,
}

/// Exact record that an element is a unit of the ring of integers: both the
/// element and its inverse have integral characteristic polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitWitness {
    pub element_integral: bool,
    pub inverse_integral: bool,
    pub norm: Rat,
}

/// A certified bending unit together with the sign certificates for its
/// window conditions and the integrality record making it a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BendingUnit {
    pub u: FieldElement,
    pub sign_certificates: Vec<SignCertificate>,
    pub norm_witness: UnitWitness,
    pub tier: SearchTier,
    pub detail: String,
}

impl BendingUnit {
    /// Certify an arbitrary element as a bending unit. Fails when the
    /// element is not a unit of the ring of integers or when any window
    /// condition (designated image above 2, conjugate images strictly
    /// inside the unit interval) cannot be certified.
    pub fn certify(
        u: &FieldElement,
        tier: SearchTier,
        detail: String,
    ) -> Result<BendingUnit, BendingError> {
        let norm_witness = unit_witness(u)?;
        if !norm_witness.element_integral || !norm_witness.inverse_integral {
            return Err(BendingError::SignConditionFailed(format!(
                "not a unit of the ring of integers (norm {})",
                rational_string(&norm_witness.norm)
            )));
        }
        let sign_certificates = window_certificates(u)?;
        Ok(BendingUnit { u: u.clone(), sign_certificates, norm_witness, tier, detail })
    }
}

fn unit_witness(u: &FieldElement) -> Result<UnitWitness, BendingError> {
    let inverse = u.inv()?;
    Ok(UnitWitness {
        element_integral: u.is_algebraic_integer(),
        inverse_integral: inverse.is_algebraic_integer(),
        norm: u.rational_norm(),
    })
}

/// Certify the window: `u - 2` positive at the designated embedding, and at
/// every other embedding `u` nonzero with `u - 1` negative and `u + 1`
/// positive.
fn window_certificates(u: &FieldElement) -> Result<Vec<SignCertificate>, BendingError> {
    let tower = u.tower().clone();
    let level = u.level();
    let one = tower.one(level);
    let two = tower.integer(level, 2);
    let above_two = u.checked_sub(&two)?;
    if above_two.is_zero() {
        return Err(BendingError::SignConditionFailed(
            "the designated image equals 2 exactly".into(),
        ));
    }
    let head = above_two.certified_sign(&tower.designated_embedding(level))?;
    if head.sign != Sign::Positive {
        return Err(BendingError::SignConditionFailed(
            "the designated image does not exceed 2".into(),
        ));
    }
    let mut certificates = vec![head];
    // the designated image exceeds 2, so u is not +-1 and both shifts below
    // are nonzero elements
    let below = u.checked_sub(&one)?;
    let above = u.checked_add(&one)?;
    for embedding in tower.embeddings(level) {
        if embedding.is_designated() {
            continue;
        }
        let nonzero = u.certified_sign(&embedding)?;
        let upper = below.certified_sign(&embedding)?;
        if upper.sign != Sign::Negative {
            return Err(BendingError::SignConditionFailed(format!(
                "a conjugate image is not below 1 (base root {}, branches {:?})",
                embedding.base_root_index(),
                embedding.branches()
            )));
        }
        let lower = above.certified_sign(&embedding)?;
        if lower.sign != Sign::Positive {
            return Err(BendingError::SignConditionFailed(format!(
                "a conjugate image is not above -1 (base root {}, branches {:?})",
                embedding.base_root_index(),
                embedding.branches()
            )));
        }
        certificates.push(nonzero);
        certificates.push(upper);
        certificates.push(lower);
    }
    Ok(certificates)
}

/// Search the top level of `ell` for a bending unit of rational norm one.
///
/// Real quadratic fields use the continued fraction of the ring generator:
/// the first convergent giving a unit is the fundamental unit, a norm
/// minus-one fundamental unit is squared, and the smallest power clearing
/// the window is returned. Higher degrees sweep half-integer coordinate
/// shells (shells up to `2 * search_bound`, lexicographic within a shell)
/// for the first norm-one unit in the window. For the quadratic tier
/// `search_bound` caps the number of convergents examined.
pub fn find_bending_unit(
    ell: &FieldTower,
    search_bound: usize,
) -> Result<BendingUnit, BendingError> {
    let level = ell.top_level();
    match ell.degree(level) {
        1 => Err(BendingError::DegreeOne),
        2 => continued_fraction_unit(ell, search_bound),
        _ => brute_force_unit(ell, search_bound),
    }
}

fn continued_fraction_unit(
    ell: &FieldTower,
    search_bound: usize,
) -> Result<BendingUnit, BendingError> {
    let level = ell.top_level();
    let (kernel, sqrt_kernel) = squarefree_generator(ell)?;
    // ring of integers: Z[(1 + sqrt d)/2] when d = 1 mod 4, else Z[sqrt d]
    let omega = if (&kernel % Int::from(4)) == Int::one() {
        ell.one(level)
            .checked_add(&sqrt_kernel)?
            .scale(&Rat::new(Int::one(), Int::from(2)))
    } else {
        sqrt_kernel
    };
    let designated = ell.designated_embedding(level);

    let mut state = omega.clone();
    let (mut h_prev, mut h_prev2) = (Int::one(), Int::zero());
    let (mut k_prev, mut k_prev2) = (Int::zero(), Int::one());
    let mut fundamental = None;
    for step in 0..search_bound {
        let a = certified_floor(&state, &designated);
        let h = &a * &h_prev + &h_prev2;
        let k = &a * &k_prev + &k_prev2;
        let candidate = ell
            .rational(level, Rat::from_integer(h.clone()))
            .checked_sub(&omega.scale(&Rat::from_integer(k.clone())))?;
        let norm = candidate.rational_norm();
        if norm.abs().is_one() {
            fundamental = Some((candidate, step + 1, norm));
            break;
        }
        h_prev2 = std::mem::replace(&mut h_prev, h);
        k_prev2 = std::mem::replace(&mut k_prev, k);
        let fractional = state.checked_sub(&ell.rational(level, Rat::from_integer(a)))?;
        // the tail of an irrational continued fraction is never an integer
        state = fractional.inv()?;
    }
    let Some((unit, steps, norm)) = fundamental else {
        return Err(BendingError::NoUnitFound(format!(
            "no unit among the first {search_bound} continued-fraction convergents"
        )));
    };

    let mut unit = representative_above_one(&unit, &designated)?;
    let squared = norm.is_negative();
    if squared {
        unit = unit.checked_mul(&unit)?;
    }
    for exponent in 1..=8i64 {
        let powered = unit.pow(exponent)?;
        match BendingUnit::certify(&powered, SearchTier::ContinuedFraction, String::new()) {
            Ok(mut certified) => {
                certified.detail = format!(
                    "fundamental unit after {steps} convergents (norm {}){}{}",
                    rational_string(&norm),
                    if squared { ", squared" } else { "" },
                    if exponent > 1 {
                        format!(", raised to the power {exponent}")
                    } else {
                        String::new()
                    },
                );
                return Ok(certified);
            }
            Err(BendingError::SignConditionFailed(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(BendingError::NoUnitFound(
        "no small power of the fundamental unit cleared the window".into(),
    ))
}

/// Among `u`, `-u`, `1/u`, `-1/u`, the one lying above 1 at the designated
/// embedding.
fn representative_above_one(
    unit: &FieldElement,
    designated: &EmbeddingHandle,
) -> Result<FieldElement, BendingError> {
    let tower = unit.tower().clone();
    let one = tower.one(unit.level());
    let inverse = unit.inv()?;
    for candidate in [unit.clone(), unit.neg(), inverse.neg(), inverse] {
        let shifted = candidate.checked_sub(&one)?;
        if !shifted.is_zero() && shifted.certified_sign(designated)?.sign == Sign::Positive {
            return Ok(candidate);
        }
    }
    unreachable!("a unit of norm +-1 other than +-1 has a representative above 1");
}

/// The squarefree integer generating the same quadratic field, and its
/// square root expressed in the tower (positive at the designated
/// embedding).
fn squarefree_generator(ell: &FieldTower) -> Result<(Int, FieldElement), BendingError> {
    if ell.top_level() == 1 {
        // one quadratic step over the rationals
        let radicand = ell
            .radicand(0)
            .as_rational()
            .expect("a first-step radicand is rational");
        let (p, q) = (radicand.numer().clone(), radicand.denom().clone());
        let product = &p * &q;
        let kernel = squarefree_kernel(&product);
        let stretch = exact_integer_sqrt(&(&product / &kernel));
        // sqrt(d) = (q / stretch) * sqrt(p/q)
        Ok((kernel, ell.step_sqrt(0).scale(&Rat::new(q, stretch))))
    } else {
        // quadratic base field x^2 + bx + c
        let poly = ell.base_min_poly();
        let b = poly.coeff(1);
        let c = poly.coeff(0);
        let disc = &b * &b - Rat::from_integer(Int::from(4)) * &c;
        let (e, f) = (disc.numer().clone(), disc.denom().clone());
        let product = &e * &f;
        let kernel = squarefree_kernel(&product);
        let stretch = exact_integer_sqrt(&(&product / &kernel));
        // sqrt(disc) = +-(2 theta + b); fix the sign at the designated root
        let mut sqrt_disc = ell.element(0, vec![b, Rat::from_integer(Int::from(2))])?;
        if sqrt_disc
            .certified_sign(&ell.designated_embedding(0))?
            .sign
            == Sign::Negative
        {
            sqrt_disc = sqrt_disc.neg();
        }
        // sqrt(d) = (f / stretch) * sqrt(disc)
        Ok((kernel, sqrt_disc.scale(&Rat::new(f, stretch))))
    }
}

/// Product of the primes dividing `n` to an odd power (`n` positive).
fn squarefree_kernel(n: &Int) -> Int {
    assert!(n.is_positive(), "squarefree kernel of a nonpositive integer");
    let mut remaining = n.clone();
    let mut kernel = Int::one();
    let mut p = Int::from(2);
    while &p * &p <= remaining {
        let mut exponent = 0u32;
        while (&remaining % &p).is_zero() {
            remaining /= &p;
            exponent += 1;
        }
        if exponent % 2 == 1 {
            kernel *= &p;
        }
        p += Int::one();
    }
    // whatever is left is prime to the first power (or 1)
    kernel * remaining
}

fn exact_integer_sqrt(n: &Int) -> Int {
    let root = n.sqrt();
    assert_eq!(&(&root * &root), n, "argument must be a perfect square");
    root
}

/// Floor of the element's image at the embedding, certified by interval
/// refinement (exact for rational elements).
fn certified_floor(x: &FieldElement, embedding: &EmbeddingHandle) -> Int {
    if let Some(value) = x.as_rational() {
        return value.floor().to_integer();
    }
    let mut bits = 32u32;
    loop {
        let interval = embedding
            .enclosure(x, bits)
            .expect("the element lives at the embedding's level");
        let lo = interval.lo.floor().to_integer();
        if lo == interval.hi.floor().to_integer() {
            return lo;
        }
        bits *= 2;
        assert!(bits < 1 << 22, "floor of an irrational image failed to resolve");
    }
}

fn brute_force_unit(ell: &FieldTower, search_bound: usize) -> Result<BendingUnit, BendingError> {
    let level = ell.top_level();
    let degree = ell.degree(level);
    for shell in 1..=(2 * search_bound as i64) {
        let mut odometer = vec![-shell; degree];
        loop {
            if odometer.iter().map(|k| k.abs()).max() == Some(shell) {
                let coords = odometer
                    .iter()
                    .map(|k| Rat::new(Int::from(*k), Int::from(2)))
                    .collect();
                let candidate = ell.element(level, coords).expect("coordinate count matches");
                if candidate.is_algebraic_integer() && candidate.rational_norm().is_one() {
                    match BendingUnit::certify(&candidate, SearchTier::BruteForce, String::new())
                    {
                        Ok(mut unit) => {
                            unit.detail = format!(
                                "first norm-one unit in the window, half-integer coordinate shell {shell}"
                            );
                            return Ok(unit);
                        }
                        Err(BendingError::SignConditionFailed(_)) => {}
                        Err(other) => return Err(other),
                    }
                }
            }
            // advance lexicographically, last coordinate fastest
            let mut pos = degree;
            while pos > 0 && odometer[pos - 1] == shell {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            odometer[pos - 1] += 1;
            for slot in odometer.iter_mut().skip(pos) {
                *slot = -shell;
            }
        }
    }
    Err(BendingError::NoUnitFound(format!(
        "no norm-one unit in the window within half-integer coordinate shells up to {}",
        2 * search_bound
    )))
}

/// The unitary stage: the extension by a square root of `u^2 - 4`, the
/// Hermitian form the first quadratic form becomes there, and the integral
/// scalar `v = (u + sqrt(u^2 - 4))/2` whose top-step conjugate is its
/// inverse.
#[derive(Debug, Clone)]
pub struct UnitarySetup {
    ell: FieldTower,
    unit: BendingUnit,
    em: FieldTower,
    hermitian: HermitianForm,
    radicand: FieldElement,
    scalar: FieldElement,
}

impl UnitarySetup {
    pub fn base_field(&self) -> &FieldTower {
        &self.ell
    }

    pub fn unit(&self) -> &BendingUnit {
        &self.unit
    }

    pub fn extension(&self) -> &FieldTower {
        &self.em
    }

    pub fn hermitian(&self) -> &HermitianForm {
        &self.hermitian
    }

    pub fn radicand(&self) -> &FieldElement {
        &self.radicand
    }

    /// The root of x^2 - ux + 1 used on the bending diagonal.
    pub fn scalar(&self) -> &FieldElement {
        &self.scalar
    }

    /// The top-step conjugation of the extension (the involution fixing the
    /// base field).
    pub fn conjugate(&self, x: &FieldElement) -> Result<FieldElement, NumFieldError> {
        x.lift_to(&self.em, self.em.top_level())?.galois_conjugate()
    }
}

/// Adjoin a square root of `u^2 - 4` and assemble the Hermitian data. The
/// radicand must be positive at the designated embedding and negative at
/// every other one, so the extension keeps exactly two real places.
pub fn build_unitary_setup(
    inst: &GpsInstance,
    unit: &BendingUnit,
) -> Result<UnitarySetup, BendingError> {
    let ell = inst.extension_field().clone();
    let level = ell.top_level();
    let u = unit.u.lift_to(&ell, level)?;
    let four = ell.integer(level, 4);
    let radicand = u.checked_mul(&u)?.checked_sub(&four)?;
    if radicand.is_zero() {
        return Err(BendingError::SignConditionFailed(
            "u^2 - 4 vanishes, so x^2 - ux + 1 has a double root".into(),
        ));
    }
    if radicand
        .certified_sign(&ell.designated_embedding(level))?
        .sign
        != Sign::Positive
    {
        return Err(BendingError::SignConditionFailed(
            "u^2 - 4 is not positive at the designated embedding".into(),
        ));
    }
    let positives = radicand.sign_count()?;
    if positives != 0 {
        return Err(BendingError::SignConditionFailed(format!(
            "u^2 - 4 is positive at {positives} conjugate embedding(s); the extension would gain \
             extra real places"
        )));
    }
    let em = ell.adjoin_sqrt(&radicand, false)?;
    let top = em.top_level();
    let scalar = u
        .lift_to(&em, top)?
        .checked_add(&em.step_sqrt(top - 1))?
        .scale(&Rat::new(Int::one(), Int::from(2)));
    let conjugate = scalar.galois_conjugate()?;
    assert!(
        scalar.checked_mul(&conjugate)?.is_one(),
        "the two roots of x^2 - ux + 1 multiply to one"
    );
    assert!(
        scalar.is_algebraic_integer() && conjugate.is_algebraic_integer(),
        "roots of a monic integral quadratic are integral"
    );
    let hermitian = HermitianForm::from_quadratic(inst.j1(), &em)?;
    Ok(UnitarySetup { ell, unit: unit.clone(), em, hermitian, radicand, scalar })
}

/// The bending matrix Diag(v^-n, v, ..., v) of size n+1 built from the
/// setup's scalar.
pub fn bending_matrix(setup: &UnitarySetup, n: usize) -> Result<TowerMatrix, BendingError> {
    assert!(n >= 2, "bending needs a hyperplane of dimension at least 2");
    bending_matrix_for_scalar(setup.scalar(), n)
}

/// Diag(w^-n, w, ..., w) for an arbitrary nonzero scalar. Degenerate
/// scalars (1, or non-units) stay arithmetically legal here; the
/// certificates reject them downstream.
pub fn bending_matrix_for_scalar(
    scalar: &FieldElement,
    n: usize,
) -> Result<TowerMatrix, BendingError> {
    let corner = scalar.pow(-(n as i64))?;
    let mut diag = vec![corner];
    diag.extend(std::iter::repeat_with(|| scalar.clone()).take(n));
    Ok(TowerMatrix::diagonal(diag)?)
}

/// Certify that `c` preserves the setup's Hermitian form with determinant
/// one and integral entries. Failures are recorded, never raised.
pub fn certify_bending_in_su(
    setup: &UnitarySetup,
    c: &TowerMatrix,
) -> Result<ValidationRecord, BendingError> {
    let form = &setup.hermitian;
    let lifted = c.lift_to(form.tower(), form.level())?;
    let gram = form.gram_matrix();
    let transformed = lifted.conjugate_transpose()?.mul(&gram)?.mul(&lifted)?;
    let mut gram_passed = true;
    let mut gram_detail = String::from("conjugate-transposed Gram transport returns the form");
    'scan: for i in 0..gram.size() {
        for j in 0..gram.size() {
            if transformed.entry(i, j) != gram.entry(i, j) {
                gram_passed = false;
                gram_detail = format!("Gram transport differs from the form at entry ({i}, {j})");
                break 'scan;
            }
        }
    }
    let det_passed = lifted.det().is_one();
    let integrality = integral_entries(&lifted);
    Ok(ValidationRecord::from_checks(vec![
        ValidationCheck {
            name: "unitary_gram".into(),
            passed: gram_passed,
            detail: gram_detail,
        },
        ValidationCheck {
            name: "determinant_one".into(),
            passed: det_passed,
            detail: if det_passed {
                "determinant is one".into()
            } else {
                "determinant is not one".into()
            },
        },
        ValidationCheck {
            name: "integral_entries".into(),
            passed: integrality.all_integral,
            detail: if integrality.all_integral {
                "every entry is an algebraic integer".into()
            } else {
                format!("non-integral entries at {:?}", integrality.non_integral)
            },
        },
    ]))
}

/// Certify that `c` commutes with each hyperplane-stabilizer witness, and
/// record the structural reason: away from the corner, `c` is a scalar.
/// Witnesses must be Diag(1, B) with B a special isometry of the restricted
/// form; anything else is an error, not a failed check.
pub fn certify_centralizer(
    c: &TowerMatrix,
    form: &DiagonalForm,
    witnesses: &[TowerMatrix],
) -> Result<ValidationRecord, BendingError> {
    let size = c.size();
    assert_eq!(size, form.dimension(), "bending matrix size must match the form");
    let mut checks = Vec::new();

    let mut structural = true;
    let mut structural_detail =
        String::from("off-diagonal entries vanish and the non-corner diagonal is constant");
    'structure: for i in 0..size {
        for j in 0..size {
            if i != j && !c.entry(i, j).is_zero() {
                structural = false;
                structural_detail = format!("nonzero off-diagonal entry at ({i}, {j})");
                break 'structure;
            }
        }
    }
    if structural {
        for i in 2..size {
            if c.entry(i, i) != c.entry(1, 1) {
                structural = false;
                structural_detail =
                    format!("diagonal entries (1, 1) and ({i}, {i}) differ");
                break;
            }
        }
    }
    checks.push(ValidationCheck {
        name: "block_scalar_structure".into(),
        passed: structural,
        detail: structural_detail,
    });

    let restricted = form.restricted();
    for (index, witness) in witnesses.iter().enumerate() {
        if witness.size() != size {
            return Err(BendingError::NotAStabilizer(format!(
                "witness {index} has size {} instead of {size}",
                witness.size()
            )));
        }
        let corner_ok = witness.entry(0, 0).is_one()
            && (1..size).all(|k| witness.entry(0, k).is_zero() && witness.entry(k, 0).is_zero());
        if !corner_ok {
            return Err(BendingError::NotAStabilizer(format!(
                "witness {index} is not of the form Diag(1, B)"
            )));
        }
        let block = TowerMatrix::from_rows(
            (1..size)
                .map(|i| (1..size).map(|j| witness.entry(i, j).clone()).collect())
                .collect(),
        )?;
        if !restricted.is_special_isometry(&block)?.passed {
            return Err(BendingError::NotAStabilizer(format!(
                "witness {index}'s block is not a special isometry of the restricted form"
            )));
        }
        let commutes = c.mul(witness)? == witness.mul(c)?;
        checks.push(ValidationCheck {
            name: format!("commutes_with_witness_{index}"),
            passed: commutes,
            detail: if commutes {
                "the two products agree exactly".into()
            } else {
                "the two products differ".into()
            },
        });
    }
    Ok(ValidationRecord::from_checks(checks))
}

/// A bent generating set: the hyperplane-stabilizer side together with the
/// bent letter c*s, every member certified special unitary and integral.
#[derive(Debug, Clone)]
pub struct BentGeneratorSet {
    pub hat_generators: Vec<TowerMatrix>,
    pub s: TowerMatrix,
    pub c: TowerMatrix,
    pub bent: Vec<TowerMatrix>,
}

/// Assemble hat ∪ {c·s} over the setup's extension and certify every
/// member against the Hermitian form (Gram transport, determinant one,
/// integral entries).
pub fn assemble_bent_generators(
    hat: &[TowerMatrix],
    s: &TowerMatrix,
    c: &TowerMatrix,
    setup: &UnitarySetup,
) -> Result<BentGeneratorSet, BendingError> {
    let form = &setup.hermitian;
    let tower = form.tower().clone();
    let level = form.level();
    let mut bent = Vec::with_capacity(hat.len() + 1);
    for g in hat {
        bent.push(g.lift_to(&tower, level)?);
    }
    bent.push(c.lift_to(&tower, level)?.mul(&s.lift_to(&tower, level)?)?);
    for (index, member) in bent.iter().enumerate() {
        let verdict = form.is_special_unitary(member)?;
        if !verdict.passed {
            return Err(BendingError::MemberNotUnitary {
                index,
                detail: describe_violation(&verdict.violation),
            });
        }
        let integrality = integral_entries(member);
        if !integrality.all_integral {
            return Err(BendingError::MemberNotUnitary {
                index,
                detail: format!("non-integral entries at {:?}", integrality.non_integral),
            });
        }
    }
    Ok(BentGeneratorSet {
        hat_generators: hat.to_vec(),
        s: s.clone(),
        c: c.clone(),
        bent,
    })
}

fn describe_violation(violation: &Option<IsometryViolation>) -> String {
    match violation {
        Some(IsometryViolation::GramEntry { row, col, .. }) => {
            format!("Gram condition fails at entry ({row}, {col})")
        }
        Some(IsometryViolation::Determinant { .. }) => "determinant is not one".into(),
        None => "unspecified violation".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gps::{build_gps_instance, GpsParameters};

    fn q(n: i64) -> Rat {
        Rat::from_integer(Int::from(n))
    }

    fn qq(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    fn rationals() -> FieldTower {
        FieldTower::rationals()
    }

    fn quadratic_step(radicand: i64) -> FieldTower {
        let base = rationals();
        let r = base.rational(0, q(radicand));
        base.adjoin_sqrt(&r, true).unwrap()
    }

    fn elem(tower: &FieldTower, level: usize, coords: &[i64]) -> FieldElement {
        tower
            .element(level, coords.iter().map(|&c| q(c)).collect())
            .unwrap()
    }

    fn canonical_instance() -> crate::gps::GpsInstance {
        build_gps_instance(&GpsParameters::canonical()).unwrap()
    }

    fn canonical_setup() -> UnitarySetup {
        let inst = canonical_instance();
        let unit = find_bending_unit(inst.extension_field(), 16).unwrap();
        build_unitary_setup(&inst, &unit).unwrap()
    }

    #[test]
    fn continued_fraction_units_for_real_quadratic_fields() {
        // sqrt 2 as a tower step: fundamental unit 1 + sqrt 2 has norm -1,
        // its square 3 + 2 sqrt 2 clears the window
        let l2 = quadratic_step(2);
        let unit = find_bending_unit(&l2, 12).unwrap();
        assert_eq!(unit.u, elem(&l2, 1, &[3, 2]));
        assert_eq!(unit.tier, SearchTier::ContinuedFraction);
        assert!(unit.detail.contains("squared"));
        assert_eq!(unit.norm_witness.norm, q(1));
        assert!(unit.norm_witness.element_integral && unit.norm_witness.inverse_integral);

        // the same field presented as a quadratic base: x^2 - 2
        let b2 = FieldTower::make_base_field(&[q(-2), q(0), q(1)]).unwrap();
        let unit = find_bending_unit(&b2, 12).unwrap();
        assert_eq!(unit.u, elem(&b2, 0, &[3, 2]));

        // sqrt 5: ring generated by (1 + sqrt 5)/2, fundamental unit golden,
        // squared to (3 + sqrt 5)/2
        let l5 = quadratic_step(5);
        let unit = find_bending_unit(&l5, 12).unwrap();
        assert_eq!(
            unit.u,
            l5.element(1, vec![qq(3, 2), qq(1, 2)]).unwrap()
        );

        // the golden base x^2 - x - 1: same unit reads as theta + 1
        let golden = FieldTower::make_base_field(&[q(-1), q(-1), q(1)]).unwrap();
        let unit = find_bending_unit(&golden, 12).unwrap();
        assert_eq!(unit.u, elem(&golden, 0, &[1, 1]));

        // sqrt 3: fundamental unit 2 + sqrt 3 already has norm +1
        let l3 = quadratic_step(3);
        let unit = find_bending_unit(&l3, 12).unwrap();
        assert_eq!(unit.u, elem(&l3, 1, &[2, 1]));
        assert!(!unit.detail.contains("squared"));

        // sqrt 8 generates the same field as sqrt 2; 2 sqrt 2 = sqrt 8
        let l8 = quadratic_step(8);
        let unit = find_bending_unit(&l8, 12).unwrap();
        assert_eq!(unit.u, elem(&l8, 1, &[3, 1]));
    }

    #[test]
    fn unit_certificates_carry_the_window() {
        let l2 = quadratic_step(2);
        let unit = find_bending_unit(&l2, 12).unwrap();
        // one designated certificate plus three per conjugate embedding
        assert_eq!(unit.sign_certificates.len(), 4);
        let head = &unit.sign_certificates[0];
        assert_eq!(head.sign, Sign::Positive);
        assert_eq!(
            head.element,
            unit.u.checked_sub(&l2.integer(1, 2)).unwrap()
        );
        assert!(head.embedding.is_designated());
    }

    #[test]
    fn degree_one_and_exhausted_bounds_are_reported() {
        assert_eq!(find_bending_unit(&rationals(), 10).unwrap_err(), BendingError::DegreeOne);

        let l2 = quadratic_step(2);
        assert!(matches!(
            find_bending_unit(&l2, 0).unwrap_err(),
            BendingError::NoUnitFound(_)
        ));

        // the first convergent of sqrt 3 is 1 - sqrt 3 of norm -2, so a
        // bound of one convergent is not enough
        let l3 = quadratic_step(3);
        assert!(matches!(
            find_bending_unit(&l3, 1).unwrap_err(),
            BendingError::NoUnitFound(_)
        ));

        let cubic = FieldTower::make_base_field(&[q(-1), q(-2), q(1), q(1)]).unwrap();
        assert!(matches!(
            find_bending_unit(&cubic, 0).unwrap_err(),
            BendingError::NoUnitFound(_)
        ));
    }

    #[test]
    fn brute_force_unit_for_a_cubic_field() {
        // x^3 + x^2 - 2x - 1: totally real cubic, roots near 1.247, -0.445,
        // -1.802
        let cubic = FieldTower::make_base_field(&[q(-1), q(-2), q(1), q(1)]).unwrap();
        let unit = find_bending_unit(&cubic, 2).unwrap();
        assert_eq!(unit.u, elem(&cubic, 0, &[0, 2, 1]));
        assert_eq!(unit.tier, SearchTier::BruteForce);
        assert_eq!(unit.norm_witness.norm, q(1));
        assert_eq!(unit.sign_certificates.len(), 7);

        // theta + 1 sits in an earlier shell and clears the window, but its
        // norm is -1, so the search passes it by
        let earlier = elem(&cubic, 0, &[1, 1, 0]);
        assert_eq!(earlier.rational_norm(), q(-1));
        let certified =
            BendingUnit::certify(&earlier, SearchTier::Supplied, "hand-picked".into()).unwrap();
        assert_eq!(certified.norm_witness.norm, q(-1));
    }

    #[test]
    fn canonical_setup_builds_the_two_real_place_extension() {
        let inst = canonical_instance();
        let ell = inst.extension_field();
        let unit = find_bending_unit(ell, 16).unwrap();
        assert_eq!(unit.u, elem(ell, 1, &[3, 2]));

        let setup = build_unitary_setup(&inst, &unit).unwrap();
        assert_eq!(setup.radicand(), &elem(ell, 1, &[13, 12]));
        let em = setup.extension();
        assert_eq!(em.degree(2), 4);
        assert_eq!(em.embeddings(2).len(), 2);

        // v = (u + sqrt(u^2 - 4))/2, integral, with conjugate its inverse
        let v = setup.scalar();
        let (lower, upper) = v.components().unwrap();
        assert_eq!(lower, unit.u.lift_to(em, 1).unwrap().scale(&qq(1, 2)));
        assert_eq!(upper, em.rational(1, qq(1, 2)));
        assert!(v.is_algebraic_integer());
        let conj = setup.conjugate(v).unwrap();
        assert!(v.checked_mul(&conj).unwrap().is_one());
        assert_eq!(conj, v.inv().unwrap());

        assert_eq!(setup.hermitian().dimension(), 4);
        assert_eq!(setup.hermitian().level(), 2);
    }

    #[test]
    fn setup_rejects_corrupted_unit_certificates() {
        let inst = canonical_instance();
        let ell = inst.extension_field().clone();
        let fake = |u: FieldElement| BendingUnit {
            norm_witness: UnitWitness {
                element_integral: true,
                inverse_integral: true,
                norm: q(1),
            },
            u,
            sign_certificates: Vec::new(),
            tier: SearchTier::Supplied,
            detail: "forged".into(),
        };

        // u = 1: radicand -3 is negative at the designated embedding
        let err = build_unitary_setup(&inst, &fake(ell.one(1))).unwrap_err();
        assert!(matches!(&err, BendingError::SignConditionFailed(m)
            if m.contains("not positive at the designated")));

        // u = 2: the radicand vanishes
        let err = build_unitary_setup(&inst, &fake(ell.integer(1, 2))).unwrap_err();
        assert!(matches!(&err, BendingError::SignConditionFailed(m) if m.contains("vanishes")));

        // u = 5 + 2 sqrt 2: u^2 - 4 = 29 + 20 sqrt 2 is positive at the
        // conjugate embedding too, so the extension would have 4 real places
        let err = build_unitary_setup(&inst, &fake(elem(&ell, 1, &[5, 2]))).unwrap_err();
        assert!(matches!(&err, BendingError::SignConditionFailed(m)
            if m.contains("extra real places")));
    }

    #[test]
    fn bending_matrices_certify_across_dimensions() {
        let base = rationals();
        for n in 2..=6usize {
            let params = GpsParameters::new(
                &base,
                base.rational(0, q(1)),
                base.rational(0, q(2)),
                vec![base.rational(0, q(1)); n - 1],
                base.rational(0, q(1)),
            )
            .unwrap();
            let inst = build_gps_instance(&params).unwrap();
            let unit = find_bending_unit(inst.extension_field(), 16).unwrap();
            let setup = build_unitary_setup(&inst, &unit).unwrap();
            let c = bending_matrix(&setup, n).unwrap();
            assert_eq!(c.size(), n + 1);
            assert_eq!(c.entry(0, 0), &setup.scalar().pow(-(n as i64)).unwrap());

            let record = certify_bending_in_su(&setup, &c).unwrap();
            assert!(record.all_passed, "n = {n}: {:?}", record.checks);
            assert!(record.check("unitary_gram").unwrap().passed);
            assert!(record.check("determinant_one").unwrap().passed);
            assert!(record.check("integral_entries").unwrap().passed);

            let em = setup.extension();
            let identity = TowerMatrix::identity(em, em.top_level(), n + 1);
            assert!(certify_bending_in_su(&setup, &identity).unwrap().all_passed);
        }
    }

    #[test]
    fn scalar_bending_matrices_match_hand_values() {
        let inst = canonical_instance();
        let ell = inst.extension_field().clone();
        let unit = find_bending_unit(&ell, 16).unwrap();
        let setup = build_unitary_setup(&inst, &unit).unwrap();

        // the unit itself on the diagonal: corner u^-3 = 99 - 70 sqrt 2
        let literal = bending_matrix_for_scalar(&unit.u, 3).unwrap();
        assert_eq!(literal.entry(0, 0), &elem(&ell, 1, &[99, -70]));
        for i in 1..4 {
            assert_eq!(literal.entry(i, i), &unit.u);
        }

        // scalar 1 degenerates to the identity
        let one = bending_matrix_for_scalar(&ell.one(1), 4).unwrap();
        assert!(one.is_identity());

        // one-parameter law: powers of the scalar multiply exponents
        let v = setup.scalar();
        let left = bending_matrix_for_scalar(&v.pow(2).unwrap(), 3)
            .unwrap()
            .mul(&bending_matrix_for_scalar(&v.pow(3).unwrap(), 3).unwrap())
            .unwrap();
        let right = bending_matrix_for_scalar(&v.pow(5).unwrap(), 3).unwrap();
        assert_eq!(left, right);

        // read over L itself, the unit-literal matrix is special unitary
        // precisely because the unit has norm +1 (conjugate = inverse)
        let over_ell = HermitianForm::from_quadratic(inst.j1(), &ell).unwrap();
        assert!(over_ell.is_special_unitary(&literal).unwrap().passed);
        let norm_minus_one = elem(&ell, 1, &[1, 1]); // 1 + sqrt 2
        let bad = bending_matrix_for_scalar(&norm_minus_one, 3).unwrap();
        assert!(!over_ell.is_special_unitary(&bad).unwrap().passed);

        // a non-unit scalar fails integrality (and the Gram transport)
        let two = bending_matrix_for_scalar(&ell.integer(1, 2), 3).unwrap();
        let record = certify_bending_in_su(&setup, &two).unwrap();
        assert!(!record.all_passed);
        assert!(record.check("determinant_one").unwrap().passed);
        let integrality = record.check("integral_entries").unwrap();
        assert!(!integrality.passed);
        assert!(integrality.detail.contains("(0, 0)"));
    }

    #[test]
    fn centralizer_commutation_and_rejections() {
        let inst = canonical_instance();
        let setup = canonical_setup();
        let c = bending_matrix(&setup, 3).unwrap();
        let j1 = inst.j1();
        let tower = j1.tower().clone();

        let identity = TowerMatrix::identity(&tower, 0, 4);
        let stabilizer = TowerMatrix::from_integers(
            &tower,
            0,
            &[
                &[1, 0, 0, 0],
                &[0, 1, 2, -2],
                &[0, 2, 1, -2],
                &[0, 2, 2, -3],
            ],
        );
        let record = certify_centralizer(&c, j1, &[identity.clone(), stabilizer]).unwrap();
        assert!(record.all_passed);
        assert_eq!(record.checks.len(), 3);
        assert!(record.check("block_scalar_structure").unwrap().passed);
        assert!(record.check("commutes_with_witness_1").unwrap().passed);

        // an isometry that moves the first basis vector is rejected
        let mover = TowerMatrix::from_integers(
            &tower,
            0,
            &[
                &[3, 2, 2, 4],
                &[2, 3, 2, 4],
                &[2, 2, 3, 4],
                &[4, 4, 4, 7],
            ],
        );
        assert!(matches!(
            certify_centralizer(&c, j1, &[mover.clone()]).unwrap_err(),
            BendingError::NotAStabilizer(_)
        ));

        // the block must be a special isometry of the restricted form
        let shear_block = TowerMatrix::from_integers(
            &tower,
            0,
            &[
                &[1, 0, 0, 0],
                &[0, 1, 1, 0],
                &[0, 0, 1, 0],
                &[0, 0, 0, 1],
            ],
        );
        assert!(matches!(
            certify_centralizer(&c, j1, &[shear_block]).unwrap_err(),
            BendingError::NotAStabilizer(_)
        ));

        // a non-block-scalar matrix is a recorded failure, not an error
        let record = certify_centralizer(&mover, j1, &[identity]).unwrap();
        assert!(!record.check("block_scalar_structure").unwrap().passed);
        assert!(record.check("commutes_with_witness_0").unwrap().passed);
        assert!(!record.all_passed);
    }

    #[test]
    fn bent_generator_sets_are_certified() {
        let inst = canonical_instance();
        let setup = canonical_setup();
        let c = bending_matrix(&setup, 3).unwrap();
        let hat = inst.j1().sample_isometries(2, 2).unwrap();

        // the bent letter: the first transported second-form isometry that
        // stays integral while picking up an irrational entry
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

        let bent = assemble_bent_generators(&hat, &s, &c, &setup).unwrap();
        assert_eq!(bent.bent.len(), 3);
        let em = setup.extension();
        let expected_letter = c
            .lift_to(em, 2)
            .unwrap()
            .mul(&s.lift_to(em, 2).unwrap())
            .unwrap();
        assert_eq!(bent.bent[2], expected_letter);

        // empty hat with the identity letter leaves just the bending matrix
        let identity = TowerMatrix::identity(inst.j1().tower(), 0, 4);
        let alone = assemble_bent_generators(&[], &identity, &c, &setup).unwrap();
        assert_eq!(alone.bent.len(), 1);
        assert_eq!(alone.bent[0], c.lift_to(em, 2).unwrap());

        // a shear in the hat is caught with its position
        let shear = TowerMatrix::from_integers(
            inst.j1().tower(),
            0,
            &[
                &[1, 1, 0, 0],
                &[0, 1, 0, 0],
                &[0, 0, 1, 0],
                &[0, 0, 0, 1],
            ],
        );
        match assemble_bent_generators(&[shear], &identity, &c, &setup).unwrap_err() {
            BendingError::MemberNotUnitary { index, .. } => assert_eq!(index, 0),
            other => panic!("expected MemberNotUnitary, got {other:?}"),
        }

        // a letter with a non-integral entry is caught after the hat
        let half = TowerMatrix::diagonal(vec![
            inst.j1().tower().rational(0, qq(1, 2)),
            inst.j1().tower().rational(0, q(2)),
            inst.j1().tower().rational(0, q(1)),
            inst.j1().tower().rational(0, q(1)),
        ])
        .unwrap();
        match assemble_bent_generators(&hat, &half, &c, &setup).unwrap_err() {
            BendingError::MemberNotUnitary { index, .. } => assert_eq!(index, 2),
            other => panic!("expected MemberNotUnitary, got {other:?}"),
        }
    }
}
