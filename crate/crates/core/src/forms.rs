//! Diagonal quadratic and Hermitian forms with exact isometry checking.
//!
//! A [`DiagonalForm`] is `<g_1, ..., g_m>`: the quadratic form
//! `sum g_i x_i^2` with nonzero coefficients at one tower level. Isometry
//! checks compare `B^T G B` with `G` entry by entry and verify the
//! determinant, reporting the first offending entry as a witness when the
//! check fails. A [`HermitianForm`] lives one quadratic step up and pairs
//! vectors through the step's conjugation; its unitary check uses the
//! conjugate transpose.
//!
//! Integer isometries are produced constructively: a reflection in an
//! anisotropic vector `v` is integral whenever `<v,v>` divides `2<e_j,v>`
//! for every basis vector, and products of two such reflections have
//! determinant one. [`DiagonalForm::sample_isometries`] enumerates bounded
//! vectors in a fixed order, so its output is deterministic.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::matrix::TowerMatrix;
use crate::numfield::{FieldElement, FieldTower, NumFieldError};
use crate::Rat;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormsError {
    #[error("vector length does not match the form's dimension")]
    DimensionMismatch,
    #[error("reflection vector is isotropic")]
    IsotropicVector,
    #[error("no isometries found within the search bounds")]
    NoneFound,
    #[error("matrix is not a special isometry of the restricted form")]
    NotAnIsometry,
    #[error("hermitian coefficients must be fixed by the step conjugation")]
    NotHermitian,
    #[error(transparent)]
    Field(#[from] NumFieldError),
}

/// Outcome of an isometry or unitary check. `passed` is false exactly when
/// `violation` is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsometryCheck {
    pub passed: bool,
    pub violation: Option<IsometryViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsometryViolation {
    /// The transformed Gram matrix differs from the form's at this entry.
    GramEntry { row: usize, col: usize, expected: FieldElement, found: FieldElement },
    /// The Gram condition holds but the determinant is not one.
    Determinant { found: FieldElement },
}

impl IsometryCheck {
    fn pass() -> IsometryCheck {
        IsometryCheck { passed: true, violation: None }
    }

    fn fail(violation: IsometryViolation) -> IsometryCheck {
        IsometryCheck { passed: false, violation: Some(violation) }
    }
}

/// Which matrix entries fail to be algebraic integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralityCheck {
    pub all_integral: bool,
    pub non_integral: Vec<(usize, usize)>,
}

/// Report the positions of non-integral entries of a matrix.
pub fn integral_entries(m: &TowerMatrix) -> IntegralityCheck {
    let mut non_integral = Vec::new();
    for i in 0..m.size() {
        for j in 0..m.size() {
            if !m.entry(i, j).is_algebraic_integer() {
                non_integral.push((i, j));
            }
        }
    }
    IntegralityCheck { all_integral: non_integral.is_empty(), non_integral }
}

/// A nondegenerate diagonal quadratic form over one tower level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalForm {
    diag: Vec<FieldElement>,
}

impl DiagonalForm {
    /// Build from coefficients, lifting all of them to the deepest level
    /// present. Zero coefficients are rejected (the form must be
    /// nondegenerate).
    pub fn new(coefficients: Vec<FieldElement>) -> Result<DiagonalForm, FormsError> {
        assert!(!coefficients.is_empty(), "form must have at least one coefficient");
        if coefficients.iter().any(|c| c.is_zero()) {
            return Err(FormsError::Field(NumFieldError::ZeroElement));
        }
        let gram = TowerMatrix::diagonal(coefficients).map_err(FormsError::Field)?;
        let diag = (0..gram.size()).map(|i| gram.entry(i, i).clone()).collect();
        Ok(DiagonalForm { diag })
    }

    pub fn from_integers(tower: &FieldTower, level: usize, coeffs: &[i64]) -> DiagonalForm {
        DiagonalForm::new(coeffs.iter().map(|&c| tower.integer(level, c)).collect())
            .expect("nonzero integer coefficients")
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.diag
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn tower(&self) -> &FieldTower {
        self.diag[0].tower()
    }

    pub fn level(&self) -> usize {
        self.diag[0].level()
    }

    pub fn gram_matrix(&self) -> TowerMatrix {
        TowerMatrix::diagonal(self.diag.clone()).expect("coefficients share one level")
    }

    /// `sum g_i x_i^2`.
    pub fn evaluate(&self, vector: &[FieldElement]) -> Result<FieldElement, FormsError> {
        if vector.len() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let mut acc = self.tower().zero(self.level());
        for (g, x) in self.diag.iter().zip(vector) {
            acc = acc.checked_add(&g.checked_mul(x)?.checked_mul(x)?)?;
        }
        Ok(acc)
    }

    /// The associated bilinear pairing `sum g_i x_i y_i`.
    pub fn inner(
        &self,
        x: &[FieldElement],
        y: &[FieldElement],
    ) -> Result<FieldElement, FormsError> {
        if x.len() != self.dimension() || y.len() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let mut acc = self.tower().zero(self.level());
        for ((g, a), b) in self.diag.iter().zip(x).zip(y) {
            acc = acc.checked_add(&g.checked_mul(a)?.checked_mul(b)?)?;
        }
        Ok(acc)
    }

    /// Check `B^T G B = G` and `det B = 1`, reporting a witness on failure.
    pub fn is_special_isometry(&self, b: &TowerMatrix) -> Result<IsometryCheck, FormsError> {
        if b.size() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let g = self.gram_matrix();
        let transformed = b.transpose().mul(&g)?.mul(b)?;
        let expected = g.lift_to(transformed.tower(), transformed.level()).map_err(FormsError::Field)?;
        for i in 0..expected.size() {
            for j in 0..expected.size() {
                if expected.entry(i, j) != transformed.entry(i, j) {
                    return Ok(IsometryCheck::fail(IsometryViolation::GramEntry {
                        row: i,
                        col: j,
                        expected: expected.entry(i, j).clone(),
                        found: transformed.entry(i, j).clone(),
                    }));
                }
            }
        }
        let det = b.det();
        if !det.is_one() {
            return Ok(IsometryCheck::fail(IsometryViolation::Determinant { found: det }));
        }
        Ok(IsometryCheck::pass())
    }

    /// The reflection in an anisotropic vector:
    /// `x -> x - (2 <x,v> / <v,v>) v`. Squares to the identity and has
    /// determinant -1.
    pub fn reflection_matrix(&self, v: &[FieldElement]) -> Result<TowerMatrix, FormsError> {
        if v.len() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let q = self.evaluate(v)?;
        if q.is_zero() {
            return Err(FormsError::IsotropicVector);
        }
        let q_inv = q.inv().map_err(FormsError::Field)?;
        let two = self.tower().integer(self.level(), 2);
        let n = self.dimension();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                // R_ij = delta_ij - 2 v_i g_j v_j / q
                let mut e = v[i]
                    .checked_mul(&self.diag[j])?
                    .checked_mul(&v[j])?
                    .checked_mul(&two)?
                    .checked_mul(&q_inv)?
                    .neg();
                if i == j {
                    e = e.checked_add(&self.tower().one(self.level()))?;
                }
                row.push(e);
            }
            rows.push(row);
        }
        TowerMatrix::from_rows(rows).map_err(FormsError::Field)
    }

    /// The form restricted to the hyperplane `x_1 = 0` (drop the first
    /// coefficient).
    pub fn restricted(&self) -> DiagonalForm {
        assert!(self.dimension() >= 2, "restriction needs dimension at least 2");
        DiagonalForm { diag: self.diag[1..].to_vec() }
    }

    /// Embed a special isometry of the restricted form as the block matrix
    /// `Diag(1, B')`, a special isometry of the full form fixing `e_1`.
    pub fn hyperplane_stabilizer_member(
        &self,
        b_prime: &TowerMatrix,
    ) -> Result<TowerMatrix, FormsError> {
        let restricted = self.restricted();
        if b_prime.size() != restricted.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        if !restricted.is_special_isometry(b_prime)?.passed {
            return Err(FormsError::NotAnIsometry);
        }
        let n = self.dimension();
        let tower = b_prime.tower();
        let level = b_prime.level();
        let mut rows = vec![vec![tower.zero(level); n]; n];
        rows[0][0] = tower.one(level);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                rows[i + 1][j + 1] = b_prime.entry(i, j).clone();
            }
        }
        TowerMatrix::from_rows(rows).map_err(FormsError::Field)
    }

    /// Deterministically sample special isometries with integral entries:
    /// products of two integral reflections in vectors with integer
    /// coordinates bounded by `height_bound`. A reflection is kept when
    /// `<v,v>` divides `2 <e_j, v>` for every basis vector, which makes its
    /// entries algebraic integers. Results are deduplicated and returned in
    /// generation order, truncated to `count`.
    pub fn sample_isometries(
        &self,
        height_bound: i64,
        count: usize,
    ) -> Result<Vec<TowerMatrix>, FormsError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        assert!(height_bound >= 0, "height bound must be nonnegative");
        let reflections = self.integral_reflections(height_bound)?;
        let mut seen: BTreeSet<Vec<Rat>> = BTreeSet::new();
        let mut out = Vec::new();
        'outer: for r1 in &reflections {
            for r2 in &reflections {
                let product = r1.mul(r2)?;
                if seen.insert(flattened_key(&product)) {
                    out.push(product);
                    if out.len() == count {
                        break 'outer;
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(FormsError::NoneFound);
        }
        Ok(out)
    }

    /// All distinct integral reflections from integer vectors of bounded
    /// height, in lexicographic vector order (sign-canonical: the first
    /// nonzero coordinate is positive, since `v` and `-v` reflect alike).
    pub fn integral_reflections(&self, height_bound: i64) -> Result<Vec<TowerMatrix>, FormsError> {
        let n = self.dimension();
        let tower = self.tower().clone();
        let level = self.level();
        let two = tower.integer(level, 2);
        let mut seen: BTreeSet<Vec<Rat>> = BTreeSet::new();
        let mut out = Vec::new();
        let mut v = vec![-height_bound; n];
        loop {
            if let Some(first) = v.iter().find(|&&c| c != 0) {
                if *first > 0 {
                    let vector: Vec<FieldElement> =
                        v.iter().map(|&c| tower.integer(level, c)).collect();
                    let q = self.evaluate(&vector)?;
                    if !q.is_zero() {
                        let q_inv = q.inv().map_err(FormsError::Field)?;
                        let integral = (0..n).all(|j| {
                            self.diag[j]
                                .checked_mul(&vector[j])
                                .and_then(|t| t.checked_mul(&two))
                                .and_then(|t| t.checked_mul(&q_inv))
                                .map(|t| t.is_algebraic_integer())
                                .unwrap_or(false)
                        });
                        if integral {
                            let r = self.reflection_matrix(&vector)?;
                            if seen.insert(flattened_key(&r)) {
                                out.push(r);
                            }
                        }
                    }
                }
            }
            // advance odometer
            let mut k = n;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                if v[k] < height_bound {
                    v[k] += 1;
                    break;
                }
                v[k] = -height_bound;
            }
        }
    }
}

/// Stable comparison key: the flattened rational coordinates of all entries.
fn flattened_key(m: &TowerMatrix) -> Vec<Rat> {
    let mut key = Vec::new();
    for e in m.flattened() {
        key.extend(e.coords().iter().cloned());
    }
    key
}

/// A diagonal Hermitian form at a quadratic step: coefficients fixed by the
/// step conjugation, pairing `sum g_i x_i conj(y_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermitianForm {
    diag: Vec<FieldElement>,
}

impl HermitianForm {
    /// Build from coefficients at level >= 1; each must satisfy
    /// `conj(g) = g`.
    pub fn new(coefficients: Vec<FieldElement>) -> Result<HermitianForm, FormsError> {
        assert!(!coefficients.is_empty(), "form must have at least one coefficient");
        if coefficients.iter().any(|c| c.is_zero()) {
            return Err(FormsError::Field(NumFieldError::ZeroElement));
        }
        let gram = TowerMatrix::diagonal(coefficients).map_err(FormsError::Field)?;
        let diag: Vec<FieldElement> = (0..gram.size()).map(|i| gram.entry(i, i).clone()).collect();
        for g in &diag {
            if g.galois_conjugate().map_err(FormsError::Field)? != *g {
                return Err(FormsError::NotHermitian);
            }
        }
        Ok(HermitianForm { diag })
    }

    /// Lift a quadratic form into the top level of `tower`, where it defines
    /// the Hermitian extension used by unitary groups.
    pub fn from_quadratic(
        form: &DiagonalForm,
        tower: &FieldTower,
    ) -> Result<HermitianForm, FormsError> {
        let level = tower.top_level();
        let diag = form
            .coefficients()
            .iter()
            .map(|g| g.lift_to(tower, level))
            .collect::<Result<Vec<_>, _>>()
            .map_err(FormsError::Field)?;
        HermitianForm::new(diag)
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.diag
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn tower(&self) -> &FieldTower {
        self.diag[0].tower()
    }

    pub fn level(&self) -> usize {
        self.diag[0].level()
    }

    pub fn gram_matrix(&self) -> TowerMatrix {
        TowerMatrix::diagonal(self.diag.clone()).expect("coefficients share one level")
    }

    /// `sum g_i x_i conj(x_i)`. The value is fixed by the conjugation.
    pub fn evaluate(&self, vector: &[FieldElement]) -> Result<FieldElement, FormsError> {
        if vector.len() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let mut acc = self.tower().zero(self.level());
        for (g, x) in self.diag.iter().zip(vector) {
            let x_here = x.lift_to(self.tower(), self.level()).map_err(FormsError::Field)?;
            let conj = x_here.galois_conjugate().map_err(FormsError::Field)?;
            acc = acc.checked_add(&g.checked_mul(&x_here)?.checked_mul(&conj)?)?;
        }
        Ok(acc)
    }

    /// Check `A^dagger G A = G` and `det A = 1`, where the dagger is the
    /// conjugate transpose through the step conjugation.
    pub fn is_special_unitary(&self, a: &TowerMatrix) -> Result<IsometryCheck, FormsError> {
        if a.size() != self.dimension() {
            return Err(FormsError::DimensionMismatch);
        }
        let g = self.gram_matrix();
        let a_here = a.lift_to(self.tower(), self.level()).map_err(FormsError::Field)?;
        let transformed = a_here.conjugate_transpose()?.mul(&g)?.mul(&a_here)?;
        for i in 0..g.size() {
            for j in 0..g.size() {
                if g.entry(i, j) != transformed.entry(i, j) {
                    return Ok(IsometryCheck::fail(IsometryViolation::GramEntry {
                        row: i,
                        col: j,
                        expected: g.entry(i, j).clone(),
                        found: transformed.entry(i, j).clone(),
                    }));
                }
            }
        }
        let det = a_here.det();
        if !det.is_one() {
            return Ok(IsometryCheck::fail(IsometryViolation::Determinant { found: det }));
        }
        Ok(IsometryCheck::pass())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn rationals() -> FieldTower {
        FieldTower::rationals()
    }

    fn sqrt2_tower() -> FieldTower {
        let base = rationals();
        let two = base.rational(0, q(2));
        base.adjoin_sqrt(&two, true).unwrap()
    }

    fn lorentz4(tower: &FieldTower) -> DiagonalForm {
        DiagonalForm::from_integers(tower, 0, &[1, 1, 1, -1])
    }

    fn vec_i(tower: &FieldTower, level: usize, coords: &[i64]) -> Vec<FieldElement> {
        coords.iter().map(|&c| tower.integer(level, c)).collect()
    }

    #[test]
    fn quadratic_evaluation() {
        let t = rationals();
        let j = lorentz4(&t);
        let value = j.evaluate(&vec_i(&t, 0, &[1, 2, 2, 2])).unwrap();
        assert_eq!(value.as_rational().unwrap(), q(5));
        assert_eq!(
            j.evaluate(&vec_i(&t, 0, &[1, 2])).unwrap_err(),
            FormsError::DimensionMismatch
        );
        // bilinear pairing polarizes the form
        let x = vec_i(&t, 0, &[1, 0, 2, 1]);
        let y = vec_i(&t, 0, &[0, 3, 1, 1]);
        let qx = j.evaluate(&x).unwrap();
        let qy = j.evaluate(&y).unwrap();
        let sum: Vec<FieldElement> =
            x.iter().zip(&y).map(|(a, b)| a.checked_add(b).unwrap()).collect();
        let qsum = j.evaluate(&sum).unwrap();
        let twice_inner = j.inner(&x, &y).unwrap().scale(&q(2));
        assert_eq!(
            qsum,
            qx.checked_add(&qy).unwrap().checked_add(&twice_inner).unwrap()
        );
    }

    #[test]
    fn hyperplane_stabilizer_from_a_known_isometry() {
        let t = rationals();
        let j = lorentz4(&t);
        let k0 = TowerMatrix::from_integers(
            &t,
            0,
            &[&[1, 2, -2], &[2, 1, -2], &[2, 2, -3]],
        );
        assert!(j.restricted().is_special_isometry(&k0).unwrap().passed);
        let block = j.hyperplane_stabilizer_member(&k0).unwrap();
        assert!(j.is_special_isometry(&block).unwrap().passed);
        assert!(block.entry(0, 0).is_one());
        assert!(block.entry(0, 1).is_zero());
        assert_eq!(block.entry(1, 1), k0.entry(0, 0));

        // a non-isometry of the restriction is rejected
        let bad = TowerMatrix::from_integers(&t, 0, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(
            j.hyperplane_stabilizer_member(&bad).unwrap_err(),
            FormsError::NotAnIsometry
        );
    }

    #[test]
    fn isometry_check_reports_witnesses() {
        let t = rationals();
        let j = lorentz4(&t);
        assert!(j.is_special_isometry(&TowerMatrix::identity(&t, 0, 4)).unwrap().passed);

        // a single reflection preserves the form but has determinant -1
        let r = j.reflection_matrix(&vec_i(&t, 0, &[1, 1, 0, 1])).unwrap();
        let check = j.is_special_isometry(&r).unwrap();
        assert!(!check.passed);
        match check.violation.unwrap() {
            IsometryViolation::Determinant { found } => {
                assert_eq!(found.as_rational().unwrap(), q(-1));
            }
            other => panic!("expected determinant witness, got {other:?}"),
        }

        // a shear does not preserve the form: witness is a Gram entry
        let shear =
            TowerMatrix::from_integers(&t, 0, &[&[1, 1, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let check = j.is_special_isometry(&shear).unwrap();
        assert!(!check.passed);
        match check.violation.unwrap() {
            IsometryViolation::GramEntry { row, col, .. } => {
                assert!(row <= 1 && col <= 1);
            }
            other => panic!("expected gram witness, got {other:?}"),
        }
    }

    #[test]
    fn reflections_square_to_identity() {
        let t = rationals();
        let j = lorentz4(&t);
        let r = j.reflection_matrix(&vec_i(&t, 0, &[1, 1, 0, 1])).unwrap();
        assert!(r.mul(&r).unwrap().is_identity());
        assert_eq!(r.det().as_rational().unwrap(), q(-1));
        assert!(integral_entries(&r).all_integral);

        // (1,0,0,1) is isotropic for <1,1,1,-1>
        assert_eq!(
            j.reflection_matrix(&vec_i(&t, 0, &[1, 0, 0, 1])).unwrap_err(),
            FormsError::IsotropicVector
        );
    }

    #[test]
    fn sampled_isometries_verify_and_are_deterministic() {
        let t = rationals();
        let j = DiagonalForm::from_integers(&t, 0, &[1, 1, -1]);
        let sample = j.sample_isometries(2, 50).unwrap();
        assert!(!sample.is_empty());
        for m in &sample {
            assert!(j.is_special_isometry(m).unwrap().passed);
            assert!(integral_entries(m).all_integral);
        }
        // identity arises as the square of any reflection
        assert!(sample.iter().any(|m| m.is_identity()));
        // deterministic: same call, same output
        let again = j.sample_isometries(2, 50).unwrap();
        assert_eq!(sample, again);
        // count zero is an empty sample, not an error
        assert!(j.sample_isometries(2, 0).unwrap().is_empty());
        // positive-definite forms in dimension 1 have no vectors at height 0
        let tiny = DiagonalForm::from_integers(&t, 0, &[1]);
        assert_eq!(tiny.sample_isometries(0, 4).unwrap_err(), FormsError::NoneFound);
    }

    #[test]
    fn hermitian_evaluation_and_scaling_law() {
        let l = sqrt2_tower();
        let j = lorentz4(&rationals());
        let h = HermitianForm::from_quadratic(&j, &l).unwrap();

        // H(1 + sqrt2, 1, 0, sqrt2) = N(1+sqrt2) + 1 + 0 - N(sqrt2) = -1 + 1 + 2
        let sqrt2 = l.step_sqrt(0);
        let one_plus = l.one(1).checked_add(&sqrt2).unwrap();
        let v = vec![one_plus, l.one(1), l.zero(1), sqrt2.clone()];
        let value = h.evaluate(&v).unwrap();
        assert_eq!(value, l.integer(1, 2));

        // restriction to conjugation-fixed vectors recovers the quadratic form
        let w = vec_i(&l, 1, &[1, 2, 2, 2]);
        assert_eq!(h.evaluate(&w).unwrap(), l.integer(1, 5));

        // H(lambda x) = N(lambda) H(x), with the norm lifted back up
        let mut rng = StdRng::seed_from_u64(0x5eed_0005);
        for _ in 0..25 {
            let lambda = l
                .element(1, vec![q(rng.gen_range(-4..=4)), q(rng.gen_range(-4..=4))])
                .unwrap();
            if lambda.is_zero() {
                continue;
            }
            let x: Vec<FieldElement> = (0..4)
                .map(|_| {
                    l.element(1, vec![q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3))])
                        .unwrap()
                })
                .collect();
            let scaled: Vec<FieldElement> =
                x.iter().map(|xi| xi.checked_mul(&lambda).unwrap()).collect();
            let norm = lambda
                .relative_norm()
                .unwrap()
                .lift_to(&l, 1)
                .unwrap();
            let left = h.evaluate(&scaled).unwrap();
            let right = norm.checked_mul(&h.evaluate(&x).unwrap()).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn unitary_check_accepts_the_norm_one_diagonal() {
        let l = sqrt2_tower();
        let j = lorentz4(&rationals());
        let h = HermitianForm::from_quadratic(&j, &l).unwrap();

        // u = 3 + 2 sqrt2 has norm one, so conj(u) = 1/u and
        // Diag(u^-3, u, u, u) is special unitary
        let u = l.element(1, vec![q(3), q(2)]).unwrap();
        let c = TowerMatrix::diagonal(vec![
            u.pow(-3).unwrap(),
            u.clone(),
            u.clone(),
            u.clone(),
        ])
        .unwrap();
        assert!(h.is_special_unitary(&c).unwrap().passed);

        // u = 2 is not a unit: the Gram condition already fails
        let c2 = TowerMatrix::diagonal(vec![
            l.rational(1, Rat::new(1.into(), 8.into())),
            l.integer(1, 2),
            l.integer(1, 2),
            l.integer(1, 2),
        ])
        .unwrap();
        let check = h.is_special_unitary(&c2).unwrap();
        assert!(!check.passed);
        assert!(matches!(check.violation, Some(IsometryViolation::GramEntry { .. })));

        // coefficients must be conjugation-fixed
        assert_eq!(
            HermitianForm::new(vec![l.step_sqrt(0)]).unwrap_err(),
            FormsError::NotHermitian
        );
    }

    #[test]
    fn integrality_reporting_lists_offending_positions() {
        let t = rationals();
        let m = TowerMatrix::from_rationals(
            &t,
            0,
            &[
                vec![q(1), Rat::new(1.into(), 2.into())],
                vec![q(3), q(4)],
            ],
        )
        .unwrap();
        let report = integral_entries(&m);
        assert!(!report.all_integral);
        assert_eq!(report.non_integral, vec![(0, 1)]);
    }
}
