//! Exact square matrices over a tower level.
//!
//! A [`TowerMatrix`] stores `n x n` entries as [`FieldElement`]s normalized
//! to one common tower level at construction, so internal arithmetic never
//! mixes levels. Binary operations between matrices of compatible towers
//! lift the lower operand automatically, mirroring element arithmetic.
//!
//! Linear algebra is exact: determinants and inverses by Gaussian
//! elimination over the field, plus a [`RowSpace`] for incremental span
//! dimension and [`kernel_basis`] for nullspaces of rectangular systems.

use crate::numfield::{FieldElement, FieldTower, NumFieldError};
use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerMatrix {
    tower: FieldTower,
    level: usize,
    n: usize,
    /// Row-major.
    entries: Vec<FieldElement>,
}

impl TowerMatrix {
    /// Build from rows, lifting every entry to the deepest tower level
    /// present. All entries must live in one compatible tower chain.
    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<TowerMatrix, NumFieldError> {
        let n = rows.len();
        assert!(n > 0, "matrix must be nonempty");
        if rows.iter().any(|r| r.len() != n) {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut tower = rows[0][0].tower().clone();
        let mut level = 0;
        for row in &rows {
            for e in row {
                if e.tower().top_level() > tower.top_level() {
                    tower = e.tower().clone();
                }
                level = level.max(e.level());
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            for e in row {
                entries.push(e.lift_to(&tower, level)?);
            }
        }
        Ok(TowerMatrix { tower, level, n, entries })
    }

    pub fn from_rationals(
        tower: &FieldTower,
        level: usize,
        rows: &[Vec<Rat>],
    ) -> Result<TowerMatrix, NumFieldError> {
        let n = rows.len();
        assert!(n > 0, "matrix must be nonempty");
        if rows.iter().any(|r| r.len() != n) {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            for value in row {
                entries.push(tower.rational(level, value.clone()));
            }
        }
        Ok(TowerMatrix { tower: tower.clone(), level, n, entries })
    }

    /// Convenience constructor for integer matrices.
    pub fn from_integers(tower: &FieldTower, level: usize, rows: &[&[i64]]) -> TowerMatrix {
        let rational_rows: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Rat::from_integer(v.into())).collect())
            .collect();
        TowerMatrix::from_rationals(tower, level, &rational_rows)
            .expect("integer rows are always compatible")
    }

    pub fn identity(tower: &FieldTower, level: usize, n: usize) -> TowerMatrix {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i == j { tower.one(level) } else { tower.zero(level) });
            }
        }
        TowerMatrix { tower: tower.clone(), level, n, entries }
    }

    pub fn diagonal(diag: Vec<FieldElement>) -> Result<TowerMatrix, NumFieldError> {
        let n = diag.len();
        assert!(n > 0, "matrix must be nonempty");
        let mut tower = diag[0].tower().clone();
        let mut level = 0;
        for e in &diag {
            if e.tower().top_level() > tower.top_level() {
                tower = e.tower().clone();
            }
            level = level.max(e.level());
        }
        let mut entries = vec![tower.zero(level); n * n];
        for (i, e) in diag.into_iter().enumerate() {
            entries[i * n + i] = e.lift_to(&tower, level)?;
        }
        Ok(TowerMatrix { tower, level, n, entries })
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &FieldElement {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<FieldElement>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j).clone()).collect())
            .collect()
    }

    /// All entries as one flat row-major vector (for span computations).
    pub fn flattened(&self) -> Vec<FieldElement> {
        self.entries.clone()
    }

    /// Lift every entry into `tower` at `level`.
    pub fn lift_to(&self, tower: &FieldTower, level: usize) -> Result<TowerMatrix, NumFieldError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(e.lift_to(tower, level)?);
        }
        Ok(TowerMatrix { tower: tower.clone(), level, n: self.n, entries })
    }

    fn promote(a: &TowerMatrix, b: &TowerMatrix) -> Result<(TowerMatrix, TowerMatrix), NumFieldError> {
        if a.n != b.n {
            return Err(NumFieldError::LevelMismatch);
        }
        let level = a.level.max(b.level);
        let tower = if a.tower.top_level() >= b.tower.top_level() { &a.tower } else { &b.tower };
        Ok((a.lift_to(tower, level)?, b.lift_to(tower, level)?))
    }

    pub fn add(&self, other: &TowerMatrix) -> Result<TowerMatrix, NumFieldError> {
        let (a, b) = TowerMatrix::promote(self, other)?;
        let entries = a
            .entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| x.checked_add(y))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TowerMatrix { tower: a.tower, level: a.level, n: a.n, entries })
    }

    pub fn sub(&self, other: &TowerMatrix) -> Result<TowerMatrix, NumFieldError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TowerMatrix {
        TowerMatrix {
            tower: self.tower.clone(),
            level: self.level,
            n: self.n,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn scale(&self, by: &FieldElement) -> Result<TowerMatrix, NumFieldError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(e.checked_mul(by)?);
        }
        // scaling by a deeper element may raise the level
        TowerMatrix::from_rows(
            (0..self.n)
                .map(|i| entries[i * self.n..(i + 1) * self.n].to_vec())
                .collect(),
        )
    }

    pub fn mul(&self, other: &TowerMatrix) -> Result<TowerMatrix, NumFieldError> {
        let (a, b) = TowerMatrix::promote(self, other)?;
        let n = a.n;
        let zero = a.tower.zero(a.level);
        let mut entries = vec![zero; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = &a.entries[i * n + k];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let product = aik.checked_mul(&b.entries[k * n + j])?;
                    entries[i * n + j] = entries[i * n + j].checked_add(&product)?;
                }
            }
        }
        Ok(TowerMatrix { tower: a.tower, level: a.level, n, entries })
    }

    pub fn mul_vector(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>, NumFieldError> {
        if v.len() != self.n {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = self.tower.zero(self.level);
            for j in 0..self.n {
                acc = acc.checked_add(&self.entry(i, j).checked_mul(&v[j])?)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn transpose(&self) -> TowerMatrix {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entries[j * n + i].clone());
            }
        }
        TowerMatrix { tower: self.tower.clone(), level: self.level, n, entries }
    }

    /// Apply the top-step Galois conjugation to every entry.
    pub fn entrywise_conjugate(&self) -> Result<TowerMatrix, NumFieldError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(e.galois_conjugate()?);
        }
        Ok(TowerMatrix { tower: self.tower.clone(), level: self.level, n: self.n, entries })
    }

    /// Conjugate transpose: transpose with every entry Galois-conjugated.
    pub fn conjugate_transpose(&self) -> Result<TowerMatrix, NumFieldError> {
        self.transpose().entrywise_conjugate()
    }

    pub fn trace(&self) -> FieldElement {
        let mut acc = self.tower.zero(self.level);
        for i in 0..self.n {
            acc = acc
                .checked_add(self.entry(i, i))
                .expect("entries share one level");
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let e = self.entry(i, j);
                if i == j { e.is_one() } else { e.is_zero() }
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// True when every entry is an algebraic integer.
    pub fn all_entries_integral(&self) -> bool {
        self.entries.iter().all(|e| e.is_algebraic_integer())
    }

    /// Exact determinant by Gaussian elimination with row swaps.
    pub fn det(&self) -> FieldElement {
        let n = self.n;
        let mut work = self.entries.clone();
        let mut det = self.tower.one(self.level);
        let mut negate = false;
        for col in 0..n {
            let pivot_row = match (col..n).find(|&r| !work[r * n + col].is_zero()) {
                Some(r) => r,
                None => return self.tower.zero(self.level),
            };
            if pivot_row != col {
                for j in 0..n {
                    work.swap(pivot_row * n + j, col * n + j);
                }
                negate = !negate;
            }
            let pivot = work[col * n + col].clone();
            det = det.checked_mul(&pivot).expect("one level");
            let pivot_inv = pivot.inv().expect("pivot nonzero");
            for r in (col + 1)..n {
                let factor = work[r * n + col].checked_mul(&pivot_inv).expect("one level");
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let delta = factor.checked_mul(&work[col * n + j]).expect("one level");
                    work[r * n + j] = work[r * n + j].checked_sub(&delta).expect("one level");
                }
            }
        }
        if negate {
            det.neg()
        } else {
            det
        }
    }

    /// Exact inverse by Gauss-Jordan elimination; `DivisionByZero` when
    /// singular.
    pub fn inverse(&self) -> Result<TowerMatrix, NumFieldError> {
        let n = self.n;
        let mut work = self.entries.clone();
        let mut inv = TowerMatrix::identity(&self.tower, self.level, n).entries;
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !work[r * n + col].is_zero())
                .ok_or(NumFieldError::DivisionByZero)?;
            if pivot_row != col {
                for j in 0..n {
                    work.swap(pivot_row * n + j, col * n + j);
                    inv.swap(pivot_row * n + j, col * n + j);
                }
            }
            let pivot_inv = work[col * n + col].inv()?;
            for j in 0..n {
                work[col * n + j] = work[col * n + j].checked_mul(&pivot_inv)?;
                inv[col * n + j] = inv[col * n + j].checked_mul(&pivot_inv)?;
            }
            for r in 0..n {
                if r == col || work[r * n + col].is_zero() {
                    continue;
                }
                let factor = work[r * n + col].clone();
                for j in 0..n {
                    let dw = factor.checked_mul(&work[col * n + j])?;
                    work[r * n + j] = work[r * n + j].checked_sub(&dw)?;
                    let di = factor.checked_mul(&inv[col * n + j])?;
                    inv[r * n + j] = inv[r * n + j].checked_sub(&di)?;
                }
            }
        }
        Ok(TowerMatrix { tower: self.tower.clone(), level: self.level, n, entries: inv })
    }

    pub fn pow(&self, exp: u32) -> TowerMatrix {
        let mut acc = TowerMatrix::identity(&self.tower, self.level, self.n);
        for _ in 0..exp {
            acc = acc.mul(self).expect("same shape");
        }
        acc
    }
}

/// Incrementally maintained row space over one tower level, for exact span
/// dimensions. Rows are reduced against a pivoted basis on insertion.
#[derive(Debug)]
pub struct RowSpace {
    tower: FieldTower,
    level: usize,
    width: usize,
    /// Sorted by pivot column; each row is normalized to pivot 1 and fully
    /// reduced against the others.
    basis: Vec<(usize, Vec<FieldElement>)>,
}

impl RowSpace {
    pub fn new(tower: &FieldTower, level: usize, width: usize) -> RowSpace {
        RowSpace { tower: tower.clone(), level, width, basis: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Reduce `row` against the basis; if independent, add it and return
    /// `true`.
    pub fn insert(&mut self, row: &[FieldElement]) -> Result<bool, NumFieldError> {
        if row.len() != self.width {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut v: Vec<FieldElement> = row
            .iter()
            .map(|e| e.lift_to(&self.tower, self.level))
            .collect::<Result<_, _>>()?;
        for (pivot, basis_row) in &self.basis {
            let c = v[*pivot].clone();
            if c.is_zero() {
                continue;
            }
            for (x, b) in v.iter_mut().zip(basis_row) {
                *x = x.checked_sub(&c.checked_mul(b)?)?;
            }
        }
        let pivot = match v.iter().position(|e| !e.is_zero()) {
            Some(p) => p,
            None => return Ok(false),
        };
        let inv = v[pivot].inv()?;
        for x in v.iter_mut() {
            *x = x.checked_mul(&inv)?;
        }
        // back-substitute into existing rows to keep the basis fully reduced
        for (_, basis_row) in self.basis.iter_mut() {
            let c = basis_row[pivot].clone();
            if c.is_zero() {
                continue;
            }
            for (b, x) in basis_row.iter_mut().zip(&v) {
                *b = b.checked_sub(&c.checked_mul(x)?)?;
            }
        }
        let at = self.basis.partition_point(|(p, _)| *p < pivot);
        self.basis.insert(at, (pivot, v));
        Ok(true)
    }

    pub fn basis_rows(&self) -> Vec<Vec<FieldElement>> {
        self.basis.iter().map(|(_, r)| r.clone()).collect()
    }
}

/// Basis of the solution space of `rows * x = 0` over the field, where each
/// row lists `width` coefficients at the given tower level. Basis vectors
/// set one free coordinate to 1, in ascending free-column order.
pub fn kernel_basis(
    tower: &FieldTower,
    level: usize,
    width: usize,
    rows: &[Vec<FieldElement>],
) -> Result<Vec<Vec<FieldElement>>, NumFieldError> {
    let mut space = RowSpace::new(tower, level, width);
    for row in rows {
        space.insert(row)?;
    }
    let pivots: Vec<usize> = space.basis.iter().map(|(p, _)| *p).collect();
    let mut kernel = Vec::new();
    for free in 0..width {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![tower.zero(level); width];
        v[free] = tower.one(level);
        for (pivot, row) in &space.basis {
            v[*pivot] = row[free].neg();
        }
        kernel.push(v);
    }
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn determinant_and_inverse_oracles() {
        let t = rationals();
        let a = TowerMatrix::from_integers(&t, 0, &[&[1, 2], &[3, 4]]);
        assert_eq!(a.det().as_rational().unwrap(), q(-2));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&a).unwrap().is_identity());

        let singular = TowerMatrix::from_integers(&t, 0, &[&[1, 2], &[2, 4]]);
        assert!(singular.det().is_zero());
        assert_eq!(singular.inverse().unwrap_err(), NumFieldError::DivisionByZero);

        // row swaps flip the determinant sign
        let swapped = TowerMatrix::from_integers(&t, 0, &[&[0, 1], &[1, 0]]);
        assert_eq!(swapped.det().as_rational().unwrap(), q(-1));
    }

    #[test]
    fn product_and_transpose_laws() {
        let t = rationals();
        let a = TowerMatrix::from_integers(&t, 0, &[&[1, 2], &[3, 4]]);
        let b = TowerMatrix::from_integers(&t, 0, &[&[0, 1], &[1, 1]]);
        let c = TowerMatrix::from_integers(&t, 0, &[&[2, 0], &[1, 1]]);
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        assert_eq!(left, right);
        // (AB)^T = B^T A^T
        assert_eq!(
            a.mul(&b).unwrap().transpose(),
            b.transpose().mul(&a.transpose()).unwrap()
        );
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.trace().as_rational().unwrap(), q(5));
    }

    #[test]
    fn mixed_level_products_lift_the_rational_operand() {
        let l = sqrt2_tower();
        let h = TowerMatrix::diagonal(vec![l.step_sqrt(0), l.one(1)]).unwrap();
        let hh = h.mul(&h).unwrap();
        assert_eq!(hh, TowerMatrix::from_integers(&l, 1, &[&[2, 0], &[0, 1]]));

        let rational_part = TowerMatrix::from_integers(&rationals(), 0, &[&[0, 1], &[1, 0]]);
        let product = h.mul(&rational_part).unwrap();
        assert_eq!(product.level(), 1);
        assert_eq!(product.entry(0, 1), &l.step_sqrt(0));
        assert!(product.entry(0, 0).is_zero());
    }

    #[test]
    fn conjugate_transpose_flips_the_square_root() {
        let l = sqrt2_tower();
        let s = l.step_sqrt(0);
        let m = TowerMatrix::from_rows(vec![
            vec![l.one(1), s.clone()],
            vec![l.zero(1), l.one(1)],
        ])
        .unwrap();
        let ct = m.conjugate_transpose().unwrap();
        assert_eq!(ct.entry(1, 0), &s.neg());
        assert!(ct.entry(0, 1).is_zero());
        // conjugate transpose is an involution
        assert_eq!(ct.conjugate_transpose().unwrap(), m);
    }

    #[test]
    fn row_space_dimension_grows_only_on_independent_rows() {
        let t = rationals();
        let mut space = RowSpace::new(&t, 0, 3);
        let e = |a: i64, b: i64, c: i64| vec![t.integer(0, a), t.integer(0, b), t.integer(0, c)];
        assert!(space.insert(&e(1, 0, 0)).unwrap());
        assert!(space.insert(&e(0, 1, 0)).unwrap());
        assert!(!space.insert(&e(3, -2, 0)).unwrap());
        assert_eq!(space.dim(), 2);
        assert!(space.insert(&e(1, 1, 1)).unwrap());
        assert_eq!(space.dim(), 3);
    }

    #[test]
    fn kernel_of_a_rank_one_system() {
        let t = rationals();
        let rows = vec![vec![t.integer(0, 1), t.integer(0, 1)]];
        let kernel = kernel_basis(&t, 0, 2, &rows).unwrap();
        assert_eq!(kernel.len(), 1);
        assert_eq!(kernel[0][0].as_rational().unwrap(), q(-1));
        assert!(kernel[0][1].is_one());

        // full-rank system has trivial kernel
        let rows = vec![
            vec![t.integer(0, 1), t.integer(0, 0)],
            vec![t.integer(0, 1), t.integer(0, 1)],
        ];
        assert!(kernel_basis(&t, 0, 2, &rows).unwrap().is_empty());
    }

    #[test]
    fn matrix_powers() {
        let t = rationals();
        let a = TowerMatrix::from_integers(&t, 0, &[&[1, 1], &[0, 1]]);
        let a5 = a.pow(5);
        assert_eq!(a5.entry(0, 1).as_rational().unwrap(), q(5));
        assert!(a.pow(0).is_identity());
    }

    #[test]
    fn zero_and_one_checks() {
        let t = rationals();
        assert!(TowerMatrix::identity(&t, 0, 3).is_identity());
        assert!(!TowerMatrix::identity(&t, 0, 3).is_zero());
        let z = TowerMatrix::from_integers(&t, 0, &[&[0, 0], &[0, 0]]);
        assert!(z.is_zero());
        let half = TowerMatrix::from_rationals(&t, 0, &[vec![Rat::new(1.into(), 2.into())]]).unwrap();
        assert!(!half.all_entries_integral());
        assert!(TowerMatrix::identity(&t, 0, 2).all_entries_integral());
    }
}
