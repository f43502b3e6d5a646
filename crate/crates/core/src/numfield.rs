//! Towers of real quadratic extensions over a totally real base field.
//!
//! A [`FieldTower`] is a base field `Q(theta)` — theta a root of a monic,
//! squarefree, irreducible polynomial with all roots real — together with a
//! chain of quadratic steps, each adjoining the square root of a nonzero
//! non-square element of the level below. Level `k` of the tower is the
//! field after `k` steps; its elements are [`FieldElement`]s holding exact
//! rational coordinates over the flattened basis
//! `{theta^i} x {1, sqrt(d_1)} x ... x {1, sqrt(d_k)}`.
//!
//! Real embeddings are enumerated as an [`EmbeddingHandle`]: a choice of
//! base root plus a sign branch for each adjoined square root whose image is
//! positive there. Signs of images are certified by interval refinement — a
//! [`SignCertificate`] carries a zero-excluding rational interval — so no
//! floating point is ever consulted.
//!
//! Square testing is exact at every level: a closed form reduces a quadratic
//! step to two square tests one level down, and at the base the candidate
//! square root is reconstructed from interval data against a denominator
//! bound (the discriminant of the rescaled minimal polynomial), then
//! confirmed or refuted by exact multiplication. Algebraic integrality is
//! decided from the characteristic polynomial of the multiplication
//! operator, which needs no integral-basis computation.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::interval::{exact_sqrt, Interval};
use crate::poly::{self, QPoly, RootInterval};
use crate::{Int, Rat};

/// Precision guard for certification loops; reaching it means a sign that
/// provably cannot be resolved, i.e. an internal logic error.
const MAX_PRECISION_BITS: u32 = 1 << 22;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NumFieldError {
    #[error("minimal polynomial is not squarefree")]
    NotSquarefree,
    #[error("minimal polynomial has complex roots, so the field is not totally real")]
    NotTotallyReal,
    #[error("minimal polynomial is reducible over the rationals")]
    NotIrreducible,
    #[error("radicand is already a square at its level")]
    RadicandIsSquare,
    #[error("extension is not totally real: an embedding sends the radicand to a negative number")]
    NotTotallyRealExtension,
    #[error("radicand is negative under the designated embedding, which must stay real")]
    DesignatedEmbeddingNotReal,
    #[error("division by a zero field element")]
    DivisionByZero,
    #[error("operands do not live in a common tower level")]
    LevelMismatch,
    #[error("operation requires a nonzero element")]
    ZeroElement,
    #[error("element lives at the base level; there is no quadratic step to conjugate over")]
    BaseLevelElement,
}

#[derive(Debug)]
struct StepData {
    /// Coordinates of the adjoined square root's radicand, relative to the
    /// level below this step.
    radicand_coords: Vec<Rat>,
}

#[derive(Debug)]
struct TowerInner {
    base_min_poly: QPoly,
    /// Isolating intervals for all real roots of the base polynomial,
    /// ascending. Total reality means this has full length.
    base_roots: Vec<RootInterval>,
    /// Which base root realizes the designated embedding.
    designated_root: usize,
    steps: Vec<StepData>,
}

impl TowerInner {
    fn base_degree(&self) -> usize {
        self.base_min_poly.degree().unwrap()
    }

    fn degree(&self, level: usize) -> usize {
        self.base_degree() << level
    }
}

/// A totally real base field plus a chain of quadratic extension steps.
/// Cheap to clone (shared immutable description).
#[derive(Debug, Clone)]
pub struct FieldTower {
    inner: Arc<TowerInner>,
}

impl PartialEq for FieldTower {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.inner, &other.inner) {
            return true;
        }
        self.inner.base_min_poly == other.inner.base_min_poly
            && self.inner.designated_root == other.inner.designated_root
            && self.inner.steps.len() == other.inner.steps.len()
            && self
                .inner
                .steps
                .iter()
                .zip(&other.inner.steps)
                .all(|(a, b)| a.radicand_coords == b.radicand_coords)
    }
}

impl Eq for FieldTower {}

impl FieldTower {
    /// Build a base field from a monic minimal polynomial (coefficients
    /// lowest degree first). Verifies squarefreeness, total reality, and
    /// irreducibility, in that order, and isolates all real roots.
    ///
    /// The designated embedding defaults to the largest real root; see
    /// [`FieldTower::with_designated_root`].
    pub fn make_base_field(min_poly_coeffs: &[Rat]) -> Result<FieldTower, NumFieldError> {
        let f = QPoly::new(min_poly_coeffs.to_vec());
        let degree = f.degree().unwrap_or(0);
        assert!(degree >= 1 && f.is_monic(), "base minimal polynomial must be monic of degree >= 1");
        if !f.is_squarefree() {
            return Err(NumFieldError::NotSquarefree);
        }
        if poly::count_real_roots(&f) != degree {
            return Err(NumFieldError::NotTotallyReal);
        }
        if !poly::is_irreducible_totally_real(&f) {
            return Err(NumFieldError::NotIrreducible);
        }
        let base_roots = poly::isolate_real_roots(&f);
        debug_assert_eq!(base_roots.len(), degree);
        let designated_root = base_roots.len() - 1;
        Ok(FieldTower {
            inner: Arc::new(TowerInner { base_min_poly: f, base_roots, designated_root, steps: Vec::new() }),
        })
    }

    /// The rational numbers as a degree-1 base field.
    pub fn rationals() -> FieldTower {
        FieldTower::make_base_field(&[Rat::zero(), Rat::one()]).expect("x is a valid minimal polynomial")
    }

    /// Re-designate which base root (index in ascending order) realizes the
    /// designated embedding. Only valid before any steps are adjoined.
    pub fn with_designated_root(&self, index: usize) -> FieldTower {
        assert!(self.inner.steps.is_empty(), "designated root must be fixed before adjoining steps");
        assert!(index < self.inner.base_roots.len(), "designated root index out of range");
        FieldTower {
            inner: Arc::new(TowerInner {
                base_min_poly: self.inner.base_min_poly.clone(),
                base_roots: self.inner.base_roots.clone(),
                designated_root: index,
                steps: Vec::new(),
            }),
        }
    }

    /// Adjoin the square root of `radicand` (an element of this tower's top
    /// level) as a new quadratic step.
    ///
    /// The radicand must be nonzero, not a square at its level, and positive
    /// under the designated embedding (so that embedding extends to the new
    /// level). With `require_totally_real`, every embedding image of the
    /// radicand must be certified positive.
    pub fn adjoin_sqrt(
        &self,
        radicand: &FieldElement,
        require_totally_real: bool,
    ) -> Result<FieldTower, NumFieldError> {
        let top = self.top_level();
        if radicand.level != top || !self.shares_prefix(&radicand.tower, top) {
            return Err(NumFieldError::LevelMismatch);
        }
        if radicand.is_zero() {
            return Err(NumFieldError::ZeroElement);
        }
        if radicand.is_square()?.is_some() {
            return Err(NumFieldError::RadicandIsSquare);
        }
        let here = radicand.with_tower(self);
        let sigma0 = self.designated_embedding(top);
        if here.certified_sign(&sigma0)?.sign == Sign::Negative {
            return Err(NumFieldError::DesignatedEmbeddingNotReal);
        }
        if require_totally_real {
            for e in self.embeddings(top) {
                if here.certified_sign(&e)?.sign == Sign::Negative {
                    return Err(NumFieldError::NotTotallyRealExtension);
                }
            }
        }
        let mut steps: Vec<StepData> = self
            .inner
            .steps
            .iter()
            .map(|s| StepData { radicand_coords: s.radicand_coords.clone() })
            .collect();
        steps.push(StepData { radicand_coords: radicand.coords.clone() });
        Ok(FieldTower {
            inner: Arc::new(TowerInner {
                base_min_poly: self.inner.base_min_poly.clone(),
                base_roots: self.inner.base_roots.clone(),
                designated_root: self.inner.designated_root,
                steps,
            }),
        })
    }

    pub fn base_min_poly(&self) -> &QPoly {
        &self.inner.base_min_poly
    }

    pub fn base_degree(&self) -> usize {
        self.inner.base_degree()
    }

    /// Number of quadratic steps; levels run from 0 (base) to this value.
    pub fn top_level(&self) -> usize {
        self.inner.steps.len()
    }

    /// Absolute degree of the given level over the rationals.
    pub fn degree(&self, level: usize) -> usize {
        assert!(level <= self.top_level());
        self.inner.degree(level)
    }

    pub fn designated_root_index(&self) -> usize {
        self.inner.designated_root
    }

    /// The radicand adjoined at `step` (0-based), as an element of level `step`.
    pub fn radicand(&self, step: usize) -> FieldElement {
        assert!(step < self.top_level());
        FieldElement {
            tower: self.clone(),
            level: step,
            coords: self.inner.steps[step].radicand_coords.clone(),
        }
    }

    /// The square root adjoined at `step`, as an element of level `step + 1`.
    pub fn step_sqrt(&self, step: usize) -> FieldElement {
        assert!(step < self.top_level());
        let mut coords = vec![Rat::zero(); self.degree(step + 1)];
        coords[self.degree(step)] = Rat::one();
        FieldElement { tower: self.clone(), level: step + 1, coords }
    }

    /// Element from explicit coordinates at a level.
    pub fn element(&self, level: usize, coords: Vec<Rat>) -> Result<FieldElement, NumFieldError> {
        if level > self.top_level() || coords.len() != self.degree(level) {
            return Err(NumFieldError::LevelMismatch);
        }
        Ok(FieldElement { tower: self.clone(), level, coords })
    }

    pub fn rational(&self, level: usize, value: Rat) -> FieldElement {
        let mut coords = vec![Rat::zero(); self.degree(level)];
        coords[0] = value;
        FieldElement { tower: self.clone(), level, coords }
    }

    pub fn integer(&self, level: usize, value: i64) -> FieldElement {
        self.rational(level, Rat::from_integer(value.into()))
    }

    pub fn zero(&self, level: usize) -> FieldElement {
        self.rational(level, Rat::zero())
    }

    pub fn one(&self, level: usize) -> FieldElement {
        self.rational(level, Rat::one())
    }

    /// The base generator theta as a level-0 element (for a degree-1 base
    /// this is the rational root itself).
    pub fn base_generator(&self) -> FieldElement {
        let x = QPoly::x();
        let (_, rem) = x.divrem(&self.inner.base_min_poly);
        let mut coords = vec![Rat::zero(); self.base_degree()];
        for (i, c) in rem.coeffs().iter().enumerate() {
            coords[i] = c.clone();
        }
        FieldElement { tower: self.clone(), level: 0, coords }
    }

    /// True when `other` describes the same base field and the same first
    /// `level` steps, so coordinates up to `level` mean the same thing.
    pub fn shares_prefix(&self, other: &FieldTower, level: usize) -> bool {
        if level > self.top_level() || level > other.top_level() {
            return false;
        }
        if Arc::ptr_eq(&self.inner, &other.inner) {
            return true;
        }
        self.inner.base_min_poly == other.inner.base_min_poly
            && self.inner.designated_root == other.inner.designated_root
            && (0..level).all(|i| {
                self.inner.steps[i].radicand_coords == other.inner.steps[i].radicand_coords
            })
    }

    /// All real embeddings of the given level, in a deterministic order:
    /// base roots ascending, then branch choices lexicographic with the
    /// positive branch first.
    pub fn embeddings(&self, level: usize) -> Vec<EmbeddingHandle> {
        assert!(level <= self.top_level());
        let mut handles: Vec<EmbeddingHandle> = (0..self.inner.base_roots.len())
            .map(|i| EmbeddingHandle {
                tower: self.clone(),
                level: 0,
                base_root: i,
                branches: Vec::new(),
            })
            .collect();
        for step in 0..level {
            let radicand = self.radicand(step);
            let mut next = Vec::with_capacity(handles.len() * 2);
            for h in handles {
                let cert = radicand
                    .certified_sign(&h)
                    .expect("tower radicands are nonzero by construction");
                if cert.sign == Sign::Positive {
                    next.push(h.extended(true));
                    next.push(h.extended(false));
                }
            }
            handles = next;
        }
        handles
    }

    /// The designated embedding of a level: the designated base root with
    /// the positive branch at every step. Always real, because adjoining
    /// requires radicands positive there.
    pub fn designated_embedding(&self, level: usize) -> EmbeddingHandle {
        assert!(level <= self.top_level());
        EmbeddingHandle {
            tower: self.clone(),
            level,
            base_root: self.inner.designated_root,
            branches: vec![true; level],
        }
    }
}

/// Sign of a certified nonzero real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

/// One real embedding of a tower level: a base root choice plus a sign
/// branch for each adjoined square root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingHandle {
    tower: FieldTower,
    level: usize,
    base_root: usize,
    /// Per step: `true` selects the positive square root of the radicand's
    /// image, `false` the negative one. Length equals `level`.
    branches: Vec<bool>,
}

impl EmbeddingHandle {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_root_index(&self) -> usize {
        self.base_root
    }

    pub fn branches(&self) -> &[bool] {
        &self.branches
    }

    pub fn is_designated(&self) -> bool {
        self.base_root == self.tower.inner.designated_root && self.branches.iter().all(|&b| b)
    }

    fn extended(&self, positive: bool) -> EmbeddingHandle {
        let mut branches = self.branches.clone();
        branches.push(positive);
        EmbeddingHandle {
            tower: self.tower.clone(),
            level: self.level + 1,
            base_root: self.base_root,
            branches,
        }
    }

    /// Isolating data for the embedding at roughly `bits` of precision: the
    /// base root enclosure followed by the signed enclosure of each adjoined
    /// square root's image.
    pub fn isolating_intervals(&self, bits: u32) -> Vec<Interval> {
        let root_iv = self.refined_base_root(bits);
        let mut out = vec![root_iv.clone()];
        for step in 0..self.level {
            let rad = self.tower.inner.steps[step].radicand_coords.clone();
            let enclosure = self
                .eval_resolving(&rad, step, bits)
                .expect("radicand image is positive on a real branch");
            let sqrt = enclosure.sqrt(bits).expect("positive radicand image");
            out.push(if self.branches[step] { sqrt } else { sqrt.neg() });
        }
        out
    }

    fn refined_base_root(&self, bits: u32) -> Interval {
        let width = Rat::new(Int::one(), Int::one() << bits);
        self.tower.inner.base_roots[self.base_root]
            .refine_to_width(&self.tower.inner.base_min_poly, &width)
            .to_interval()
    }

    /// Interval enclosure of the image of coordinates at `level`, or `None`
    /// when some radicand image is not yet certified positive at this
    /// precision (never happens on a real branch once `bits` is large
    /// enough).
    fn eval_coords(
        &self,
        coords: &[Rat],
        level: usize,
        base_root_iv: &Interval,
        bits: u32,
    ) -> Option<Interval> {
        if level == 0 {
            return Some(horner_enclosure(coords, base_root_iv));
        }
        let half = coords.len() / 2;
        let lower = self.eval_coords(&coords[..half], level - 1, base_root_iv, bits)?;
        let upper = self.eval_coords(&coords[half..], level - 1, base_root_iv, bits)?;
        let rad = self.eval_coords(
            &self.tower.inner.steps[level - 1].radicand_coords,
            level - 1,
            base_root_iv,
            bits,
        )?;
        if !rad.lo.is_positive() {
            return None;
        }
        let sqrt = rad.sqrt(bits)?;
        let signed = if self.branches[level - 1] { sqrt } else { sqrt.neg() };
        Some(lower.add(&upper.mul(&signed)))
    }

    /// Evaluate with automatic precision escalation until inner radicands
    /// resolve. `level` must be at most the handle's level.
    fn eval_resolving(&self, coords: &[Rat], level: usize, bits: u32) -> Option<Interval> {
        let mut b = bits.max(8);
        loop {
            let root_iv = self.refined_base_root(b);
            if let Some(iv) = self.eval_coords(coords, level, &root_iv, b) {
                return Some(iv);
            }
            b = b.checked_mul(2)?;
            assert!(b < MAX_PRECISION_BITS, "radicand sign failed to resolve; corrupted tower");
        }
    }

    /// Interval enclosure of `a`'s image under this embedding, at roughly
    /// `bits` of working precision (the result may be wider; refine by
    /// asking for more bits).
    pub fn enclosure(&self, a: &FieldElement, bits: u32) -> Result<Interval, NumFieldError> {
        if a.level != self.level || !self.tower.shares_prefix(&a.tower, a.level) {
            return Err(NumFieldError::LevelMismatch);
        }
        Ok(self
            .eval_resolving(&a.coords, a.level, bits)
            .expect("real-branch evaluation always resolves"))
    }
}

fn horner_enclosure(coords: &[Rat], x: &Interval) -> Interval {
    let mut acc = Interval::zero();
    for c in coords.iter().rev() {
        acc = acc.mul(x).add_rat(c);
    }
    acc
}

/// A certified sign: the witness interval encloses the element's image under
/// the embedding and excludes zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignCertificate {
    pub element: FieldElement,
    pub embedding: EmbeddingHandle,
    pub sign: Sign,
    pub witness_interval: Interval,
}

/// An exact algebraic number: rational coordinates over the flattened basis
/// of one tower level.
#[derive(Debug, Clone)]
pub struct FieldElement {
    tower: FieldTower,
    level: usize,
    coords: Vec<Rat>,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.coords == other.coords
            && self.tower.shares_prefix(&other.tower, self.level)
    }
}

impl Eq for FieldElement {}

impl FieldElement {
    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(|c| c.is_zero())
    }

    /// The exact rational value, when the element is rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    /// Reinterpret in a compatible (same-prefix) tower, e.g. to use a
    /// level-0 element of a taller tower.
    pub fn with_tower(&self, tower: &FieldTower) -> FieldElement {
        assert!(tower.shares_prefix(&self.tower, self.level), "incompatible tower");
        FieldElement { tower: tower.clone(), level: self.level, coords: self.coords.clone() }
    }

    /// Lift to a higher level of a compatible tower by zero-padding the new
    /// square-root coordinates.
    pub fn lift_to(&self, tower: &FieldTower, level: usize) -> Result<FieldElement, NumFieldError> {
        if level < self.level
            || level > tower.top_level()
            || !tower.shares_prefix(&self.tower, self.level)
        {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut coords = self.coords.clone();
        coords.resize(tower.degree(level), Rat::zero());
        Ok(FieldElement { tower: tower.clone(), level, coords })
    }

    /// Split a step element into its (lower, upper) components one level
    /// down: `a = lower + upper * sqrt(d)`.
    pub fn components(&self) -> Result<(FieldElement, FieldElement), NumFieldError> {
        if self.level == 0 {
            return Err(NumFieldError::BaseLevelElement);
        }
        let half = self.coords.len() / 2;
        let lower = FieldElement {
            tower: self.tower.clone(),
            level: self.level - 1,
            coords: self.coords[..half].to_vec(),
        };
        let upper = FieldElement {
            tower: self.tower.clone(),
            level: self.level - 1,
            coords: self.coords[half..].to_vec(),
        };
        Ok((lower, upper))
    }

    /// Assemble `lower + upper * sqrt(d)` at the next level of `tower`.
    pub fn from_components(
        tower: &FieldTower,
        lower: &FieldElement,
        upper: &FieldElement,
    ) -> Result<FieldElement, NumFieldError> {
        if lower.level != upper.level {
            return Err(NumFieldError::LevelMismatch);
        }
        let level = lower.level + 1;
        if level > tower.top_level()
            || !tower.shares_prefix(&lower.tower, lower.level)
            || !tower.shares_prefix(&upper.tower, upper.level)
        {
            return Err(NumFieldError::LevelMismatch);
        }
        let mut coords = lower.coords.clone();
        coords.extend(upper.coords.iter().cloned());
        Ok(FieldElement { tower: tower.clone(), level, coords })
    }

    fn combine(&self, other: &FieldElement) -> Result<(FieldTower, usize), NumFieldError> {
        let level = self.level.max(other.level);
        let big = if self.tower.top_level() >= other.tower.top_level() {
            &self.tower
        } else {
            &other.tower
        };
        if !big.shares_prefix(&self.tower, self.level) || !big.shares_prefix(&other.tower, other.level)
        {
            return Err(NumFieldError::LevelMismatch);
        }
        Ok((big.clone(), level))
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            tower: self.tower.clone(),
            level: self.level,
            coords: self.coords.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn scale(&self, by: &Rat) -> FieldElement {
        FieldElement {
            tower: self.tower.clone(),
            level: self.level,
            coords: self.coords.iter().map(|c| c * by).collect(),
        }
    }

    pub fn checked_add(&self, other: &FieldElement) -> Result<FieldElement, NumFieldError> {
        let (tower, level) = self.combine(other)?;
        let a = self.lift_to(&tower, level)?;
        let b = other.lift_to(&tower, level)?;
        let coords = a.coords.iter().zip(&b.coords).map(|(x, y)| x + y).collect();
        Ok(FieldElement { tower, level, coords })
    }

    pub fn checked_sub(&self, other: &FieldElement) -> Result<FieldElement, NumFieldError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &FieldElement) -> Result<FieldElement, NumFieldError> {
        let (tower, level) = self.combine(other)?;
        let a = self.lift_to(&tower, level)?;
        let b = other.lift_to(&tower, level)?;
        let coords = mul_coords(&tower.inner, level, &a.coords, &b.coords);
        Ok(FieldElement { tower, level, coords })
    }

    pub fn inv(&self) -> Result<FieldElement, NumFieldError> {
        let coords = inv_coords(&self.tower.inner, self.level, &self.coords)
            .ok_or(NumFieldError::DivisionByZero)?;
        Ok(FieldElement { tower: self.tower.clone(), level: self.level, coords })
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement, NumFieldError> {
        self.checked_mul(&other.inv()?)
    }

    /// Integer power; negative exponents invert first.
    pub fn pow(&self, exp: i64) -> Result<FieldElement, NumFieldError> {
        let base = if exp < 0 { self.inv()? } else { self.clone() };
        let mut acc = self.tower.one(self.level);
        for _ in 0..exp.unsigned_abs() {
            acc = acc.checked_mul(&base)?;
        }
        Ok(acc)
    }

    /// Sign of the image under a real embedding, certified by a
    /// zero-excluding witness interval.
    pub fn certified_sign(&self, e: &EmbeddingHandle) -> Result<SignCertificate, NumFieldError> {
        if self.is_zero() {
            return Err(NumFieldError::ZeroElement);
        }
        let mut bits = 32u32;
        loop {
            let iv = e.enclosure(self, bits)?;
            if let Some(sign) = iv.definite_sign() {
                return Ok(SignCertificate {
                    element: self.clone(),
                    embedding: e.clone(),
                    sign: if sign > 0 { Sign::Positive } else { Sign::Negative },
                    witness_interval: iv,
                });
            }
            bits *= 2;
            assert!(bits < MAX_PRECISION_BITS, "sign of a nonzero element failed to resolve");
        }
    }

    /// Number of non-designated real embeddings of the element's level with
    /// a positive image.
    pub fn sign_count(&self) -> Result<usize, NumFieldError> {
        if self.is_zero() {
            return Err(NumFieldError::ZeroElement);
        }
        let mut count = 0;
        for e in self.tower.embeddings(self.level) {
            if e.is_designated() {
                continue;
            }
            if self.certified_sign(&e)?.sign == Sign::Positive {
                count += 1;
            }
        }
        Ok(count)
    }

    /// The smallest tower level containing this element: descend while the
    /// top square-root coordinate half is identically zero.
    pub fn minimal_level(&self) -> usize {
        let mut cur = self.clone();
        while cur.level > 0 {
            let half = cur.coords.len() / 2;
            if cur.coords[half..].iter().all(|c| c.is_zero()) {
                cur = FieldElement {
                    tower: cur.tower.clone(),
                    level: cur.level - 1,
                    coords: cur.coords[..half].to_vec(),
                };
            } else {
                break;
            }
        }
        cur.level
    }

    /// Flip the sign of the top square root: `x + y*sqrt(d) -> x - y*sqrt(d)`.
    /// The involution fixing exactly the level below.
    pub fn galois_conjugate(&self) -> Result<FieldElement, NumFieldError> {
        if self.level == 0 {
            return Err(NumFieldError::BaseLevelElement);
        }
        let half = self.coords.len() / 2;
        let mut coords = self.coords.clone();
        for c in &mut coords[half..] {
            *c = -c.clone();
        }
        Ok(FieldElement { tower: self.tower.clone(), level: self.level, coords })
    }

    /// `a * conj(a)`, returned one level down (its top coordinate vanishes
    /// identically).
    pub fn relative_norm(&self) -> Result<FieldElement, NumFieldError> {
        let conj = self.galois_conjugate()?;
        let prod = self.checked_mul(&conj)?;
        let (lower, upper) = prod.components()?;
        assert!(upper.is_zero(), "norm must land in the level below");
        Ok(lower)
    }

    /// True iff the characteristic polynomial of multiplication-by-self on
    /// the rational basis of the ambient level has integer coefficients.
    pub fn is_algebraic_integer(&self) -> bool {
        char_poly(&self.multiplication_matrix()).iter().all(|c| c.denom().is_one())
    }

    /// The field norm down to the rationals: the determinant of
    /// multiplication-by-self on the rational basis of the ambient level.
    pub fn rational_norm(&self) -> Rat {
        let n = self.tower.degree(self.level);
        let coeffs = char_poly(&self.multiplication_matrix());
        let constant = coeffs.last().cloned().unwrap_or_else(Rat::one);
        if n % 2 == 0 {
            constant
        } else {
            -constant
        }
    }

    fn multiplication_matrix(&self) -> Vec<Vec<Rat>> {
        let n = self.tower.degree(self.level);
        let inner = &self.tower.inner;
        let mut mat = vec![vec![Rat::zero(); n]; n];
        for j in 0..n {
            let mut unit = vec![Rat::zero(); n];
            unit[j] = Rat::one();
            let col = mul_coords(inner, self.level, &self.coords, &unit);
            for (i, value) in col.into_iter().enumerate() {
                mat[i][j] = value;
            }
        }
        mat
    }

    /// Exact square test. Returns a square root (normalized so its first
    /// nonzero coordinate is positive) when one exists in the same level.
    pub fn is_square(&self) -> Result<Option<FieldElement>, NumFieldError> {
        if self.is_zero() {
            return Err(NumFieldError::ZeroElement);
        }
        let root = square_root_coords(&self.tower, self.level, &self.coords);
        Ok(root.map(|mut coords| {
            if let Some(first) = coords.iter().find(|c| !c.is_zero()) {
                if first.is_negative() {
                    for c in &mut coords {
                        *c = -c.clone();
                    }
                }
            }
            FieldElement { tower: self.tower.clone(), level: self.level, coords }
        }))
    }
}

impl std::ops::Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.checked_add(rhs).expect("incompatible tower levels in addition")
    }
}

impl std::ops::Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.checked_sub(rhs).expect("incompatible tower levels in subtraction")
    }
}

impl std::ops::Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.checked_mul(rhs).expect("incompatible tower levels in multiplication")
    }
}

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(self)
    }
}

// ---- coordinate-level arithmetic -----------------------------------------

fn mul_coords(inner: &TowerInner, level: usize, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if level == 0 {
        let pa = QPoly::new(a.to_vec());
        let pb = QPoly::new(b.to_vec());
        let (_, rem) = pa.mul(&pb).divrem(&inner.base_min_poly);
        let mut coords = vec![Rat::zero(); inner.base_degree()];
        for (i, c) in rem.coeffs().iter().enumerate() {
            coords[i] = c.clone();
        }
        coords
    } else {
        let half = a.len() / 2;
        let (a0, a1) = a.split_at(half);
        let (b0, b1) = b.split_at(half);
        let delta = &inner.steps[level - 1].radicand_coords;
        let t00 = mul_coords(inner, level - 1, a0, b0);
        let t11 = mul_coords(inner, level - 1, a1, b1);
        let t11d = mul_coords(inner, level - 1, &t11, delta);
        let t01 = mul_coords(inner, level - 1, a0, b1);
        let t10 = mul_coords(inner, level - 1, a1, b0);
        let mut out = Vec::with_capacity(a.len());
        for (x, y) in t00.iter().zip(&t11d) {
            out.push(x + y);
        }
        for (x, y) in t01.iter().zip(&t10) {
            out.push(x + y);
        }
        out
    }
}

fn inv_coords(inner: &TowerInner, level: usize, a: &[Rat]) -> Option<Vec<Rat>> {
    if a.iter().all(|c| c.is_zero()) {
        return None;
    }
    if level == 0 {
        let pa = QPoly::new(a.to_vec());
        let (g, s, _) = pa.xgcd(&inner.base_min_poly);
        debug_assert_eq!(g.degree(), Some(0), "minimal polynomial is irreducible");
        let (_, rem) = s.divrem(&inner.base_min_poly);
        let mut coords = vec![Rat::zero(); inner.base_degree()];
        for (i, c) in rem.coeffs().iter().enumerate() {
            coords[i] = c.clone();
        }
        Some(coords)
    } else {
        let half = a.len() / 2;
        let (a0, a1) = a.split_at(half);
        let delta = &inner.steps[level - 1].radicand_coords;
        // 1/(x + y sqrt(d)) = (x - y sqrt(d)) / (x^2 - y^2 d); the
        // denominator is nonzero because d is not a square one level down
        let x2 = mul_coords(inner, level - 1, a0, a0);
        let y2 = mul_coords(inner, level - 1, a1, a1);
        let y2d = mul_coords(inner, level - 1, &y2, delta);
        let denom: Vec<Rat> = x2.iter().zip(&y2d).map(|(p, q)| p - q).collect();
        let denom_inv = inv_coords(inner, level - 1, &denom)
            .expect("x^2 - y^2 d cannot vanish for nonzero x + y sqrt(d)");
        let lo = mul_coords(inner, level - 1, a0, &denom_inv);
        let hi = mul_coords(inner, level - 1, a1, &denom_inv);
        let mut out = Vec::with_capacity(a.len());
        out.extend(lo);
        out.extend(hi.into_iter().map(|c| -c));
        Some(out)
    }
}

/// Coefficients `[c_n, ..., c_1]` handling of Faddeev-LeVerrier: returns the
/// characteristic polynomial's non-leading coefficients, highest degree
/// first (`x^n + out[0] x^{n-1} + ... + out[n-1]`).
fn char_poly(mat: &[Vec<Rat>]) -> Vec<Rat> {
    let n = mat.len();
    let mut coeffs = Vec::with_capacity(n);
    let mut m: Vec<Vec<Rat>> = mat.to_vec();
    let mut c = -trace(&m);
    coeffs.push(c.clone());
    for k in 2..=n {
        // M_k = A (M_{k-1} + c_{k-1} I)
        let mut shifted = m.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += &c;
        }
        m = mat_mul(mat, &shifted);
        c = -&trace(&m) / Rat::from_integer(Int::from(k));
        coeffs.push(c.clone());
    }
    coeffs
}

fn trace(m: &[Vec<Rat>]) -> Rat {
    let mut t = Rat::zero();
    for (i, row) in m.iter().enumerate() {
        t += &row[i];
    }
    t
}

fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let mut out = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                let delta = &a[i][k] * &b[k][j];
                out[i][j] += delta;
            }
        }
    }
    out
}

// ---- exact square testing -------------------------------------------------

fn square_root_coords(tower: &FieldTower, level: usize, coords: &[Rat]) -> Option<Vec<Rat>> {
    if coords.iter().all(|c| c.is_zero()) {
        return Some(coords.to_vec());
    }
    if level == 0 {
        return base_square_root(tower, coords);
    }
    let inner = &tower.inner;
    let half = coords.len() / 2;
    let (p, q) = coords.split_at(half);
    let delta = &inner.steps[level - 1].radicand_coords;
    if q.iter().all(|c| c.is_zero()) {
        // (x)^2 = p or (y sqrt(d))^2 = p
        if let Some(x) = square_root_coords(tower, level - 1, p) {
            let mut out = x;
            out.resize(coords.len(), Rat::zero());
            return Some(out);
        }
        let delta_inv = inv_coords(inner, level - 1, delta).expect("radicand nonzero");
        let p_over_delta = mul_coords(inner, level - 1, p, &delta_inv);
        if let Some(y) = square_root_coords(tower, level - 1, &p_over_delta) {
            let mut out = vec![Rat::zero(); half];
            out.extend(y);
            return Some(out);
        }
        return None;
    }
    // General case x + y sqrt(d) with y != 0: from (x^2 + y^2 d) + 2xy sqrt(d)
    // = p + q sqrt(d), x^2 solves a quadratic with discriminant p^2 - q^2 d,
    // which must itself be a square one level down. At most one of the two
    // sign choices can be a square (their product is q^2 d / 4, and d is not
    // a square).
    let p2 = mul_coords(inner, level - 1, p, p);
    let q2 = mul_coords(inner, level - 1, q, q);
    let q2d = mul_coords(inner, level - 1, &q2, delta);
    let norm: Vec<Rat> = p2.iter().zip(&q2d).map(|(a, b)| a - b).collect();
    let w = square_root_coords(tower, level - 1, &norm)?;
    let half_rat = Rat::new(Int::one(), Int::from(2));
    for w_signed in [w.clone(), w.iter().map(|c| -c.clone()).collect::<Vec<_>>()] {
        let x2: Vec<Rat> = p.iter().zip(&w_signed).map(|(a, b)| (a + b) * &half_rat).collect();
        if x2.iter().all(|c| c.is_zero()) {
            continue;
        }
        if let Some(x) = square_root_coords(tower, level - 1, &x2) {
            if x.iter().all(|c| c.is_zero()) {
                continue;
            }
            let two_x: Vec<Rat> = x.iter().map(|c| c * Rat::from_integer(Int::from(2))).collect();
            let inv_2x = inv_coords(inner, level - 1, &two_x).expect("x nonzero");
            let y = mul_coords(inner, level - 1, q, &inv_2x);
            let mut candidate = x;
            candidate.extend(y);
            let square = mul_coords(inner, level, &candidate, &candidate);
            if square == coords {
                return Some(candidate);
            }
        }
    }
    None
}

/// Square testing in the base field.
///
/// Degree 1 is the rational perfect-square test. For higher degree the
/// candidate root is reconstructed: a square root, if it exists, is an
/// element whose image at the i-th real root is (+/-) the square root of the
/// element's image there. For each sign pattern, interval Lagrange
/// interpolation through those values encloses the candidate's coordinates;
/// the true coordinates lie in the lattice (1/disc) Z with respect to the
/// rescaled integral generator, so each pattern is either pinned to a unique
/// lattice candidate (confirmed by exact multiplication) or eventually
/// refuted when its enclosure excludes the lattice.
fn base_square_root(tower: &FieldTower, coords: &[Rat]) -> Option<Vec<Rat>> {
    let degree = tower.base_degree();
    if degree == 1 {
        return exact_sqrt(&coords[0]).map(|r| vec![r]);
    }
    // all real images must be positive for a square in a totally real field
    let element = FieldElement { tower: tower.clone(), level: 0, coords: coords.to_vec() };
    for e in tower.embeddings(0) {
        if element.certified_sign(&e).expect("nonzero").sign == Sign::Negative {
            return None;
        }
    }
    let (g, c) = tower.base_min_poly().monic_integer_rescale();
    let c_rat = Rat::from_integer(c.clone());
    // coordinates with respect to theta' = c*theta: a_j / c^j
    let mut scaled = Vec::with_capacity(degree);
    let mut power = Rat::one();
    for a in coords {
        scaled.push(a / &power);
        power *= &c_rat;
    }
    // clear denominators: A = a * da^2 has integer theta'-coordinates
    let mut da = Int::one();
    for s in &scaled {
        da = da.lcm(s.denom());
    }
    let da_rat = Rat::from_integer(da.clone());
    let da2 = &da_rat * &da_rat;
    let a_int: Vec<Rat> = scaled.iter().map(|s| s * &da2).collect();
    debug_assert!(a_int.iter().all(|v| v.denom().is_one()));
    let a_poly = QPoly::new(a_int.clone());
    // denominator bound: disc(g) * (any algebraic integer of the field) has
    // integer theta'-coordinates
    let disc = poly::discriminant(&g);
    debug_assert!(disc.denom().is_one() && !disc.is_zero());
    let lattice_den = Rat::from_integer(disc.numer().abs());
    // roots of g are the base roots scaled by c (c > 0)
    let roots_g: Vec<RootInterval> = tower
        .inner
        .base_roots
        .iter()
        .map(|r| RootInterval { lo: &r.lo * &c_rat, hi: &r.hi * &c_rat })
        .collect();

    // sign patterns over the roots, with the last root's sign fixed positive
    // (the two square roots differ by a global sign)
    let mut alive: Vec<u32> = (0..(1u32 << (degree - 1))).collect();
    let mut bits = 32u32;
    while !alive.is_empty() {
        assert!(bits < MAX_PRECISION_BITS, "square reconstruction failed to converge");
        let width = Rat::new(Int::one(), Int::one() << bits);
        let refined: Vec<RootInterval> =
            roots_g.iter().map(|r| r.refine_to_width(&g, &width)).collect();
        // enclosures of sqrt(image of A) at each root
        let mut sqrt_values = Vec::with_capacity(degree);
        let mut resolved = true;
        for r in &refined {
            let image = a_poly.eval_interval(&r.to_interval());
            if !image.lo.is_positive() {
                resolved = false;
                break;
            }
            sqrt_values.push(image.sqrt(bits).expect("positive image"));
        }
        if !resolved {
            bits *= 2;
            continue;
        }
        // interval Lagrange basis coefficients (shared by all patterns)
        let mut basis: Vec<Vec<Interval>> = Vec::with_capacity(degree);
        for i in 0..degree {
            let others: Vec<Interval> = refined
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| r.to_interval())
                .collect();
            let numerator = poly::product_of_linear_factors(&others);
            let mut denom = Interval::point(Rat::one());
            let this = refined[i].to_interval();
            for other in &others {
                denom = denom.mul(&this.sub(other));
            }
            let row: Vec<Interval> = numerator
                .iter()
                .map(|co| co.div(&denom).expect("isolating intervals are disjoint"))
                .collect();
            basis.push(row);
        }
        let mut next_alive = Vec::with_capacity(alive.len());
        'patterns: for &mask in &alive {
            let mut coeff_ivs = vec![Interval::zero(); degree];
            for i in 0..degree {
                let positive = if i == degree - 1 { true } else { mask & (1 << i) != 0 };
                let s = if positive { sqrt_values[i].clone() } else { sqrt_values[i].neg() };
                for (k, b) in basis[i].iter().enumerate() {
                    coeff_ivs[k] = coeff_ivs[k].add(&b.mul(&s));
                }
            }
            // recognize lattice points: den * y must be an integer
            let mut candidate = Vec::with_capacity(degree);
            for iv in &coeff_ivs {
                let stretched = iv.scale(&lattice_den);
                let lo = stretched.lo.ceil().to_integer();
                let hi = stretched.hi.floor().to_integer();
                if lo > hi {
                    continue 'patterns; // refuted: no lattice point
                }
                if lo < hi {
                    next_alive.push(mask); // ambiguous: refine
                    continue 'patterns;
                }
                candidate.push(Rat::from_integer(lo) / &lattice_den);
            }
            // pinned: candidate square root of A in theta' coordinates;
            // convert back to theta coordinates of a and verify exactly
            let mut result = Vec::with_capacity(degree);
            let mut power = Rat::one();
            for y in &candidate {
                result.push(y * &power / &da_rat);
                power *= &c_rat;
            }
            let square = mul_coords(&tower.inner, 0, &result, &result);
            if square == coords {
                return Some(result);
            }
            // near-miss: the true coordinates are irrational; keep refining
            // until the enclosure excludes the lattice point
            next_alive.push(mask);
        }
        alive = next_alive;
        bits *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn qq(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn rational_base() -> FieldTower {
        FieldTower::rationals()
    }

    fn sqrt2_base() -> FieldTower {
        FieldTower::make_base_field(&[q(-2), q(0), q(1)]).unwrap()
    }

    /// Tower Q < Q(sqrt(2)) with the step done by adjoining, exercising the
    /// step representation rather than a degree-2 base polynomial.
    fn sqrt2_step_tower() -> FieldTower {
        let base = rational_base();
        let two = base.rational(0, q(2));
        base.adjoin_sqrt(&two, true).unwrap()
    }

    fn elem(tower: &FieldTower, level: usize, coords: &[i64]) -> FieldElement {
        tower
            .element(level, coords.iter().map(|&c| q(c)).collect())
            .unwrap()
    }

    #[test]
    fn base_field_construction_and_error_cases() {
        let rat = rational_base();
        assert_eq!(rat.base_degree(), 1);
        assert_eq!(rat.embeddings(0).len(), 1);

        let k = sqrt2_base();
        assert_eq!(k.base_degree(), 2);
        let embs = k.embeddings(0);
        assert_eq!(embs.len(), 2);
        // designated root defaults to the largest (positive sqrt 2)
        assert!(k.designated_embedding(0).is_designated());
        let iv = k.designated_embedding(0).isolating_intervals(20).remove(0);
        assert!(iv.lo.is_positive());

        assert_eq!(
            FieldTower::make_base_field(&[q(1), q(0), q(1)]).unwrap_err(),
            NumFieldError::NotTotallyReal
        );
        assert_eq!(
            FieldTower::make_base_field(&[q(-1), q(0), q(1)]).unwrap_err(),
            NumFieldError::NotIrreducible
        );
        // (x^2-2)^2 = x^4 - 4x^2 + 4
        assert_eq!(
            FieldTower::make_base_field(&[q(4), q(0), q(-4), q(0), q(1)]).unwrap_err(),
            NumFieldError::NotSquarefree
        );
    }

    #[test]
    fn adjoining_square_roots() {
        let base = rational_base();
        let two = base.rational(0, q(2));
        let l = base.adjoin_sqrt(&two, true).unwrap();
        assert_eq!(l.degree(1), 2);
        assert_eq!(l.embeddings(1).len(), 2);

        let four = base.rational(0, q(4));
        assert_eq!(base.adjoin_sqrt(&four, true).unwrap_err(), NumFieldError::RadicandIsSquare);

        // adjoin 13 + 12*sqrt(2) to Q(sqrt 2): its conjugate image is
        // negative, so the quartic level has only two real embeddings
        let rad = elem(&l, 1, &[13, 12]);
        assert_eq!(l.adjoin_sqrt(&rad, true).unwrap_err(), NumFieldError::NotTotallyRealExtension);
        let m = l.adjoin_sqrt(&rad, false).unwrap();
        assert_eq!(m.degree(2), 4);
        assert_eq!(m.embeddings(2).len(), 2);
    }

    #[test]
    fn arithmetic_matches_hand_values() {
        let l = sqrt2_step_tower();
        let a = elem(&l, 1, &[1, 1]); // 1 + sqrt 2
        let b = elem(&l, 1, &[1, -1]); // 1 - sqrt 2
        assert_eq!(a.checked_mul(&b).unwrap(), elem(&l, 1, &[-1, 0]));

        let u = elem(&l, 1, &[3, 2]); // 3 + 2 sqrt 2
        let v = elem(&l, 1, &[3, -2]);
        assert!(u.checked_mul(&v).unwrap().is_one());
        assert_eq!(u.inv().unwrap(), v);
        assert_eq!(u.pow(-3).unwrap(), elem(&l, 1, &[99, -70]));

        // mixed-level arithmetic lifts the rational operand
        let three = rational_base().rational(0, q(3));
        assert_eq!(three.checked_add(&a).unwrap(), elem(&l, 1, &[4, 1]));
    }

    #[test]
    fn square_testing_at_a_quadratic_step() {
        let l = sqrt2_step_tower();
        let u = elem(&l, 1, &[3, 2]);
        let root = u.is_square().unwrap().expect("3 + 2 sqrt 2 is a square");
        assert_eq!(root, elem(&l, 1, &[1, 1]));
        assert_eq!(root.checked_mul(&root).unwrap(), u);

        assert!(elem(&l, 1, &[2, 1]).is_square().unwrap().is_none());
        // 2 = (sqrt 2)^2: a square whose root has no rational part
        let two = elem(&l, 1, &[2, 0]);
        assert_eq!(two.is_square().unwrap().unwrap(), elem(&l, 1, &[0, 1]));
        // rationals
        let base = rational_base();
        assert_eq!(
            base.rational(0, q(4)).is_square().unwrap().unwrap(),
            base.rational(0, q(2))
        );
        assert!(base.rational(0, q(2)).is_square().unwrap().is_none());
        assert_eq!(
            base.zero(0).is_square().unwrap_err(),
            NumFieldError::ZeroElement
        );
    }

    #[test]
    fn square_testing_in_a_quadratic_base_field() {
        // same field, represented as a degree-2 base: exercises root
        // reconstruction instead of the closed form
        let k = sqrt2_base();
        let u = elem(&k, 0, &[3, 2]);
        let root = u.is_square().unwrap().expect("square in the base representation");
        assert_eq!(root, elem(&k, 0, &[1, 1]));

        let two = elem(&k, 0, &[2, 0]);
        assert_eq!(two.is_square().unwrap().unwrap(), elem(&k, 0, &[0, 1]));

        assert!(elem(&k, 0, &[2, 1]).is_square().unwrap().is_none());
        assert!(elem(&k, 0, &[0, 2]).is_square().unwrap().is_none()); // 2 sqrt 2 has a negative image
    }

    #[test]
    fn square_testing_in_a_cubic_base_field() {
        // x^3 + x^2 - 2x - 1, the real cyclotomic-7 cubic
        let k = FieldTower::make_base_field(&[q(-1), q(-2), q(1), q(1)]).unwrap();
        let theta = k.base_generator();
        let theta2 = theta.checked_mul(&theta).unwrap();
        let root = theta2.is_square().unwrap().expect("theta^2 is a square");
        assert_eq!(root, theta);
        // theta^2 + 2 theta has a negative embedding image, so it is not a square
        let u = theta2.checked_add(&theta.scale(&q(2))).unwrap();
        assert!(u.is_square().unwrap().is_none());
        // theta itself: not a square (theta has negative images)
        assert!(theta.is_square().unwrap().is_none());
    }

    #[test]
    fn certified_signs_and_counts() {
        let l = sqrt2_step_tower();
        let embs = l.embeddings(1);
        assert_eq!(embs.len(), 2);
        let sigma0 = l.designated_embedding(1);
        let other = embs.into_iter().find(|e| !e.is_designated()).unwrap();

        let a = elem(&l, 1, &[1, 1]); // 1 + sqrt 2
        let cert = a.certified_sign(&other).unwrap();
        assert_eq!(cert.sign, Sign::Negative);
        assert!(cert.witness_interval.hi.is_negative());
        assert_eq!(a.certified_sign(&sigma0).unwrap().sign, Sign::Positive);

        let r = elem(&l, 1, &[13, 12]);
        assert_eq!(r.certified_sign(&sigma0).unwrap().sign, Sign::Positive);
        assert_eq!(r.certified_sign(&other).unwrap().sign, Sign::Negative);

        // sign counts: designated embedding excluded
        assert_eq!(elem(&l, 1, &[3, 1]).sign_count().unwrap(), 1); // 3 - sqrt 2 > 0
        assert_eq!(a.sign_count().unwrap(), 0); // 1 - sqrt 2 < 0
        assert_eq!(r.sign_count().unwrap(), 0);
        let base = rational_base();
        assert_eq!(base.rational(0, q(7)).sign_count().unwrap(), 0);
        assert_eq!(
            base.zero(0).sign_count().unwrap_err(),
            NumFieldError::ZeroElement
        );
    }

    #[test]
    fn galois_conjugation_and_norms() {
        let l = sqrt2_step_tower();
        let sqrt2 = l.step_sqrt(0);
        let conj = sqrt2.galois_conjugate().unwrap();
        assert_eq!(conj, sqrt2.neg());
        assert_eq!(conj.galois_conjugate().unwrap(), sqrt2); // involution

        let u = elem(&l, 1, &[3, 2]);
        assert_eq!(u.galois_conjugate().unwrap(), elem(&l, 1, &[3, -2]));
        let norm = u.relative_norm().unwrap();
        assert!(norm.is_one());
        assert_eq!(norm.level(), 0);
        assert_eq!(sqrt2.relative_norm().unwrap(), rational_base().rational(0, q(-2)));

        // rational norms: N(3 + 2 sqrt 2) = 1, N(1 + sqrt 2) = -1, N(7) = 49
        assert_eq!(u.rational_norm(), q(1));
        assert_eq!(elem(&l, 1, &[1, 1]).rational_norm(), q(-1));
        assert_eq!(l.rational(1, q(7)).rational_norm(), q(49));
        assert_eq!(rational_base().rational(0, q(-5)).rational_norm(), q(-5));

        // cubic p = x^3 + x^2 - 2x - 1: N(theta) = -p(0) = 1, N(theta + 1) = -p(-1) = -1
        let cubic = FieldTower::make_base_field(&[q(-1), q(-2), q(1), q(1)]).unwrap();
        assert_eq!(cubic.base_generator().rational_norm(), q(1));
        let shifted = cubic.base_generator().checked_add(&cubic.one(0)).unwrap();
        assert_eq!(shifted.rational_norm(), q(-1));

        // fixed field: elements with zero top coordinate
        let lifted = elem(&l, 1, &[5, 0]);
        assert_eq!(lifted.galois_conjugate().unwrap(), lifted);

        let base_elt = rational_base().rational(0, q(3));
        assert_eq!(
            base_elt.galois_conjugate().unwrap_err(),
            NumFieldError::BaseLevelElement
        );
    }

    #[test]
    fn algebraic_integer_detection() {
        let base = rational_base();
        assert!(!base.rational(0, qq(1, 2)).is_algebraic_integer());
        assert!(base.rational(0, q(7)).is_algebraic_integer());

        let l = sqrt2_step_tower();
        assert!(elem(&l, 1, &[3, 2]).is_algebraic_integer());
        assert!(!elem(&l, 1, &[3, 2]).scale(&qq(1, 2)).is_algebraic_integer());

        // (1 + sqrt 5)/2 is integral though its coordinates are not integers
        let five = base.rational(0, q(5));
        let l5 = base.adjoin_sqrt(&five, true).unwrap();
        let golden = l5.element(1, vec![qq(1, 2), qq(1, 2)]).unwrap();
        assert!(golden.is_algebraic_integer());
        let half_sqrt5 = l5.element(1, vec![q(0), qq(1, 2)]).unwrap();
        assert!(!half_sqrt5.is_algebraic_integer());
    }

    #[test]
    fn two_step_tower_embeddings_and_conjugates() {
        // Q < Q(sqrt 2) < Q(sqrt 2, sqrt 5): totally real, four embeddings
        let l = sqrt2_step_tower();
        let five = l.rational(1, q(5));
        let m = l.adjoin_sqrt(&five, true).unwrap();
        assert_eq!(m.degree(2), 4);
        assert_eq!(m.embeddings(2).len(), 4);

        // (sqrt 2 + sqrt 5)^2 = 7 + 2 sqrt 10
        let s2 = m.step_sqrt(0).lift_to(&m, 2).unwrap();
        let s5 = m.step_sqrt(1);
        let sum = s2.checked_add(&s5).unwrap();
        let sq = sum.checked_mul(&sum).unwrap();
        let back = sq.is_square().unwrap().expect("a square by construction");
        assert_eq!(back, sum); // normalization picks the all-positive root
        // images at the other embeddings: sqrt2 - sqrt5 < 0, -sqrt2 + sqrt5 > 0,
        // -sqrt2 - sqrt5 < 0
        assert_eq!(sum.sign_count().unwrap(), 1);
    }

    #[test]
    fn ring_axioms_on_seeded_samples() {
        let l = sqrt2_step_tower();
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        for _ in 0..40 {
            let pick = |rng: &mut StdRng| {
                let coords = vec![
                    qq(rng.gen_range(-9..=9), rng.gen_range(1..=4)),
                    qq(rng.gen_range(-9..=9), rng.gen_range(1..=4)),
                ];
                l.element(1, coords).unwrap()
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let c = pick(&mut rng);
            let ab_c = a.checked_mul(&b).unwrap().checked_mul(&c).unwrap();
            let a_bc = a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);
            let left = a.checked_mul(&b.checked_add(&c).unwrap()).unwrap();
            let right = a
                .checked_mul(&b)
                .unwrap()
                .checked_add(&a.checked_mul(&c).unwrap())
                .unwrap();
            assert_eq!(left, right);
            if !a.is_zero() {
                assert!(a.checked_mul(&a.inv().unwrap()).unwrap().is_one());
            }
            // norms are multiplicative
            let nab = a.checked_mul(&b).unwrap().relative_norm().unwrap();
            let na_nb = a
                .relative_norm()
                .unwrap()
                .checked_mul(&b.relative_norm().unwrap())
                .unwrap();
            assert_eq!(nab, na_nb);
        }
    }

    #[test]
    fn certified_signs_match_floating_evaluation() {
        let l = sqrt2_step_tower();
        let embs = l.embeddings(1);
        let mut rng = StdRng::seed_from_u64(0x5eed_0002);
        for _ in 0..50 {
            let a = l
                .element(
                    1,
                    vec![
                        qq(rng.gen_range(-20..=20), rng.gen_range(1..=5)),
                        qq(rng.gen_range(-20..=20), rng.gen_range(1..=5)),
                    ],
                )
                .unwrap();
            if a.is_zero() {
                continue;
            }
            for e in &embs {
                let cert = a.certified_sign(e).unwrap();
                let sqrt2 = if e.is_designated() { 2f64.sqrt() } else { -(2f64.sqrt()) };
                let float_val =
                    a.coords()[0].to_f64().unwrap() + a.coords()[1].to_f64().unwrap() * sqrt2;
                if float_val.abs() > 1e-9 {
                    let float_sign = if float_val > 0.0 { Sign::Positive } else { Sign::Negative };
                    assert_eq!(cert.sign, float_sign);
                }
            }
        }
    }

    #[test]
    fn sign_products_are_consistent_across_embeddings() {
        let l = sqrt2_step_tower();
        let embs = l.embeddings(1);
        let mut rng = StdRng::seed_from_u64(0x5eed_0003);
        for _ in 0..30 {
            let a = elem(&l, 1, &[rng.gen_range(-5..=5), rng.gen_range(-5..=5)]);
            let b = elem(&l, 1, &[rng.gen_range(-5..=5), rng.gen_range(-5..=5)]);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let ab = a.checked_mul(&b).unwrap();
            for e in &embs {
                let sa = a.certified_sign(e).unwrap().sign;
                let sb = b.certified_sign(e).unwrap().sign;
                let sab = ab.certified_sign(e).unwrap().sign;
                let expected = if sa == sb { Sign::Positive } else { Sign::Negative };
                assert_eq!(sab, expected);
            }
        }
    }

    #[test]
    fn integral_elements_closed_under_ring_operations() {
        let base = rational_base();
        let five = base.rational(0, q(5));
        let l5 = base.adjoin_sqrt(&five, true).unwrap();
        let golden = l5.element(1, vec![qq(1, 2), qq(1, 2)]).unwrap();
        let mut rng = StdRng::seed_from_u64(0x5eed_0004);
        for _ in 0..20 {
            let a = golden
                .scale(&q(rng.gen_range(-3..=3)))
                .checked_add(&l5.integer(1, rng.gen_range(-3..=3)))
                .unwrap();
            let b = golden
                .scale(&q(rng.gen_range(-3..=3)))
                .checked_add(&l5.integer(1, rng.gen_range(-3..=3)))
                .unwrap();
            assert!(a.is_algebraic_integer());
            assert!(b.is_algebraic_integer());
            assert!(a.checked_add(&b).unwrap().is_algebraic_integer());
            assert!(a.checked_mul(&b).unwrap().is_algebraic_integer());
        }
    }

    #[test]
    fn level_mismatch_is_reported() {
        let l2 = sqrt2_step_tower();
        let base3 = FieldTower::make_base_field(&[q(-3), q(0), q(1)]).unwrap();
        let a = elem(&l2, 1, &[1, 1]);
        let b = elem(&base3, 0, &[1, 1]);
        assert_eq!(a.checked_add(&b).unwrap_err(), NumFieldError::LevelMismatch);
        assert_eq!(l2.element(1, vec![q(1)]).unwrap_err(), NumFieldError::LevelMismatch);
    }
}
