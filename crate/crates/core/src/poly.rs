//! Univariate polynomials over the rationals: exact arithmetic, Sturm
//! sequences, certified real-root isolation, and an irreducibility test for
//! totally real polynomials.
//!
//! Root isolation works on the squarefree part, deflates rational roots
//! exactly first (so bisection midpoints are never roots of what remains),
//! and returns pairwise disjoint closed intervals, each containing exactly
//! one real root. Width-zero intervals are exact rational roots.
//!
//! The irreducibility test is a certificate search: a monic integer
//! polynomial with all roots real factors over the integers iff some proper
//! subset of its isolated roots has all elementary symmetric functions
//! integral. Candidate factors are recognized from interval enclosures of
//! those symmetric functions and confirmed or refuted by exact division, so
//! refinement terminates with a proof either way.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::interval::Interval;
use crate::{Int, Rat};

/// Polynomial with exact rational coefficients, lowest degree first.
/// Invariant: no trailing zero coefficients (zero polynomial is empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<Rat>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        QPoly::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        QPoly::new(vec![Rat::zero(), Rat::one()])
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        QPoly::new(coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().map_or(false, |c| c.is_one())
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation with an interval argument (coefficients exact).
    pub fn eval_interval(&self, x: &Interval) -> Interval {
        let mut acc = Interval::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add_rat(c);
        }
        acc
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        QPoly::new(out)
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) - other.coeff(k));
        }
        QPoly::new(out)
    }

    pub fn neg(&self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn scale(&self, c: &Rat) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Exact division with remainder; `divisor` must be nonzero.
    pub fn divrem(&self, divisor: &QPoly) -> (QPoly, QPoly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dlead = divisor.leading().unwrap().clone();
        let ddeg = divisor.degree().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rat::zero(); self.coeffs.len().saturating_sub(ddeg)];
        while rem.len() > ddeg && !rem.is_empty() {
            let rdeg = rem.len() - 1;
            let factor = rem.last().unwrap() / &dlead;
            if !factor.is_zero() {
                let shift = rdeg - ddeg;
                quot[shift] = factor.clone();
                for (k, dc) in divisor.coeffs.iter().enumerate() {
                    let idx = shift + k;
                    let delta = dc * &factor;
                    rem[idx] -= delta;
                }
            }
            rem.pop();
            while rem.last().map_or(false, |c| c.is_zero()) {
                rem.pop();
            }
            if rem.len() <= ddeg {
                break;
            }
        }
        (QPoly::new(quot), QPoly::new(rem))
    }

    pub fn derivative(&self) -> QPoly {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c * Rat::from_integer(Int::from(k)));
        }
        QPoly::new(out)
    }

    /// Extended Euclidean algorithm: returns `(g, s, t)` with
    /// `s*self + t*other = g` and `g` the monic gcd (or zero).
    pub fn xgcd(&self, other: &QPoly) -> (QPoly, QPoly, QPoly) {
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        let mut s0 = QPoly::one();
        let mut s1 = QPoly::zero();
        let mut t0 = QPoly::zero();
        let mut t1 = QPoly::one();
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = r1;
            r1 = r;
            let s = s0.sub(&q.mul(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub(&q.mul(&t1));
            t0 = t1;
            t1 = t;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let lead = r0.leading().unwrap().clone();
        let inv = Rat::one() / lead;
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    /// Monic gcd via the Euclidean algorithm.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.leading().unwrap().clone();
        a.scale(&(Rat::one() / lead))
    }

    /// Squarefree part `f / gcd(f, f')`, normalized monic.
    pub fn squarefree_part(&self) -> QPoly {
        if self.degree().map_or(true, |d| d == 0) {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        let (q, r) = self.divrem(&g);
        debug_assert!(r.is_zero());
        let lead = q.leading().unwrap().clone();
        q.scale(&(Rat::one() / lead))
    }

    pub fn is_squarefree(&self) -> bool {
        match self.degree() {
            None | Some(0) => true,
            _ => self.gcd(&self.derivative()).degree() == Some(0),
        }
    }

    /// Substitute `x -> x/c` and rescale: returns `g(x) = c^n f(x/c)`.
    /// For monic `f` with `c` the lcm of coefficient denominators, `g` is
    /// monic with integer coefficients and `root(g) = c * root(f)`.
    pub fn monic_integer_rescale(&self) -> (QPoly, Int) {
        assert!(self.is_monic(), "rescale requires a monic polynomial");
        let n = self.degree().unwrap();
        let mut c = Int::one();
        for a in &self.coeffs {
            c = c.lcm(a.denom());
        }
        let cq = Rat::from_integer(c.clone());
        let mut out = Vec::with_capacity(n + 1);
        let mut power = Rat::one();
        // coefficient of x^k in g is c^{n-k} a_k; build from the top down
        let mut rev = Vec::with_capacity(n + 1);
        for k in (0..=n).rev() {
            rev.push(self.coeff(k) * &power);
            power *= &cq;
        }
        rev.reverse();
        out.extend(rev);
        let g = QPoly::new(out);
        debug_assert!(g.coeffs().iter().all(|a| a.denom().is_one()));
        (g, c)
    }

    /// Cauchy bound: every real root lies strictly inside `(-M, M)`.
    pub fn cauchy_root_bound(&self) -> Rat {
        let lead = self.leading().expect("root bound of zero polynomial");
        let mut max = Rat::zero();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let ratio = (c / lead).abs();
            if ratio > max {
                max = ratio;
            }
        }
        max + Rat::one()
    }
}

/// Sturm chain of a squarefree polynomial.
pub struct SturmChain {
    chain: Vec<QPoly>,
}

impl SturmChain {
    pub fn new(f: &QPoly) -> Self {
        let mut chain = vec![f.clone(), f.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            if chain[n - 1].degree() == Some(0) {
                break;
            }
            let (_, r) = chain[n - 2].divrem(&chain[n - 1]);
            chain.push(r.neg());
        }
        SturmChain { chain }
    }

    fn variations_at(&self, x: &Rat) -> usize {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for p in &self.chain {
            let v = p.eval(x);
            if v.is_zero() {
                continue;
            }
            let pos = v.is_positive();
            if let Some(prev) = last {
                if prev != pos {
                    count += 1;
                }
            }
            last = Some(pos);
        }
        count
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    pub fn count_roots_in(&self, a: &Rat, b: &Rat) -> usize {
        assert!(a <= b);
        self.variations_at(a) - self.variations_at(b)
    }

    /// Total number of distinct real roots.
    pub fn count_real_roots(&self) -> usize {
        if self.chain[0].degree().map_or(true, |d| d == 0) {
            return 0;
        }
        let bound = self.chain[0].cauchy_root_bound();
        self.count_roots_in(&-bound.clone(), &bound)
    }
}

/// A closed isolating interval for one real root. `lo == hi` marks an exact
/// rational root; otherwise the endpoints are not roots, the interval
/// contains exactly one (irrational) root, and the polynomial changes sign
/// across it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn to_interval(&self) -> Interval {
        Interval::new(self.lo.clone(), self.hi.clone())
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    /// One bisection step against the (squarefree, rational-root-free on this
    /// interval) polynomial `f`; exact roots are already fully refined.
    pub fn refine(&self, f: &QPoly) -> RootInterval {
        if self.is_exact() {
            return self.clone();
        }
        let mid = (&self.lo + &self.hi) / Rat::from_integer(2.into());
        let fm = f.eval(&mid);
        debug_assert!(!fm.is_zero(), "midpoint of an irrational-root interval cannot be a root");
        let flo = f.eval(&self.lo);
        debug_assert!(!flo.is_zero());
        if flo.is_positive() != fm.is_positive() {
            RootInterval { lo: self.lo.clone(), hi: mid }
        } else {
            RootInterval { lo: mid, hi: self.hi.clone() }
        }
    }

    pub fn refine_to_width(&self, f: &QPoly, target: &Rat) -> RootInterval {
        let mut cur = self.clone();
        while !cur.is_exact() && &cur.width() > target {
            cur = cur.refine(f);
        }
        cur
    }
}

/// Rational roots of `f`, exact, ascending. Works on the squarefree part.
pub fn rational_roots(f: &QPoly) -> Vec<Rat> {
    let f = f.squarefree_part();
    if f.degree().map_or(true, |d| d == 0) {
        return Vec::new();
    }
    let (g, c) = f.monic_integer_rescale();
    let cq = Rat::from_integer(c);
    let mut roots = Vec::new();
    // integer roots of g: zero first, then divisors of the constant term
    let mut h = g;
    if h.coeff(0).is_zero() {
        // squarefree, so zero occurs at most once
        roots.push(Rat::zero());
        let (q, r) = h.divrem(&QPoly::x());
        debug_assert!(r.is_zero());
        h = q;
    }
    if h.degree().map_or(false, |d| d >= 1) {
        let constant = h.coeff(0).numer().abs();
        let mut d = Int::one();
        let mut divisors = Vec::new();
        while &d * &d <= constant {
            if constant.is_multiple_of(&d) {
                divisors.push(d.clone());
                divisors.push(&constant / &d);
            }
            d += Int::one();
        }
        divisors.sort();
        divisors.dedup();
        for d in divisors {
            for cand in [Rat::from_integer(d.clone()), Rat::from_integer(-d)] {
                if h.eval(&cand).is_zero() {
                    roots.push(cand);
                }
            }
        }
    }
    let mut out: Vec<Rat> = roots.into_iter().map(|r| r / &cq).collect();
    out.sort();
    out.dedup();
    out
}

/// Isolate all real roots of `f`: pairwise disjoint closed intervals in
/// ascending order, one distinct real root each. Multiplicity is ignored
/// (isolation runs on the squarefree part).
pub fn isolate_real_roots(f: &QPoly) -> Vec<RootInterval> {
    let f = f.squarefree_part();
    if f.degree().map_or(true, |d| d == 0) {
        return Vec::new();
    }
    let rat_roots = rational_roots(&f);
    // deflate rational roots so bisection never lands on a root
    let mut g = f.clone();
    for r in &rat_roots {
        let lin = QPoly::new(vec![-r.clone(), Rat::one()]);
        let (q, rem) = g.divrem(&lin);
        debug_assert!(rem.is_zero());
        g = q;
    }
    let mut intervals: Vec<RootInterval> =
        rat_roots.iter().map(|r| RootInterval { lo: r.clone(), hi: r.clone() }).collect();

    if g.degree().map_or(false, |d| d >= 1) {
        let chain = SturmChain::new(&g);
        let bound = g.cauchy_root_bound();
        let mut stack = vec![(-bound.clone(), bound.clone())];
        while let Some((a, b)) = stack.pop() {
            let count = chain.count_roots_in(&a, &b);
            if count == 0 {
                continue;
            }
            if count == 1 {
                intervals.push(RootInterval { lo: a, hi: b });
                continue;
            }
            let mid = (&a + &b) / Rat::from_integer(2.into());
            debug_assert!(!g.eval(&mid).is_zero(), "deflated polynomial has no rational roots");
            stack.push((a, mid.clone()));
            stack.push((mid, b));
        }
        // separate any intervals that touch (shared bisection endpoints) and
        // push irrational-root intervals off the exact rational roots
        loop {
            intervals.sort_by(|x, y| x.lo.cmp(&y.lo));
            let mut touched = false;
            for i in 1..intervals.len() {
                if intervals[i - 1].hi >= intervals[i].lo {
                    if !intervals[i - 1].is_exact() {
                        intervals[i - 1] = intervals[i - 1].refine(&g);
                        touched = true;
                    }
                    if !intervals[i].is_exact() {
                        intervals[i] = intervals[i].refine(&g);
                        touched = true;
                    }
                }
            }
            if !touched {
                break;
            }
        }
    } else {
        intervals.sort_by(|x, y| x.lo.cmp(&y.lo));
    }
    debug_assert_eq!(intervals.len(), SturmChain::new(&f).count_real_roots());
    intervals
}

/// Number of distinct real roots.
pub fn count_real_roots(f: &QPoly) -> usize {
    SturmChain::new(&f.squarefree_part()).count_real_roots()
}

/// Resultant of `f` and `g` via the Sylvester matrix with exact elimination.
pub fn resultant(f: &QPoly, g: &QPoly) -> Rat {
    let m = f.degree().expect("resultant of zero polynomial");
    let n = g.degree().expect("resultant of zero polynomial");
    if m == 0 {
        return pow_rat(f.coeff(0), n as u32);
    }
    if n == 0 {
        return pow_rat(g.coeff(0), m as u32);
    }
    let size = m + n;
    let mut mat = vec![vec![Rat::zero(); size]; size];
    for row in 0..n {
        for k in 0..=m {
            mat[row][row + (m - k)] = f.coeff(k);
        }
    }
    for row in 0..m {
        for k in 0..=n {
            mat[n + row][row + (n - k)] = g.coeff(k);
        }
    }
    // exact Gaussian elimination determinant
    let mut det = Rat::one();
    for col in 0..size {
        let pivot_row = match (col..size).find(|&r| !mat[r][col].is_zero()) {
            Some(r) => r,
            None => return Rat::zero(),
        };
        if pivot_row != col {
            mat.swap(pivot_row, col);
            det = -det;
        }
        let pivot = mat[col][col].clone();
        det *= &pivot;
        for r in col + 1..size {
            if mat[r][col].is_zero() {
                continue;
            }
            let factor = &mat[r][col] / &pivot;
            for k in col..size {
                let delta = &mat[col][k] * &factor;
                mat[r][k] -= delta;
            }
        }
    }
    det
}

fn pow_rat(base: Rat, exp: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..exp {
        acc *= &base;
    }
    acc
}

/// Discriminant of a monic polynomial: `(-1)^{n(n-1)/2} Res(f, f')`.
pub fn discriminant(f: &QPoly) -> Rat {
    assert!(f.is_monic(), "discriminant helper expects a monic polynomial");
    let n = f.degree().expect("discriminant of zero polynomial");
    if n <= 1 {
        return Rat::one();
    }
    let res = resultant(f, &f.derivative());
    if (n * (n - 1) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

/// Coefficient enclosures of the monic polynomial `prod_i (x - roots[i])`,
/// lowest degree first, for interval-located roots.
pub fn product_of_linear_factors(roots: &[Interval]) -> Vec<Interval> {
    let mut coeffs: Vec<Interval> = vec![Interval::point(Rat::one())];
    for r in roots {
        let neg_root = r.neg();
        let mut next = vec![Interval::zero(); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] = next[k + 1].add(c);
            next[k] = next[k].add(&c.mul(&neg_root));
        }
        coeffs = next;
    }
    coeffs
}

/// Irreducibility over the rationals for a squarefree polynomial with all
/// roots real. Certificate search over root subsets; see module docs.
///
/// Panics if the polynomial is not monic, not squarefree, or has non-real
/// roots (callers establish those first).
pub fn is_irreducible_totally_real(f: &QPoly) -> bool {
    let n = match f.degree() {
        None | Some(0) => return false,
        Some(1) => return true,
        Some(n) => n,
    };
    assert!(f.is_monic() && f.is_squarefree());
    let (g, _c) = f.monic_integer_rescale();
    if !rational_roots(&g).is_empty() {
        return false;
    }
    let mut roots = isolate_real_roots(&g);
    assert_eq!(roots.len(), n, "irreducibility test requires all roots real");

    // proper subsets of size <= n/2, by bitmask
    let mut alive: Vec<u32> = (1u32..(1 << n) - 1)
        .filter(|m| (m.count_ones() as usize) <= n / 2)
        .collect();
    let mut width = Rat::new(1.into(), 16.into());
    while !alive.is_empty() {
        for r in roots.iter_mut() {
            *r = r.refine_to_width(&g, &width);
        }
        let mut still_alive = Vec::with_capacity(alive.len());
        for mask in alive {
            // expand prod_{i in mask} (x - r_i) with interval coefficients
            let subset: Vec<Interval> = roots
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, r)| r.to_interval())
                .collect();
            let coeffs = product_of_linear_factors(&subset);
            // recognize integer candidates for every non-leading coefficient
            let mut candidate = Vec::with_capacity(coeffs.len());
            let mut refuted = false;
            let mut ambiguous = false;
            for c in &coeffs[..coeffs.len() - 1] {
                let lo = c.lo.ceil().to_integer();
                let hi = c.hi.floor().to_integer();
                if lo > hi {
                    refuted = true; // no integer in range
                    break;
                }
                if lo < hi {
                    ambiguous = true; // refine further next round
                    break;
                }
                candidate.push(Rat::from_integer(lo));
            }
            if refuted {
                continue;
            }
            if !ambiguous {
                // every coefficient pinned to a unique integer: the only
                // possible integer factor for this root subset
                candidate.push(Rat::one());
                let h = QPoly::new(candidate);
                let (_, rem) = g.divrem(&h);
                if rem.is_zero() {
                    return false; // genuine factor
                }
                // candidate failed, so some true coefficient is irrational;
                // keep refining until its interval excludes every integer
            }
            still_alive.push(mask);
        }
        alive = still_alive;
        width /= Rat::from_integer(16.into());
    }
    true
}
