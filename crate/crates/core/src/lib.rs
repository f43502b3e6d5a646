//! Exact arithmetic for lattices in quadratic-form groups and their bending
//! deformations.
//!
//! The crate builds towers of real quadratic extensions over a totally real
//! base field, diagonal quadratic and Hermitian forms over those towers, and
//! the matrix groups attached to them. Everything is computed in exact
//! rational arithmetic: signs of field elements are certified by interval
//! refinement, memberships by identity checks with zero tolerance, and the
//! results are collected into serializable certificate reports.
//!
//! Module map:
//! - [`interval`]: closed rational intervals with outward-rounded square roots.
//! - [`poly`]: univariate rational polynomials, Sturm sequences, real-root
//!   isolation, and irreducibility certificates for totally real polynomials.
//! - [`numfield`]: quadratic extension towers, embeddings, certified signs,
//!   square testing, and algebraic-integer tests.
//! - [`matrix`]: dense matrices over a tower level with exact linear algebra.
//! - [`forms`]: diagonal quadratic forms, Hermitian lifts, isometry and
//!   unitary membership checks, reflection sampling.
//! - [`gps`]: interbreeding parameter validation, the two-form instance with
//!   its conjugating matrix, isometry transport, and adjoint-trace reports.
//! - [`bending`]: bending units, the quadratic setup over the unit, bending
//!   matrices, and their unitary-membership certificates.
//! - [`certify`]: Zariski-density evidence (Burnside span, invariant bilinear
//!   forms, invariant subspace probe) and assembled certificate reports.

pub mod bending;
pub mod certify;
pub mod forms;
pub mod gps;
pub mod interval;
pub mod matrix;
pub mod numfield;
pub mod poly;

pub use numfield::{EmbeddingHandle, FieldElement, FieldTower, NumFieldError, Sign, SignCertificate};

/// Exact rational scalar used throughout the crate.
pub type Rat = num_rational::BigRational;
/// Arbitrary-precision integer used throughout the crate.
pub type Int = num_bigint::BigInt;

/// Parse an exact rational from `"p"` or `"p/q"` form.
///
/// Rejects empty input, zero denominators, and anything with a fractional
/// point: floating-point literals are not exact and have no place here.
pub fn parse_rational(text: &str) -> Result<Rat, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty rational literal".to_string());
    }
    if text.contains(['.', 'e', 'E']) {
        return Err(format!("`{text}` is not an exact rational (floats are rejected)"));
    }
    let mut parts = text.splitn(2, '/');
    let numer = parts
        .next()
        .unwrap()
        .parse::<Int>()
        .map_err(|e| format!("bad numerator in `{text}`: {e}"))?;
    match parts.next() {
        None => Ok(Rat::from_integer(numer)),
        Some(d) => {
            let denom = d
                .parse::<Int>()
                .map_err(|e| format!("bad denominator in `{text}`: {e}"))?;
            if denom == Int::from(0) {
                return Err(format!("zero denominator in `{text}`"));
            }
            Ok(Rat::new(numer, denom))
        }
    }
}

/// Render a rational as the canonical `"p/q"` string (denominator always
/// explicit, always positive).
pub fn rational_string(q: &Rat) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rational_accepts_integers_and_fractions() {
        assert_eq!(parse_rational("3").unwrap(), Rat::from_integer(3.into()));
        assert_eq!(parse_rational("-7/2").unwrap(), Rat::new((-7).into(), 2.into()));
        assert_eq!(parse_rational(" 9/12 ").unwrap(), Rat::new(3.into(), 4.into()));
    }

    #[test]
    fn parse_rational_rejects_floats_and_zero_denominators() {
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn rational_string_is_canonical() {
        assert_eq!(rational_string(&Rat::new(6.into(), (-4).into())), "-3/2");
        assert_eq!(rational_string(&Rat::from_integer(5.into())), "5/1");
    }
}
