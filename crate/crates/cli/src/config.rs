//! Exact JSON configuration. Every number is an integer or a `"p/q"`
//! string — floating-point literals are rejected wherever they appear — and
//! unknown keys are errors. Parsing collects every problem in one pass
//! instead of stopping at the first.

use std::fmt;
use std::path::PathBuf;

use serde_json::{Map, Value};
use thiserror::Error;

use thinbend::{parse_rational, rational_string, Int, Rat};

/// One problem with a config document, located by a JSON pointer.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigIssue {
    #[error("{pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("{pointer}: unknown key \"{key}\"")]
    UnknownKey { pointer: String, key: String },
}

/// Every problem found in one parse, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// What the pipeline is asked to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Check the arithmetic conditions on the parameters and stop.
    Validate,
    /// Build the instance, the bending unit, and the unitary setup.
    Build,
    /// The full certificate, density evidence included.
    Certify,
    /// Group beta candidates by the quadratic extension they generate.
    Enumerate,
}

impl Mode {
    pub fn parse(name: &str) -> Option<Mode> {
        match name {
            "validate" => Some(Mode::Validate),
            "build" => Some(Mode::Build),
            "certify" => Some(Mode::Certify),
            "enumerate" => Some(Mode::Enumerate),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Build => "build",
            Mode::Certify => "certify",
            Mode::Enumerate => "enumerate",
        }
    }
}

/// An exact value from the config: a rational, or the power-basis
/// coordinates of an element at the top level of the constructed field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactValue {
    Rational(Rat),
    Coordinates(Vec<Rat>),
}

impl ExactValue {
    /// Canonical rendering for the report's input echo.
    pub fn render(&self) -> String {
        match self {
            ExactValue::Rational(r) => rational_string(r),
            ExactValue::Coordinates(coords) => {
                let inner: Vec<String> = coords.iter().map(rational_string).collect();
                format!("[{}]", inner.join(", "))
            }
        }
    }
}

/// Base-field data: a monic minimal polynomial (coefficients lowest degree
/// first), square roots to adjoin on top of it, and an optional designated
/// real root (index in ascending order; the largest root when absent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseFieldConfig {
    pub polynomial: Vec<Rat>,
    pub step_radicands: Vec<ExactValue>,
    pub designated_root: Option<usize>,
}

/// The construction parameters: first coefficients of the two forms, the
/// shared middle coefficients, the (negated) final coefficient, and `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpsConfig {
    pub alpha: ExactValue,
    pub beta: ExactValue,
    pub middles: Vec<ExactValue>,
    pub last: ExactValue,
    pub n: usize,
}

/// Where generators come from: deterministic reflection-sampling bounds,
/// plus optional inline matrices offered as the bending letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub sample_height: i64,
    pub sample_count: usize,
    pub inline: Vec<Vec<Vec<ExactValue>>>,
}

impl Default for GeneratorConfig {
    fn default() -> GeneratorConfig {
        GeneratorConfig { sample_height: 2, sample_count: 24, inline: Vec::new() }
    }
}

/// A fully parsed pipeline configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Absent means the rationals.
    pub base_field: Option<BaseFieldConfig>,
    pub gps: GpsConfig,
    pub unit_search_bound: usize,
    pub generators: GeneratorConfig,
    pub max_word_length: usize,
    pub enumerate_betas: Vec<ExactValue>,
    pub output: PathBuf,
}

/// Parse and validate a JSON config, reporting every schema problem at once.
pub fn parse_config(bytes: &[u8]) -> Result<PipelineConfig, ConfigError> {
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => return Err(single("/", format!("config is not UTF-8: {e}"))),
    };
    let document: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(single("/", format!("invalid JSON: {e}"))),
    };
    let Some(root) = document.as_object() else {
        return Err(single("/", "the config must be a JSON object".to_string()));
    };

    let mut issues = Vec::new();
    reject_unknown_keys(
        root,
        "/",
        &[
            "mode",
            "base_field",
            "gps",
            "unit_search_bound",
            "generators",
            "max_word_length",
            "enumerate_betas",
            "output",
        ],
        &mut issues,
    );

    let mode = match root.get("mode") {
        Some(Value::String(s)) => Mode::parse(s).or_else(|| {
            issues.push(violation(
                "/mode",
                format!("unknown mode \"{s}\"; expected validate, build, certify, or enumerate"),
            ));
            None
        }),
        Some(_) => {
            issues.push(violation("/mode", "mode must be a string".to_string()));
            None
        }
        None => {
            issues.push(violation("/mode", "missing required key".to_string()));
            None
        }
    };

    let (base_field, base_field_given) = match root.get("base_field") {
        None => (None, false),
        Some(value) => (parse_base_field(value, &mut issues), true),
    };

    let gps = match root.get("gps") {
        Some(value) => parse_gps(value, &mut issues),
        None => {
            issues.push(violation("/gps", "missing required key".to_string()));
            None
        }
    };

    let unit_search_bound = match root.get("unit_search_bound") {
        None => Some(50),
        Some(v) => parse_count(v, "/unit_search_bound", 1, &mut issues),
    };

    let dimension = gps.as_ref().map(|g| g.n + 1);
    let generators = match root.get("generators") {
        None => Some(GeneratorConfig::default()),
        Some(v) => parse_generators(v, dimension, &mut issues),
    };

    let max_word_length = match root.get("max_word_length") {
        None => Some(4),
        Some(v) => parse_count(v, "/max_word_length", 1, &mut issues),
    };

    let enumerate_betas = match root.get("enumerate_betas") {
        None => Some(Vec::new()),
        Some(v) => parse_exact_array(v, "/enumerate_betas", true, &mut issues),
    };

    let output = match root.get("output") {
        None => Some(PathBuf::from("report.json")),
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(Value::String(_)) => {
            issues.push(violation("/output", "output path must not be empty".to_string()));
            None
        }
        Some(_) => {
            issues.push(violation("/output", "output must be a string path".to_string()));
            None
        }
    };

    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }
    // no issues means every section above parsed, so the unwraps cannot fire
    Ok(PipelineConfig {
        mode: mode.unwrap(),
        base_field: if base_field_given { Some(base_field.unwrap()) } else { None },
        gps: gps.unwrap(),
        unit_search_bound: unit_search_bound.unwrap(),
        generators: generators.unwrap(),
        max_word_length: max_word_length.unwrap(),
        enumerate_betas: enumerate_betas.unwrap(),
        output: output.unwrap(),
    })
}

fn violation(pointer: &str, message: String) -> ConfigIssue {
    ConfigIssue::SchemaViolation { pointer: pointer.to_string(), message }
}

fn single(pointer: &str, message: String) -> ConfigError {
    ConfigError { issues: vec![violation(pointer, message)] }
}

fn reject_unknown_keys(
    map: &Map<String, Value>,
    pointer: &str,
    known: &[&str],
    issues: &mut Vec<ConfigIssue>,
) {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            issues
                .push(ConfigIssue::UnknownKey { pointer: pointer.to_string(), key: key.clone() });
        }
    }
}

/// A nonnegative JSON integer with a lower bound. Floats never satisfy
/// `as_u64`, so they are rejected here along with everything non-numeric.
fn parse_count(
    value: &Value,
    pointer: &str,
    min: u64,
    issues: &mut Vec<ConfigIssue>,
) -> Option<usize> {
    match value {
        Value::Number(n) => match n.as_u64() {
            Some(v) if v >= min => Some(v as usize),
            Some(v) => {
                issues.push(violation(pointer, format!("must be at least {min} (got {v})")));
                None
            }
            None => {
                issues.push(violation(
                    pointer,
                    "must be a nonnegative integer (floats are rejected)".to_string(),
                ));
                None
            }
        },
        _ => {
            issues.push(violation(pointer, "must be an integer".to_string()));
            None
        }
    }
}

fn parse_rat_value(value: &Value, pointer: &str, issues: &mut Vec<ConfigIssue>) -> Option<Rat> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(Rat::from_integer(Int::from(i)))
            } else if let Some(u) = n.as_u64() {
                Some(Rat::from_integer(Int::from(u)))
            } else {
                issues.push(violation(
                    pointer,
                    "floating-point literals are not exact; write an integer or a \"p/q\" string"
                        .to_string(),
                ));
                None
            }
        }
        Value::String(s) => match parse_rational(s) {
            Ok(r) => Some(r),
            Err(message) => {
                issues.push(violation(pointer, message));
                None
            }
        },
        _ => {
            issues.push(violation(
                pointer,
                "expected an integer or a \"p/q\" string".to_string(),
            ));
            None
        }
    }
}

fn parse_exact(value: &Value, pointer: &str, issues: &mut Vec<ConfigIssue>) -> Option<ExactValue> {
    match value {
        Value::Array(items) => {
            if items.is_empty() {
                issues.push(violation(pointer, "coordinate arrays must not be empty".to_string()));
                return None;
            }
            let mut coords = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                match parse_rat_value(item, &format!("{pointer}/{i}"), issues) {
                    Some(r) => coords.push(r),
                    None => ok = false,
                }
            }
            ok.then_some(ExactValue::Coordinates(coords))
        }
        other => parse_rat_value(other, pointer, issues).map(ExactValue::Rational),
    }
}

fn parse_exact_array(
    value: &Value,
    pointer: &str,
    require_nonempty: bool,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<ExactValue>> {
    let Value::Array(items) = value else {
        issues.push(violation(pointer, "expected an array of exact values".to_string()));
        return None;
    };
    if require_nonempty && items.is_empty() {
        issues.push(violation(pointer, "must not be empty".to_string()));
        return None;
    }
    let mut out = Vec::with_capacity(items.len());
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        match parse_exact(item, &format!("{pointer}/{i}"), issues) {
            Some(v) => out.push(v),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn parse_base_field(value: &Value, issues: &mut Vec<ConfigIssue>) -> Option<BaseFieldConfig> {
    let Some(map) = value.as_object() else {
        issues.push(violation("/base_field", "expected an object".to_string()));
        return None;
    };
    reject_unknown_keys(
        map,
        "/base_field",
        &["polynomial", "step_radicands", "designated_root"],
        issues,
    );
    let before = issues.len();
    let polynomial = match map.get("polynomial") {
        Some(Value::Array(items)) if items.len() >= 2 => {
            let mut coeffs = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                match parse_rat_value(item, &format!("/base_field/polynomial/{i}"), issues) {
                    Some(r) => coeffs.push(r),
                    None => ok = false,
                }
            }
            if ok && coeffs.last() != Some(&Rat::from_integer(Int::from(1))) {
                issues.push(violation(
                    "/base_field/polynomial",
                    "the minimal polynomial must be monic (leading coefficient 1, written last)"
                        .to_string(),
                ));
                ok = false;
            }
            ok.then_some(coeffs)
        }
        Some(Value::Array(_)) => {
            issues.push(violation(
                "/base_field/polynomial",
                "need at least two coefficients (constant term first, leading 1 last)".to_string(),
            ));
            None
        }
        Some(_) => {
            issues.push(violation(
                "/base_field/polynomial",
                "expected an array of coefficients".to_string(),
            ));
            None
        }
        None => {
            issues.push(violation("/base_field/polynomial", "missing required key".to_string()));
            None
        }
    };
    let step_radicands = match map.get("step_radicands") {
        None => Some(Vec::new()),
        Some(v) => parse_exact_array(v, "/base_field/step_radicands", false, issues),
    };
    let designated_root = match map.get("designated_root") {
        None => Some(None),
        Some(v) => parse_count(v, "/base_field/designated_root", 0, issues).map(Some),
    };
    (issues.len() == before).then(|| BaseFieldConfig {
        polynomial: polynomial.unwrap(),
        step_radicands: step_radicands.unwrap(),
        designated_root: designated_root.unwrap(),
    })
}

fn parse_gps(value: &Value, issues: &mut Vec<ConfigIssue>) -> Option<GpsConfig> {
    let Some(map) = value.as_object() else {
        issues.push(violation("/gps", "expected an object".to_string()));
        return None;
    };
    reject_unknown_keys(map, "/gps", &["alpha", "beta", "middles", "last", "n"], issues);
    let before = issues.len();
    let alpha = required_exact(map, "alpha", "/gps/alpha", issues);
    let beta = required_exact(map, "beta", "/gps/beta", issues);
    let middles = match map.get("middles") {
        Some(v) => parse_exact_array(v, "/gps/middles", true, issues),
        None => {
            issues.push(violation("/gps/middles", "missing required key".to_string()));
            None
        }
    };
    let last = required_exact(map, "last", "/gps/last", issues);
    let n = match map.get("n") {
        Some(v) => parse_count(v, "/gps/n", 2, issues),
        None => {
            issues.push(violation("/gps/n", "missing required key".to_string()));
            None
        }
    };
    if let (Some(middles), Some(n)) = (&middles, n) {
        if middles.len() + 1 != n {
            issues.push(violation(
                "/gps/n",
                format!(
                    "n must be one more than the number of middle coefficients (n = {n}, {} middles)",
                    middles.len()
                ),
            ));
        }
    }
    (issues.len() == before).then(|| GpsConfig {
        alpha: alpha.unwrap(),
        beta: beta.unwrap(),
        middles: middles.unwrap(),
        last: last.unwrap(),
        n: n.unwrap(),
    })
}

fn required_exact(
    map: &Map<String, Value>,
    key: &str,
    pointer: &str,
    issues: &mut Vec<ConfigIssue>,
) -> Option<ExactValue> {
    match map.get(key) {
        Some(v) => parse_exact(v, pointer, issues),
        None => {
            issues.push(violation(pointer, "missing required key".to_string()));
            None
        }
    }
}

fn parse_generators(
    value: &Value,
    dimension: Option<usize>,
    issues: &mut Vec<ConfigIssue>,
) -> Option<GeneratorConfig> {
    let Some(map) = value.as_object() else {
        issues.push(violation("/generators", "expected an object".to_string()));
        return None;
    };
    reject_unknown_keys(map, "/generators", &["sample_height", "sample_count", "inline"], issues);
    let before = issues.len();
    let sample_height = match map.get("sample_height") {
        None => Some(2i64),
        Some(v) => parse_count(v, "/generators/sample_height", 1, issues).and_then(|v| {
            i64::try_from(v).ok().or_else(|| {
                issues.push(violation(
                    "/generators/sample_height",
                    "unreasonably large sample height".to_string(),
                ));
                None
            })
        }),
    };
    let sample_count = match map.get("sample_count") {
        None => Some(24),
        Some(v) => parse_count(v, "/generators/sample_count", 1, issues),
    };
    let inline = match map.get("inline") {
        None => Some(Vec::new()),
        Some(Value::Array(items)) => {
            let mut matrices = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                match parse_matrix(item, &format!("/generators/inline/{i}"), dimension, issues) {
                    Some(m) => matrices.push(m),
                    None => ok = false,
                }
            }
            ok.then_some(matrices)
        }
        Some(_) => {
            issues.push(violation(
                "/generators/inline",
                "expected an array of matrices".to_string(),
            ));
            None
        }
    };
    (issues.len() == before).then(|| GeneratorConfig {
        sample_height: sample_height.unwrap(),
        sample_count: sample_count.unwrap(),
        inline: inline.unwrap(),
    })
}

fn parse_matrix(
    value: &Value,
    pointer: &str,
    dimension: Option<usize>,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<Vec<ExactValue>>> {
    let Value::Array(rows) = value else {
        issues.push(violation(pointer, "expected an array of rows".to_string()));
        return None;
    };
    let size = rows.len();
    if size == 0 {
        issues.push(violation(pointer, "matrix must not be empty".to_string()));
        return None;
    }
    if let Some(d) = dimension {
        if size != d {
            issues.push(violation(
                pointer,
                format!("matrix must be {d}x{d} to act on the forms (got {size} rows)"),
            ));
            return None;
        }
    }
    let mut out = Vec::with_capacity(size);
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        let row_pointer = format!("{pointer}/{i}");
        match row {
            Value::Array(cells) if cells.len() == size => {
                let mut parsed = Vec::with_capacity(size);
                for (j, cell) in cells.iter().enumerate() {
                    match parse_exact(cell, &format!("{row_pointer}/{j}"), issues) {
                        Some(v) => parsed.push(v),
                        None => ok = false,
                    }
                }
                out.push(parsed);
            }
            Value::Array(cells) => {
                issues.push(violation(
                    &row_pointer,
                    format!("row must have {size} entries (got {})", cells.len()),
                ));
                ok = false;
            }
            _ => {
                issues.push(violation(&row_pointer, "expected an array of entries".to_string()));
                ok = false;
            }
        }
    }
    (ok && out.len() == size).then_some(out)
}
