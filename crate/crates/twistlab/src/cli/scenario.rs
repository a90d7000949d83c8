//! The `twistlab/1` scenario file format.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logfun::path::CLEARANCE;
use crate::logfun::{LogFunction, LogMonomial, PathSpec};
use crate::models::exact_rational;
use crate::transforms::{screen_admissible, AutomorphismAction, CMatrix, CorrelationFamily, QuasiPrimaryData};
use crate::verify::{CheckKind, CheckSpec, Scenario};

pub const VERSION: &str = "twistlab/1";

/// Shift-identity tolerance applied when a file is loaded.
pub const ADMISSIBLE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

/// An exponent, either `[re, im]` or an exact `{num, den}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentFile {
    // Tried first: a plain struct would also accept a two-element array.
    Complex(Complex64),
    Rational(RationalFile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFile {
    pub num: i64,
    pub den: i64,
}

impl ExponentFile {
    fn value(self, field: &str) -> Result<Complex64, ScenarioError> {
        match self {
            ExponentFile::Complex(z) if z.re.is_finite() && z.im.is_finite() => Ok(z),
            ExponentFile::Complex(_) => Err(invalid(field, "exponent is not finite")),
            ExponentFile::Rational(RationalFile { den: 0, .. }) => Err(invalid(field, "zero denominator")),
            ExponentFile::Rational(RationalFile { num, den }) => Ok(Complex64::new(num as f64 / den as f64, 0.0)),
        }
    }

    fn from_value(z: Complex64) -> Self {
        match exact_rational(z) {
            Some(q) => ExponentFile::Rational(RationalFile {
                num: *q.numer(),
                den: *q.denom(),
            }),
            None => ExponentFile::Complex(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub coeff: Complex64,
    pub r: ExponentFile,
    pub s: ExponentFile,
    pub t: ExponentFile,
    #[serde(default)]
    pub l: u32,
    #[serde(default)]
    pub m: u32,
    #[serde(default)]
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<Vec<Vec<Complex64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<Vec<Vec<Complex64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g3: Option<Vec<Vec<Complex64>>>,
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    pub name: String,
    pub labels: Vec<String>,
    /// Monomials of each label, in label order.
    pub terms: Vec<Vec<TermFile>>,
    pub automorphisms: AutomorphismsFile,
    #[serde(default)]
    pub quasi_primary: QuasiPrimaryData,
    #[serde(default)]
    pub paths: BTreeMap<String, PathSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn matrix(rows: &Option<Vec<Vec<Complex64>>>, field: &str, dim: usize) -> Result<CMatrix, ScenarioError> {
    let rows = rows.as_ref().ok_or_else(|| invalid(field, "missing"))?;
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl ScenarioFile {
    /// Validates the file and builds the scenario.
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        if self.version != VERSION {
            return Err(invalid("version", format!("expected {VERSION:?}, got {:?}", self.version)));
        }
        let dim = self.labels.len();
        if dim == 0 {
            return Err(invalid("labels", "at least one label is required"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Err(invalid(format!("labels[{i}]"), format!("duplicate label {l:?}")));
            }
        }
        if self.terms.len() != dim {
            return Err(invalid("terms", format!("expected {dim} term lists, one per label")));
        }
        let mut f = Vec::with_capacity(dim);
        for (i, list) in self.terms.iter().enumerate() {
            let mut monos = Vec::with_capacity(list.len());
            for (j, t) in list.iter().enumerate() {
                let at = |x: &str| format!("terms[{i}][{j}].{x}");
                if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() {
                    return Err(invalid(at("coeff"), "coefficient is not finite"));
                }
                monos.push(LogMonomial::new(
                    t.coeff,
                    t.r.value(&at("r"))?,
                    t.s.value(&at("s"))?,
                    t.t.value(&at("t"))?,
                    t.l,
                    t.m,
                    t.n,
                ));
            }
            f.push(LogFunction::new(monos));
        }
        let a = &self.automorphisms;
        let action = AutomorphismAction::new(
            matrix(&a.g1, "automorphisms.g1", dim)?,
            matrix(&a.g2, "automorphisms.g2", dim)?,
            matrix(&a.g3, "automorphisms.g3", dim)?,
        )
        .map_err(|e| invalid("automorphisms", e.to_string()))?;
        let family = CorrelationFamily::new(action, f).map_err(|e| invalid("terms", e.to_string()))?;
        if let Err(r) = screen_admissible(&family, ADMISSIBLE_TOL) {
            return Err(invalid(
                "automorphisms",
                format!("family is not admissible: {} defect {:e}", r.name, r.max_defect),
            ));
        }
        for (name, p) in &self.paths {
            p.validate(CLEARANCE)
                .map_err(|e| invalid(format!("paths.{name}"), e.to_string()))?;
        }
        for (i, c) in self.checks.iter().enumerate() {
            if c.kind == CheckKind::Continuation {
                match &c.path {
                    Some(p) if self.paths.contains_key(p) => {}
                    Some(p) => return Err(invalid(format!("checks[{i}].path"), format!("unknown path {p:?}"))),
                    None => return Err(invalid(format!("checks[{i}].path"), "continuation needs a path")),
                }
            }
        }
        Ok(Scenario {
            name: self.name,
            labels: self.labels,
            family,
            qp: self.quasi_primary,
            paths: self.paths,
            checks: self.checks,
        })
    }

    /// Canonical file form: terms normalized, exact rationals written as `{num, den}`.
    pub fn from_scenario(sc: &Scenario) -> Self {
        let terms = sc
            .family
            .f
            .iter()
            .map(|f| {
                f.terms
                    .iter()
                    .map(|t| TermFile {
                        coeff: t.coeff,
                        r: ExponentFile::from_value(t.r),
                        s: ExponentFile::from_value(t.s),
                        t: ExponentFile::from_value(t.t),
                        l: t.l,
                        m: t.m,
                        n: t.n,
                    })
                    .collect()
            })
            .collect();
        let a = &sc.family.action;
        Self {
            version: VERSION.into(),
            name: sc.name.clone(),
            labels: sc.labels.clone(),
            terms,
            automorphisms: AutomorphismsFile {
                g1: Some(rows(&a.g1)),
                g2: Some(rows(&a.g2)),
                g3: Some(rows(&a.g3)),
            },
            quasi_primary: sc.qp,
            paths: sc.paths.clone(),
            checks: sc.checks.clone(),
        }
    }
}

pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_slice(bytes)?;
    file.into_scenario()
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_json(sc: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioFile::from_scenario(sc)).expect("scenario serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": "twistlab/1",
        "name": "sqrt",
        "labels": ["u"],
        "terms": [[{"coeff": [1, 0], "r": [0, 0], "s": [0, 0], "t": {"num": 1, "den": 2}, "m": 0}]],
        "automorphisms": {"g1": [[[-1, 0]]], "g2": [[[1, 0]]], "g3": [[[-1, 0]]]}
    }"#;

    #[test]
    fn minimal_parses_and_round_trips() {
        let sc = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(sc.family.dim(), 1);
        let text = to_json(&sc);
        assert!(text.contains("\"den\": 2"));
        let again = parse_scenario(text.as_bytes()).unwrap();
        assert_eq!(again, sc);
        assert_eq!(to_json(&again), text);
    }

    #[test]
    fn missing_g3_names_the_field() {
        let bad = MINIMAL.replace(r#", "g3": [[[-1, 0]]]"#, "");
        let e = parse_scenario(bad.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("automorphisms.g3"), "{e}");
    }

    #[test]
    fn rejections() {
        let unknown = MINIMAL.replace(r#""name": "sqrt","#, r#""name": "sqrt", "extra": 1,"#);
        assert!(matches!(parse_scenario(unknown.as_bytes()), Err(ScenarioError::Json(_))));
        let singular = MINIMAL.replace(r#""g2": [[[1, 0]]]"#, r#""g2": [[[0, 0]]]"#);
        let e = parse_scenario(singular.as_bytes()).unwrap_err();
        assert!(e.to_string().starts_with("automorphisms"), "{e}");
        let wrong_g1 = MINIMAL.replace(r#""g1": [[[-1, 0]]]"#, r#""g1": [[[1, 0]]]"#);
        assert!(parse_scenario(wrong_g1.as_bytes()).unwrap_err().to_string().contains("not admissible"));
        let bad_dim = MINIMAL.replace(r#""g1": [[[-1, 0]]]"#, r#""g1": [[[-1, 0], [0, 0]]]"#);
        assert!(parse_scenario(bad_dim.as_bytes()).unwrap_err().to_string().contains("automorphisms.g1"));
        let zero_den = MINIMAL.replace(r#""den": 2"#, r#""den": 0"#);
        assert!(parse_scenario(zero_den.as_bytes()).unwrap_err().to_string().contains("terms[0][0].t"));
        assert!(matches!(parse_scenario(b"{not json"), Err(ScenarioError::Json(_))));
    }
}
