use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::logfun::BranchTriple;

/// Where a check did worst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorstPoint {
    pub z1: Complex64,
    pub z2: Complex64,
    pub bt: BranchTriple,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

/// Sub-result of a check with several independent parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartReport {
    pub name: String,
    pub pass: bool,
    #[serde(deserialize_with = "nullable_f64")]
    pub max_defect: f64,
    pub samples: usize,
}

/// Outcome of one check. `pass` holds exactly when `max_defect < tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    #[serde(deserialize_with = "nullable_f64")]
    pub max_defect: f64,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<WorstPoint>,
    /// Set on negative controls, which are expected to fail.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_fail: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<PartReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn nullable_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl CheckReport {
    /// Report for a check that could not run.
    pub fn errored(name: impl Into<String>, seed: u64, tol: f64, msg: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: false,
            max_defect: f64::INFINITY,
            tol,
            samples: 0,
            seed,
            worst_point: None,
            expect_fail: false,
            parts: Vec::new(),
            error: Some(msg.into()),
        }
    }

    /// Whether the outcome is the intended one: a pass, or a failure of a
    /// negative control.
    pub fn as_expected(&self) -> bool {
        self.pass != self.expect_fail
    }

    pub fn expecting_failure(mut self) -> Self {
        self.expect_fail = true;
        self
    }
}

/// Running maximum of defects for one check, with the worst point.
#[derive(Debug, Clone)]
pub struct Defects {
    name: String,
    tol: f64,
    seed: u64,
    max: f64,
    samples: usize,
    worst: Option<WorstPoint>,
    parts: Vec<PartReport>,
    part_start: Option<(String, f64, usize)>,
}

impl Defects {
    pub fn new(name: impl Into<String>, tol: f64, seed: u64) -> Self {
        Self {
            name: name.into(),
            tol,
            seed,
            max: 0.0,
            samples: 0,
            worst: None,
            parts: Vec::new(),
            part_start: None,
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Records one sample; NaN is treated as an infinite defect.
    pub fn record(&mut self, defect: f64, at: impl FnOnce() -> WorstPoint) {
        let d = if defect.is_nan() { f64::INFINITY } else { defect };
        self.samples += 1;
        if let Some(p) = self.part_start.as_mut() {
            p.1 = p.1.max(d);
            p.2 += 1;
        }
        if self.worst.is_none() || d > self.max {
            self.max = self.max.max(d);
            self.worst = Some(at());
        }
    }

    /// Opens a named part; subsequent samples count toward it.
    pub fn part(&mut self, name: impl Into<String>) {
        self.close_part();
        self.part_start = Some((name.into(), 0.0, 0));
    }

    fn close_part(&mut self) {
        if let Some((name, max, samples)) = self.part_start.take() {
            self.parts.push(PartReport {
                name,
                pass: max < self.tol,
                max_defect: max,
                samples,
            });
        }
    }

    /// Folds a finished sub-check into the current part.
    pub fn absorb(&mut self, r: &CheckReport) {
        let worst = r.worst_point.clone();
        let d = if r.error.is_some() { f64::INFINITY } else { r.max_defect };
        self.samples += r.samples.saturating_sub(1);
        if let Some(p) = self.part_start.as_mut() {
            p.2 += r.samples.saturating_sub(1);
        }
        self.record(d, || {
            worst.unwrap_or(WorstPoint {
                z1: Complex64::new(0.0, 0.0),
                z2: Complex64::new(0.0, 0.0),
                bt: BranchTriple::ZERO,
                label: None,
            })
        });
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn finish(mut self) -> CheckReport {
        self.close_part();
        let pass = self.max < self.tol;
        CheckReport {
            name: self.name,
            pass,
            max_defect: self.max,
            tol: self.tol,
            samples: self.samples,
            seed: self.seed,
            worst_point: if pass { None } else { self.worst },
            expect_fail: false,
            parts: self.parts,
            error: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt() -> WorstPoint {
        WorstPoint {
            z1: Complex64::new(1.0, 0.0),
            z2: Complex64::new(0.5, 0.0),
            bt: BranchTriple::ZERO,
            label: None,
        }
    }

    #[test]
    fn pass_iff_below_tol() {
        let mut d = Defects::new("x", 1e-9, 0);
        d.record(1e-10, pt);
        let r = d.finish();
        assert!(r.pass && r.worst_point.is_none());
        let mut d = Defects::new("x", 1e-9, 0);
        d.record(f64::NAN, pt);
        let r = d.finish();
        assert!(!r.pass && r.worst_point.is_some() && r.max_defect.is_infinite());
    }

    #[test]
    fn parts_split_samples() {
        let mut d = Defects::new("x", 1e-9, 3);
        d.part("a");
        d.record(1e-12, pt);
        d.part("b");
        d.record(1.0, pt);
        d.record(0.0, pt);
        let r = d.finish();
        assert_eq!(r.parts.len(), 2);
        assert!(r.parts[0].pass && !r.parts[1].pass);
        assert_eq!(r.parts[1].samples, 2);
        assert_eq!(r.samples, 3);
    }

    #[test]
    fn serialized_field_names() {
        let r = Defects::new("n", 1e-9, 7).finish();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"name":"n","pass":true,"maxDefect":0.0,"tol":1e-9,"samples":0,"seed":7}"#);
        let e = serde_json::to_string(&CheckReport::errored("n", 0, 1e-9, "boom")).unwrap();
        assert!(e.contains("\"maxDefect\":null") && e.contains("\"error\":\"boom\""));
        let back: CheckReport = serde_json::from_str(&e).unwrap();
        assert!(back.max_defect.is_infinite());
    }
}
