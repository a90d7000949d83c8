//! Numerical checks of the branch calculus and a parallel suite runner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::logfun::{BranchTriple, PathSpec};
use crate::report::CheckReport;
use crate::transforms::{AutomorphismAction, CMatrix, CorrelationFamily, QuasiPrimaryData};
use crate::Sign;

pub mod checks;
pub mod sampling;

pub use checks::CheckParams;

/// Which check a [`CheckSpec`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CheckKind {
    Duality,
    Lemma44,
    Thm46,
    Thm52,
    Thm62,
    Involution,
    Shifts,
    Continuation,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Duality => "duality",
            CheckKind::Lemma44 => "lemma44",
            CheckKind::Thm46 => "thm46",
            CheckKind::Thm52 => "thm52",
            CheckKind::Thm62 => "thm62",
            CheckKind::Involution => "involution",
            CheckKind::Shifts => "shifts",
            CheckKind::Continuation => "continuation",
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            CheckKind::Involution => 1e-12,
            CheckKind::Shifts => crate::tol::SHIFT,
            _ => 1e-9,
        }
    }

    /// Expansion order used when the check leaves it open. Contragredient
    /// images carry exponents shifted by twice the insertion weight, so their
    /// series need a longer truncation at the same radius ratio.
    pub fn default_order(self, base: usize) -> usize {
        match self {
            CheckKind::Thm62 => 2 * base,
            _ => base,
        }
    }

    fn signed(self) -> bool {
        matches!(self, CheckKind::Thm52 | CheckKind::Thm62)
    }
}

/// Deliberate corruption turning a check into a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Control {
    /// Duality compared on the sheet `p12 + 1`.
    WrongBranch,
    /// Crossing compared on the unshifted sheet.
    NoShift,
    /// `g1` multiplied by `e^{i/1000}`.
    PerturbG1,
    /// `g2` multiplied by `e^{i/1000}`.
    PerturbG2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignChoice {
    Plus,
    Minus,
}

impl From<SignChoice> for Sign {
    fn from(s: SignChoice) -> Sign {
        match s {
            SignChoice::Plus => Sign::Plus,
            SignChoice::Minus => Sign::Minus,
        }
    }
}

/// One entry of a scenario's check list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CheckSpec {
    pub kind: CheckKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt: Option<[i64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Control>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_fail: bool,
    /// Named path for `continuation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CheckSpec {
    pub fn new(kind: CheckKind) -> Self {
        Self {
            kind,
            name: None,
            tol: None,
            order: None,
            seed: None,
            samples: None,
            sign: None,
            bt: None,
            control: None,
            expect_fail: false,
            path: None,
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.name())
    }
}

/// A family with its quasi-primary data, named paths and checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// One name per basis vector of the label space.
    pub labels: Vec<String>,
    pub family: CorrelationFamily,
    pub qp: QuasiPrimaryData,
    pub paths: BTreeMap<String, PathSpec>,
    pub checks: Vec<CheckSpec>,
}

/// Defaults applied where a check leaves a setting open, plus overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub threads: usize,
    pub samples: usize,
    pub order: usize,
    pub seed: u64,
    /// Replaces every check's tolerance.
    pub tol: Option<f64>,
    /// Restricts signed checks to one sign.
    pub sign: Option<Sign>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            samples: 16,
            order: crate::tol::EXPANSION_ORDER,
            seed: 0,
            tol: None,
            sign: None,
        }
    }
}

fn perturbed(fam: &CorrelationFamily, which: Control) -> CorrelationFamily {
    let phase = crate::transforms::unit(1e-3);
    let scale = |m: &CMatrix| m * phase;
    let a = &fam.action;
    let action = match which {
        Control::PerturbG1 => AutomorphismAction {
            g1: scale(&a.g1),
            ..a.clone()
        },
        Control::PerturbG2 => AutomorphismAction {
            g2: scale(&a.g2),
            ..a.clone()
        },
        _ => a.clone(),
    };
    CorrelationFamily {
        action,
        f: fam.f.clone(),
    }
}

/// Runs one check spec; signed kinds without a fixed sign yield two reports.
pub fn run_check(sc: &Scenario, spec: &CheckSpec, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let kind = spec.kind;
    let tol = cfg.tol.or(spec.tol).unwrap_or(kind.default_tol());
    let params = CheckParams::new(
        spec.samples.unwrap_or(cfg.samples),
        spec.order.unwrap_or(kind.default_order(cfg.order)),
        tol,
        spec.seed.unwrap_or(cfg.seed),
    );
    let bt = spec.bt.map_or(BranchTriple::ZERO, |[a, b, c]| BranchTriple::new(a, b, c));
    let base = format!("{}/{}", sc.name, spec.label());
    let fam = match spec.control {
        Some(c @ (Control::PerturbG1 | Control::PerturbG2)) => perturbed(&sc.family, c),
        _ => sc.family.clone(),
    };
    let signs: Vec<Option<Sign>> = if kind.signed() {
        match (spec.sign.map(Sign::from), cfg.sign) {
            (Some(s), Some(c)) if s != c => Vec::new(),
            (Some(s), _) | (None, Some(s)) => vec![Some(s)],
            (None, None) => vec![Some(Sign::Plus), Some(Sign::Minus)],
        }
    } else {
        vec![None]
    };
    let many = kind.signed() && spec.sign.is_none();
    let negative = spec.expect_fail || spec.control.is_some();
    signs
        .into_iter()
        .map(|sign| {
            let mut r = match (kind, sign) {
                (CheckKind::Duality, _) => {
                    let off = match spec.control {
                        Some(Control::WrongBranch) => BranchTriple::new(0, 0, 1),
                        _ => BranchTriple::ZERO,
                    };
                    checks::check_duality_regions(&fam, bt, &params, off)
                }
                (CheckKind::Lemma44, _) => {
                    checks::check_lemma44(&fam, bt, &params, spec.control != Some(Control::NoShift))
                }
                (CheckKind::Thm46, _) => checks::check_thm46_monodromy(&fam, bt, &params),
                (CheckKind::Thm52, Some(s)) => checks::check_thm52_omega(&fam, s, bt, &params),
                (CheckKind::Thm62, Some(s)) => checks::check_thm62_contragredient(&fam, sc.qp, s, bt, &params),
                (CheckKind::Involution, _) => checks::check_involution(&fam, sc.qp, &params),
                (CheckKind::Shifts, _) => checks::check_shifts(&fam, bt, &params),
                (CheckKind::Continuation, _) => match spec.path.as_ref().and_then(|p| sc.paths.get(p)) {
                    Some(path) => checks::check_continuation(&fam, bt, path, &params),
                    None => CheckReport::errored(
                        "continuation",
                        params.seed,
                        tol,
                        format!("unknown path {:?}", spec.path.as_deref().unwrap_or("")),
                    ),
                },
                (CheckKind::Thm52 | CheckKind::Thm62, None) => unreachable!("signed kinds carry a sign"),
            };
            r.name = match sign {
                Some(Sign::Plus) if many => format!("{base}.plus"),
                Some(Sign::Minus) if many => format!("{base}.minus"),
                _ => base.clone(),
            };
            if negative {
                r = r.expecting_failure();
            }
            r
        })
        .collect()
}

/// Runs every check of every scenario on a scoped thread pool. Reports are
/// sorted by name, so the output does not depend on scheduling.
pub fn run_suite(scenarios: &[Scenario], cfg: &SuiteConfig) -> Vec<CheckReport> {
    let jobs: Vec<(&Scenario, &CheckSpec)> =
        scenarios.iter().flat_map(|s| s.checks.iter().map(move |c| (s, c))).collect();
    let threads = cfg.threads.max(1).min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<CheckReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(&(sc, spec)) = jobs.get(i) else { break };
                        mine.extend(run_check(sc, spec, cfg));
                    }
                    mine
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("check thread panicked")).collect()
    });
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}
