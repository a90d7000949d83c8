//! Operator-level constructions at the level of correlation functions:
//! precomposition by an automorphism, the skew-symmetry rewrite `Ω±`, the
//! contragredient rewrite `A±`, and the branch-shift identities that tie
//! automorphisms to sheet changes.
//!
//! A [`CorrelationFamily`] stores one [`LogFunction`] per basis label and
//! extends linearly, so `f(g u)` for a matrix `g` is the combination of the
//! stored functions with the entries of column `u` of `g`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branchcalc::{inv_branch, BranchError, BranchIndex};
use crate::logfun::{BranchTriple, LogFunction, LogMonomial, OneVarLogSeries, SeriesTerm};
use crate::report::{CheckReport, Defects, WorstPoint};
use crate::{scaled_defect, Sign};

pub type CMatrix = DMatrix<Complex64>;

/// Determinant modulus below which a matrix counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} is singular")]
    Singular(String),
}

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Inverse of a square matrix, rejecting near-singular input.
pub fn checked_inverse(m: &CMatrix, what: &str) -> Result<CMatrix, TransformError> {
    if !m.is_square() {
        return Err(TransformError::Dimension(format!("{what} is {}x{}", m.nrows(), m.ncols())));
    }
    if m.determinant().norm() <= SINGULAR_DET {
        return Err(TransformError::Singular(what.to_string()));
    }
    m.clone().try_inverse().ok_or_else(|| TransformError::Singular(what.to_string()))
}

/// The three automorphisms acting on the label space.
#[derive(Debug, Clone, PartialEq)]
pub struct AutomorphismAction {
    pub g1: CMatrix,
    pub g2: CMatrix,
    pub g3: CMatrix,
}

impl AutomorphismAction {
    pub fn new(g1: CMatrix, g2: CMatrix, g3: CMatrix) -> Result<Self, TransformError> {
        let d = g1.nrows();
        for (m, name) in [(&g1, "g1"), (&g2, "g2"), (&g3, "g3")] {
            if m.nrows() != d || m.ncols() != d {
                return Err(TransformError::Dimension(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            checked_inverse(m, name)?;
        }
        Ok(Self { g1, g2, g3 })
    }

    /// Scalar action on a one-dimensional label space.
    pub fn scalar(g1: Complex64, g2: Complex64, g3: Complex64) -> Self {
        let m = |z| CMatrix::from_element(1, 1, z);
        Self {
            g1: m(g1),
            g2: m(g2),
            g3: m(g3),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let e = CMatrix::identity(dim, dim);
        Self {
            g1: e.clone(),
            g2: e.clone(),
            g3: e,
        }
    }

    pub fn dim(&self) -> usize {
        self.g1.nrows()
    }

    /// `h g h⁻¹` applied to all three.
    pub fn conjugated(&self, h: &CMatrix, h_inv: &CMatrix) -> Self {
        Self {
            g1: h * &self.g1 * h_inv,
            g2: h * &self.g2 * h_inv,
            g3: h * &self.g3 * h_inv,
        }
    }
}

/// Weights of the two quasi-primary slots: the inserted label (`wt_u`) and
/// the `w1` slot (`h1`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuasiPrimaryData {
    pub wt_u: Complex64,
    pub h1: Complex64,
}

impl QuasiPrimaryData {
    pub fn new(wt_u: f64, h1: f64) -> Self {
        Self {
            wt_u: Complex64::new(wt_u, 0.0),
            h1: Complex64::new(h1, 0.0),
        }
    }
}

/// A linear map from labels to functions, together with automorphisms.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFamily {
    pub action: AutomorphismAction,
    /// `f[u]` is the function attached to basis label `u`.
    pub f: Vec<LogFunction>,
}

impl CorrelationFamily {
    pub fn new(action: AutomorphismAction, f: Vec<LogFunction>) -> Result<Self, TransformError> {
        if f.len() != action.dim() {
            return Err(TransformError::Dimension(format!(
                "{} labels but automorphisms are {}x{}",
                f.len(),
                action.dim(),
                action.dim()
            )));
        }
        Ok(Self { action, f })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// `f(Σ_j v_j e_j)`.
    pub fn apply(&self, v: &[Complex64]) -> LogFunction {
        LogFunction::combination(v.iter().copied().zip(self.f.iter()))
    }

    /// `f(m e_u)`, the image of column `u` of `m`.
    pub fn apply_column(&self, m: &CMatrix, u: usize) -> LogFunction {
        let col: Vec<Complex64> = m.column(u).iter().copied().collect();
        self.apply(&col)
    }

    /// Applies `op` label by label, keeping the automorphisms.
    pub fn map_functions(&self, op: impl Fn(&LogFunction) -> LogFunction) -> Self {
        Self {
            action: self.action.clone(),
            f: self.f.iter().map(op).collect(),
        }
    }
}

/// `f'(u) = f(h⁻¹u)` with automorphisms conjugated to `h g h⁻¹`.
pub fn phi_precompose(fam: &CorrelationFamily, h: &CMatrix) -> Result<CorrelationFamily, TransformError> {
    if h.nrows() != fam.dim() || h.ncols() != fam.dim() {
        return Err(TransformError::Dimension(format!(
            "h is {}x{}, family has {} labels",
            h.nrows(),
            h.ncols(),
            fam.dim()
        )));
    }
    let h_inv = checked_inverse(h, "h")?;
    Ok(CorrelationFamily {
        action: fam.action.conjugated(h, &h_inv),
        f: (0..fam.dim()).map(|u| fam.apply_column(&h_inv, u)).collect(),
    })
}

fn binom(n: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `g± = Σ e^{±sπi} a (z1-z2)^r z2^s z1^t (log(z1-z2))^l (log z2 ± πi)^m (log z1)^n`,
/// with the shifted `log z2` power expanded binomially.
pub fn omega_transform(f: &LogFunction, sign: Sign) -> LogFunction {
    let shift = I * (PI * sign.pm());
    let mut out = Vec::new();
    for t in &f.terms {
        let c = t.coeff * (shift * t.s).exp();
        for j in 0..=t.m {
            let k = c * binom(t.m, j) * shift.powu(t.m - j);
            out.push(LogMonomial::new(k, t.t, t.s, t.r, t.n, j, t.l));
        }
    }
    LogFunction::new(out)
}

/// `h± = Σ e^{±tπi} a z1^{-(r+t)} z2^{-(s+t)} (z1-z2)^t (-log z1)^l (-log z2)^m
/// (log(z1-z2) - log z1 - log z2 ± πi)^n`, expanded multinomially.
///
/// The input is expected to carry the modified coefficients produced by
/// [`quasi_primary_modify`].
pub fn a_transform(fmod: &LogFunction, sign: Sign) -> LogFunction {
    let shift = I * (PI * sign.pm());
    let mut out = Vec::new();
    for t in &fmod.terms {
        let c = t.coeff * (shift * t.t).exp();
        let r = -(t.r + t.t);
        let s = -(t.s + t.t);
        // (L12 + (-L1) + (-L2) + shift)^n = Σ n!/(a!b!c!d!) L12^a (-L1)^b (-L2)^c shift^d
        for a in 0..=t.n {
            for b in 0..=t.n - a {
                for cc in 0..=t.n - a - b {
                    let d = t.n - a - b - cc;
                    let multinom = binom(t.n, a) * binom(t.n - a, b) * binom(t.n - a - b, cc);
                    let l = t.l + b;
                    let m = t.m + cc;
                    let parity = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
                    let k = c * multinom * parity * shift.powu(d);
                    out.push(LogMonomial::new(k, r, s, t.t, l, m, a));
                }
            }
        }
    }
    LogFunction::new(out)
}

/// Scalar reduction of the insertion operators on quasi-primary slots:
/// coefficients times `e^{πi wt_u} e^{±πi h1}`, exponents `r + 2 wt_u`,
/// `s + 2 h1`.
pub fn quasi_primary_modify(f: &LogFunction, qp: QuasiPrimaryData, sign: Sign) -> LogFunction {
    let phase = (I * PI * qp.wt_u).exp() * (I * PI * sign.pm() * qp.h1).exp();
    LogFunction::new(
        f.terms
            .iter()
            .map(|t| {
                let mut m = t.with_coeff(t.coeff * phase);
                m.r += 2.0 * qp.wt_u;
                m.s += 2.0 * qp.h1;
                m
            })
            .collect(),
    )
}

/// `A±` on a single function: [`quasi_primary_modify`] then [`a_transform`].
pub fn contragredient(f: &LogFunction, qp: QuasiPrimaryData, sign: Sign) -> LogFunction {
    a_transform(&quasi_primary_modify(f, qp, sign), sign)
}

/// Family-level `Ω±`. The label space is unchanged; the automorphisms follow
/// the swapped module roles: `(g2, g2⁻¹g1g2, g3)` for `+` and
/// `(g1g2g1⁻¹, g1, g3)` for `-`.
pub fn omega_family(fam: &CorrelationFamily, sign: Sign) -> Result<CorrelationFamily, TransformError> {
    let a = &fam.action;
    let action = match sign {
        Sign::Plus => {
            let g2_inv = checked_inverse(&a.g2, "g2")?;
            AutomorphismAction {
                g1: a.g2.clone(),
                g2: &g2_inv * &a.g1 * &a.g2,
                g3: a.g3.clone(),
            }
        }
        Sign::Minus => {
            let g1_inv = checked_inverse(&a.g1, "g1")?;
            AutomorphismAction {
                g1: &a.g1 * &a.g2 * &g1_inv,
                g2: a.g1.clone(),
                g3: a.g3.clone(),
            }
        }
    };
    Ok(CorrelationFamily {
        action,
        f: fam.f.iter().map(|f| omega_transform(f, sign)).collect(),
    })
}

/// Family-level `A±`. Automorphisms: `g1` is kept, the second slot becomes
/// the contragredient of the target (`g3⁻¹` for `+`, `g1⁻¹g3⁻¹g1` for `-`)
/// and the new target is `g1g2⁻¹g1⁻¹` resp. `g2⁻¹`. The insertion weight
/// contributes the scalar `e^{4πi wt_u}` to the last two, which is `1`
/// whenever `2 wt_u` is an integer.
pub fn a_family(
    fam: &CorrelationFamily,
    qp: QuasiPrimaryData,
    sign: Sign,
) -> Result<CorrelationFamily, TransformError> {
    let a = &fam.action;
    let w = (4.0 * PI * I * qp.wt_u).exp();
    let g1_inv = checked_inverse(&a.g1, "g1")?;
    let g2_inv = checked_inverse(&a.g2, "g2")?;
    let g3_inv = checked_inverse(&a.g3, "g3")?;
    let (g2, g3) = match sign {
        Sign::Plus => (&g3_inv * w, &a.g1 * &g2_inv * &g1_inv * w),
        Sign::Minus => (&g1_inv * &g3_inv * &a.g1 * w, &g2_inv * w),
    };
    Ok(CorrelationFamily {
        action: AutomorphismAction {
            g1: a.g1.clone(),
            g2,
            g3,
        },
        f: fam.f.iter().map(|f| contragredient(f, qp, sign)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShiftSlot {
    P12,
    P1,
}

fn check_shift(
    name: &str,
    fam: &CorrelationFamily,
    g: &CMatrix,
    slot: ShiftSlot,
    bt: BranchTriple,
    points: &[(Complex64, Complex64)],
    tol: f64,
) -> CheckReport {
    let mut d = Defects::new(name, tol, 0);
    let shifted = match slot {
        ShiftSlot::P12 => bt.shifted(0, 0, 1),
        ShiftSlot::P1 => bt.shifted(1, 0, 0),
    };
    for u in 0..fam.dim() {
        let fg = fam.apply_column(g, u);
        for &(z1, z2) in points {
            let lhs = fg.eval_branch2(shifted, z1, z2);
            let rhs = fam.f[u].eval_branch2(bt, z1, z2);
            let defect = match (lhs, rhs) {
                (Ok(a), Ok(b)) => scaled_defect(a, b),
                _ => f64::INFINITY,
            };
            d.record(defect, || WorstPoint {
                z1,
                z2,
                bt,
                label: Some(u),
            });
        }
    }
    d.finish()
}

/// `f^{p1,p2,p12+1}(g1 u) = f^{p1,p2,p12}(u)` on every label and point.
pub fn check_g1_shift(
    fam: &CorrelationFamily,
    bt: BranchTriple,
    points: &[(Complex64, Complex64)],
    tol: f64,
) -> CheckReport {
    check_shift("g1Shift", fam, &fam.action.g1, ShiftSlot::P12, bt, points, tol)
}

/// `f^{p1+1,p2,p12}(g2 u) = f^{p1,p2,p12}(u)` on every label and point.
pub fn check_g2_shift(
    fam: &CorrelationFamily,
    bt: BranchTriple,
    points: &[(Complex64, Complex64)],
    tol: f64,
) -> CheckReport {
    check_shift("g2Shift", fam, &fam.action.g2, ShiftSlot::P1, bt, points, tol)
}

/// Fixed generic points used for admissibility screening.
pub const SCREEN_POINTS: [(Complex64, Complex64); 6] = [
    (Complex64::new(1.3, 0.4), Complex64::new(-0.7, 0.9)),
    (Complex64::new(-1.1, -0.6), Complex64::new(0.5, -0.8)),
    (Complex64::new(0.35, 1.7), Complex64::new(1.2, 0.25)),
    (Complex64::new(-0.4, 0.3), Complex64::new(-1.6, -1.1)),
    (Complex64::new(2.2, -0.9), Complex64::new(0.6, 0.45)),
    (Complex64::new(-0.8, -1.9), Complex64::new(-0.3, 0.7)),
];

/// Both branch-shift identities on [`SCREEN_POINTS`] at two sheet triples.
pub fn screen_admissible(fam: &CorrelationFamily, tol: f64) -> Result<(), CheckReport> {
    for bt in [BranchTriple::ZERO, BranchTriple::new(1, -1, 2)] {
        for r in [
            check_g1_shift(fam, bt, &SCREEN_POINTS, tol),
            check_g2_shift(fam, bt, &SCREEN_POINTS, tol),
        ] {
            if !r.pass {
                return Err(r);
            }
        }
    }
    Ok(())
}

/// The one-variable contragredient relation on the `z2` slot: with
/// `X = Σ a x^s (log x)^m` taken from each label, the `p`-branch of its
/// `A±` image at `z` equals `e^{±πi h1} e^{2 h1 l_{p'}(1/z)} X^{p'}(1/z)`
/// with `p' = inv_branch(p, z)`.
///
/// The image is computed with [`contragredient`] on the slot embedded as a
/// function of `z2` alone, so the transform code itself is under test.
pub fn a_eval_relation(
    fam: &CorrelationFamily,
    qp: QuasiPrimaryData,
    p: BranchIndex,
    z: Complex64,
    sign: Sign,
    tol: f64,
) -> Result<CheckReport, BranchError> {
    let slot_qp = QuasiPrimaryData {
        wt_u: Complex64::new(0.0, 0.0),
        h1: qp.h1,
    };
    let p_inv = inv_branch(p, z)?;
    let zi = ONE / z;
    let l_inv = crate::branchcalc::lp(p_inv, zi)?;
    let prefactor = (I * PI * sign.pm() * qp.h1).exp() * (2.0 * qp.h1 * l_inv).exp();
    let mut d = Defects::new("aEvalRelation", tol, 0);
    for (u, f) in fam.f.iter().enumerate() {
        let x = OneVarLogSeries::z2_slot(f);
        let embedded = LogFunction::new(
            x.terms
                .iter()
                .map(|t| LogMonomial::new(t.a, Complex64::new(0.0, 0.0), t.n, Complex64::new(0.0, 0.0), 0, t.k, 0))
                .collect(),
        );
        let image = contragredient(&embedded, slot_qp, sign);
        let image_slot = OneVarLogSeries::new(
            image
                .terms
                .iter()
                .map(|t| SeriesTerm { a: t.coeff, n: t.s, k: t.m })
                .collect(),
        );
        let lhs = image_slot.eval_branch1(p, z)?;
        let rhs = prefactor * x.eval_branch1(p_inv, zi)?;
        d.record(scaled_defect(lhs, rhs), || WorstPoint {
            z1: Complex64::new(0.0, 0.0),
            z2: z,
            bt: BranchTriple::new(0, p, 0),
            label: Some(u),
        });
    }
    Ok(d.finish())
}

/// Phase `e^{2πi x}`.
pub fn turn(x: Complex64) -> Complex64 {
    (2.0 * PI * I * x).exp()
}

/// Phase `e^{iθ}` for real `θ`.
pub fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}
