//! Branch calculus and analytic continuation for two-variable logarithmic
//! functions of the form
//!
//! ```text
//! Σ a · z1^r · z2^s · (z1-z2)^t · (log z1)^l · (log z2)^m · (log(z1-z2))^n
//! ```
//!
//! together with the skew-symmetry and contragredient rewrites of such
//! functions and a harness that checks the associated duality, monodromy
//! and involution identities numerically.
//!
//! Module map:
//!
//! - [`branchcalc`]: `l_p(z)` and its behavior under negation, inversion and
//!   differences.
//! - [`logfun`]: the function type, branch evaluation, derivatives, region
//!   expansions, paths and continuation.
//! - [`transforms`]: automorphism actions, correlation families and the
//!   `Ω±` / `A±` rewrites.
//! - [`models`]: scenario generators and the phase-unwrapping oracle.
//! - [`verify`]: pass/fail checks and the suite runner.
//! - [`cli`]: scenario files and the `twistlab` command drivers.

pub mod branchcalc;
pub mod cli;
pub mod logfun;
pub mod models;
pub mod report;
pub mod transforms;
pub mod verify;

use serde::{Deserialize, Serialize};

/// Choice of `±` in the transforms and branch identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn pm(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Default tolerances.
pub mod tol {
    /// Branch and phase identities.
    pub const BRANCH: f64 = 1e-12;
    /// Continuation-based checks.
    pub const CONTINUATION: f64 = 1e-9;
    /// Region expansions at order 60 with radius ratio at most 0.6.
    pub const EXPANSION: f64 = 1e-9;
    pub const EXPANSION_ORDER: usize = 60;
    /// Shift identities on generated families.
    pub const SHIFT: f64 = 1e-10;
    /// Finite-difference step and tolerance for derivative checks.
    pub const FD_STEP: f64 = 1e-5;
    pub const FD: f64 = 1e-6;
    /// Oracle refinement: two successive step doublings must agree this well.
    pub const ORACLE_REFINE: f64 = 1e-10;
    /// Matrix arithmetic.
    pub const MATRIX: f64 = 1e-13;
}

/// `|a - b| / max(1, |b|)`: absolute for values of order one, relative for
/// larger ones. NaN maps to infinity so it can never pass a threshold.
pub fn scaled_defect(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    let d = (a - b).norm() / b.norm().max(1.0);
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}
