//! Branch-index arithmetic for the complex logarithm.
//!
//! `l_p(z) = log|z| + i(arg z + 2pπ)` with the principal argument taken in
//! `[0, 2π)`. The helpers here classify how `l_p` behaves under `z ↦ -z`,
//! `z ↦ 1/z` and under the difference `1/z1 - 1/z2`.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::Sign;

/// Sheet index of the logarithm.
///
/// A signed 64-bit integer; every operation that changes an index goes
/// through checked arithmetic in [`shift`].
pub type BranchIndex = i64;

/// Angles closer than this to the positive real axis are put on it.
pub const AXIS_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BranchError {
    #[error("logarithm of zero")]
    Zero,
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("branch index overflow")]
    Overflow,
}

/// Adds `delta` to a branch index, failing instead of wrapping.
pub fn shift(p: BranchIndex, delta: i64) -> Result<BranchIndex, BranchError> {
    p.checked_add(delta).ok_or(BranchError::Overflow)
}

/// A nonzero complex number together with its principal argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutComplex {
    pub z: Complex64,
    pub arg: f64,
}

impl CutComplex {
    pub fn new(z: Complex64) -> Result<Self, BranchError> {
        Ok(Self {
            z,
            arg: principal_arg(z)?,
        })
    }

    /// True when the point lies on the cut `arg z = 0`.
    pub fn on_axis(&self) -> bool {
        self.arg == 0.0
    }
}

/// Principal argument in `[0, 2π)`.
///
/// Points within [`AXIS_SNAP`] radians of the positive real axis report
/// exactly `0`.
pub fn principal_arg(z: Complex64) -> Result<f64, BranchError> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(BranchError::Zero);
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(BranchError::Degenerate("non-finite input"));
    }
    if z.re > 0.0 && z.im.abs() <= AXIS_SNAP * z.re {
        return Ok(0.0);
    }
    let mut a = z.im.atan2(z.re);
    if a < 0.0 {
        a += TAU;
    }
    if a >= TAU {
        a = 0.0;
    }
    Ok(a)
}

/// `l_p(z) = log|z| + i(arg z + 2pπ)`.
pub fn lp(p: BranchIndex, z: Complex64) -> Result<Complex64, BranchError> {
    let a = principal_arg(z)?;
    Ok(Complex64::new(z.norm().ln(), a + TAU * p as f64))
}

/// `σ` with `l_p(-z) = l_p(z) + σπi`.
pub fn neg_branch(_p: BranchIndex, z: Complex64) -> Result<i64, BranchError> {
    let a = principal_arg(z)?;
    Ok(if a < PI { 1 } else { -1 })
}

/// `p'` with `l_{p'}(1/z) = -l_p(z)`.
pub fn inv_branch(p: BranchIndex, z: Complex64) -> Result<BranchIndex, BranchError> {
    let a = principal_arg(z)?;
    let neg = p.checked_neg().ok_or(BranchError::Overflow)?;
    if a == 0.0 {
        Ok(neg)
    } else {
        shift(neg, -1)
    }
}

fn nondegenerate(z1: Complex64, z2: Complex64) -> Result<(), BranchError> {
    if z1 == Complex64::new(0.0, 0.0) || z2 == Complex64::new(0.0, 0.0) {
        return Err(BranchError::Zero);
    }
    if z1 == z2 {
        return Err(BranchError::Degenerate("z1 = z2"));
    }
    Ok(())
}

/// `1/z1 - 1/z2`.
pub fn inv_diff(z1: Complex64, z2: Complex64) -> Complex64 {
    z1.inv() - z2.inv()
}

/// The integer `q` with
/// `arg(1/z1 - 1/z2) = arg(z1-z2) - arg z1 - arg z2 + (2q+1)π`.
///
/// Inside the product region with the standard window `q ∈ {-1, 0, 1}`;
/// other configurations can give `q = 2` or `q = -2`.
pub fn q_offset_product(z1: Complex64, z2: Complex64) -> Result<i64, BranchError> {
    nondegenerate(z1, z2)?;
    let x = principal_arg(z1 - z2)? - principal_arg(z1)? - principal_arg(z2)? + PI;
    let target = principal_arg(inv_diff(z1, z2))?;
    Ok(((target - x) / TAU).round() as i64)
}

/// Same quantity as [`q_offset_product`]; the reversed region uses the
/// classification table `arg(z1-z2) - arg z1 ∈ (π/2, 3π/2) → 0`,
/// `∈ (-3π/2, -π/2) → 1`.
pub fn q_offset_reversed(z1: Complex64, z2: Complex64) -> Result<i64, BranchError> {
    q_offset_product(z1, z2)
}

/// Index `k` of the sheet of `1/z1 - 1/z2` matching
/// `l_{p12}(z1-z2) - l_{p1}(z1) - l_{p2}(z2) ± πi`, for an arbitrary `p12`.
pub fn diff_inv_index(
    p1: BranchIndex,
    p2: BranchIndex,
    p12: BranchIndex,
    z1: Complex64,
    z2: Complex64,
    sign: Sign,
) -> Result<BranchIndex, BranchError> {
    let q = q_offset_product(z1, z2)?;
    let minus = match sign {
        Sign::Plus => 0,
        Sign::Minus => 1,
    };
    let d = p1.checked_add(p2).ok_or(BranchError::Overflow)?;
    let k = p12.checked_sub(d).ok_or(BranchError::Overflow)?;
    shift(k, -q - minus)
}

/// Defect of `l_k(1/z1 - 1/z2) = l_{p12}(z1-z2) - l_{p1}(z1) - l_{p2}(z2) ± πi`.
pub fn diff_inv_residual(
    k: BranchIndex,
    p1: BranchIndex,
    p2: BranchIndex,
    p12: BranchIndex,
    z1: Complex64,
    z2: Complex64,
    sign: Sign,
) -> Result<f64, BranchError> {
    let lhs = lp(k, inv_diff(z1, z2))?;
    let rhs = lp(p12, z1 - z2)? - lp(p1, z1)? - lp(p2, z2)? + Complex64::new(0.0, sign.pm() * PI);
    Ok((lhs - rhs).norm())
}

/// Branch of `1/z1 - 1/z2` equal to `l_{p1+q}(z1-z2) - l_{p1}(z1) - l_{p2}(z2) + πi`
/// with `q` from [`q_offset_product`], plus the defect of that identity.
pub fn diff_inv_branch(
    p1: BranchIndex,
    p2: BranchIndex,
    z1: Complex64,
    z2: Complex64,
) -> Result<(BranchIndex, f64), BranchError> {
    let q = q_offset_product(z1, z2)?;
    let p12 = shift(p1, q)?;
    let k = diff_inv_index(p1, p2, p12, z1, z2, Sign::Plus)?;
    let res = diff_inv_residual(k, p1, p2, p12, z1, z2, Sign::Plus)?;
    Ok((k, res))
}

/// Iterate-region variant: the index `p12 - 2p2 + m + (1±1)/2` with
/// `l_{p12}(z1-z2) - l_{p2}(z1) - l_{p2}(z2) ± πi` on its left side, where
/// `arg(z1-z2) - arg z1 - arg z2 = arg(1/z1 - 1/z2) + (2m+1)π`.
pub fn iterate_inv_branch(
    p2: BranchIndex,
    p12: BranchIndex,
    z1: Complex64,
    z2: Complex64,
    sign: Sign,
) -> Result<(BranchIndex, f64), BranchError> {
    let m = -q_offset_product(z1, z2)? - 1;
    let half = match sign {
        Sign::Plus => 1,
        Sign::Minus => 0,
    };
    let two_p2 = p2.checked_mul(2).ok_or(BranchError::Overflow)?;
    let k = shift(p12.checked_sub(two_p2).ok_or(BranchError::Overflow)?, m + half)?;
    let lhs = lp(p12, z1 - z2)? - lp(p2, z1)? - lp(p2, z2)? + Complex64::new(0.0, sign.pm() * PI);
    let rhs = lp(k, inv_diff(z1, z2))?;
    Ok((k, (lhs - rhs).norm()))
}

/// The `q ∈ {0, -1}` in `arg z1 = arg z2 + arg(1 + (z1-z2)/z2) + 2qπ`,
/// valid for `|z2| > |z1-z2| > 0` and `|arg z1 - arg z2| < π/2`.
pub fn ratio_arg_decomposition(z1: Complex64, z2: Complex64) -> Result<i64, BranchError> {
    nondegenerate(z1, z2)?;
    let d = z1 - z2;
    if d.norm() >= z2.norm() {
        return Err(BranchError::Precondition(format!(
            "need |z2| > |z1-z2|, got |z2| = {}, |z1-z2| = {}",
            z2.norm(),
            d.norm()
        )));
    }
    let a1 = principal_arg(z1)?;
    let a2 = principal_arg(z2)?;
    if (a1 - a2).abs() >= PI / 2.0 {
        return Err(BranchError::Precondition(format!(
            "need |arg z1 - arg z2| < π/2, got {}",
            (a1 - a2).abs()
        )));
    }
    let a = principal_arg(Complex64::new(1.0, 0.0) + d / z2)?;
    Ok(((a1 - a2 - a) / TAU).round() as i64)
}
