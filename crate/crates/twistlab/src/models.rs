//! Concrete admissible families and the phase-unwrapping oracle.
//!
//! A family with log powers cannot be one-dimensional and still satisfy the
//! branch-shift identities, since shifting a sheet turns `(log z)^k` into a
//! combination of lower powers. The generators therefore build a *tower*:
//! labels `u_{a,b}` with `a ≤ l`, `b ≤ n` and
//!
//! ```text
//! f(u_{a,b}) = base · (log z1)^a · (log(z1-z2))^b
//! ```
//!
//! on which sheet shifts act by unipotent matrices times a phase. The
//! automorphisms are the inverses of those matrices. With `l = n = 0` this is
//! the plain scalar model, `g1 = e^{-2πi t}`, `g2 = e^{-2πi r}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logfun::{BranchTriple, Config, LogFunction, LogMonomial, PathError, PathSpec};
use crate::transforms::{AutomorphismAction, CMatrix, CorrelationFamily, QuasiPrimaryData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("bounds out of range: {0}")]
    Bounds(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("oracle did not settle: last doubling changed the value by {change:e}")]
    NonConvergence { change: f64 },
    #[error("oracle met a degenerate point")]
    Degenerate,
}

/// One tower block of a generated family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// Exponent of `z1` modulo integers shared by all terms of `base`.
    pub r: Complex64,
    /// Exponent of `z1 - z2` modulo integers shared by all terms of `base`.
    pub t: Complex64,
    /// Tower height in `log z1` and in `log(z1-z2)`.
    pub l: u32,
    pub n: u32,
    /// Log-free-in-`z1` part; may carry `log z2` powers.
    pub base: LogFunction,
    /// Index of this block's first label.
    pub offset: usize,
}

impl Component {
    pub fn dim(&self) -> usize {
        ((self.l + 1) * (self.n + 1)) as usize
    }

    fn label(&self, a: u32, b: u32) -> usize {
        self.offset + (a * (self.n + 1) + b) as usize
    }

    /// Exact phases `(-t, -r, -(r+t))` modulo 1 when `r` and `t` are small
    /// rationals.
    pub fn exact_phases(&self) -> Option<[Rational64; 3]> {
        let r = exact_rational(self.r)?;
        let t = exact_rational(self.t)?;
        Some([frac(-t), frac(-r), frac(-(r + t))])
    }
}

/// Generated scenario data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AbelianScenario {
    pub seed: u64,
    pub qp: QuasiPrimaryData,
    pub dim: usize,
    pub components: Vec<Component>,
}

/// Fractional part in `[0, 1)`.
pub fn frac(q: Rational64) -> Rational64 {
    q - q.floor()
}

/// The rational `num/den` with `den ≤ 64` whose `f64` quotient is exactly
/// `x`, if `x` is real and such a rational exists.
pub fn exact_rational(x: Complex64) -> Option<Rational64> {
    if x.im != 0.0 || !x.re.is_finite() || x.re.abs() > 1e6 {
        return None;
    }
    for den in 1..=64i64 {
        let num = (x.re * den as f64).round();
        if num / den as f64 == x.re {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

/// Exact `(r mod 1, t mod 1)` of a function all of whose terms are free of
/// `log z1` and `log(z1-z2)` and share rational `r` and `t` modulo 1.
pub fn label_phases(f: &LogFunction) -> Option<(Rational64, Rational64)> {
    let mut out: Option<(Rational64, Rational64)> = None;
    for t in &f.terms {
        if t.l > 0 || t.n > 0 {
            return None;
        }
        let key = (frac(exact_rational(t.r)?), frac(exact_rational(t.t)?));
        match out {
            None => out = Some(key),
            Some(k) if k != key => return None,
            _ => {}
        }
    }
    out
}

fn binom(n: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Sheet-shift matrix of a tower: `f^{shift}(v) = f(M v)`, where the shift
/// multiplies by `e^{2πi e}` and raises the log in the `b` index (`by_b`) or
/// the `a` index by `2πi`.
fn shift_matrix(c: &Component, e: Complex64, by_b: bool, dim: usize) -> CMatrix {
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let phase = (two_pi_i * e).exp();
    let mut m = CMatrix::zeros(dim, dim);
    for a in 0..=c.l {
        for b in 0..=c.n {
            let col = c.label(a, b);
            if by_b {
                for k in 0..=b {
                    m[(c.label(a, k), col)] = phase * binom(b, k) * two_pi_i.powu(b - k);
                }
            } else {
                for k in 0..=a {
                    m[(c.label(k, b), col)] = phase * binom(a, k) * two_pi_i.powu(a - k);
                }
            }
        }
    }
    m
}

fn assemble(components: Vec<Component>, qp: QuasiPrimaryData, seed: u64) -> (CorrelationFamily, AbelianScenario) {
    let dim: usize = components.iter().map(Component::dim).sum();
    let mut f = vec![LogFunction::zero(); dim];
    let mut m1 = CMatrix::zeros(dim, dim);
    let mut m2 = CMatrix::zeros(dim, dim);
    for c in &components {
        for a in 0..=c.l {
            for b in 0..=c.n {
                f[c.label(a, b)] = LogFunction::new(
                    c.base
                        .terms
                        .iter()
                        .map(|t| {
                            let mut m = *t;
                            m.l += a;
                            m.n += b;
                            m
                        })
                        .collect(),
                );
            }
        }
        m1 += shift_matrix(c, c.t, true, dim);
        m2 += shift_matrix(c, c.r, false, dim);
    }
    // Block upper-triangular with unimodular diagonal, so always invertible.
    let g1 = m1.try_inverse().expect("tower shift matrix is invertible");
    let g2 = m2.try_inverse().expect("tower shift matrix is invertible");
    let g3 = &g1 * &g2;
    let fam = CorrelationFamily {
        action: AutomorphismAction { g1, g2, g3 },
        f,
    };
    let scen = AbelianScenario {
        seed,
        qp,
        dim,
        components,
    };
    (fam, scen)
}

/// `f(u) = z1^r z2^s (z1-z2)^t (log z2)^m` extended to a tower of height
/// `(l, n)`; one label when `l = n = 0`.
pub fn make_abelian(
    r: Complex64,
    s: Complex64,
    t: Complex64,
    log_powers: [u32; 3],
    qp: QuasiPrimaryData,
) -> (CorrelationFamily, AbelianScenario) {
    let [l, m, n] = log_powers;
    let base = LogFunction::monomial(LogMonomial::new(Complex64::new(1.0, 0.0), r, s, t, 0, m, 0));
    let c = Component {
        r,
        t,
        l,
        n,
        base,
        offset: 0,
    };
    assemble(vec![c], qp, 0)
}

/// Real-exponent convenience wrapper around [`make_abelian`].
pub fn make_abelian_real(r: f64, s: f64, t: f64, log_powers: [u32; 3], qp: QuasiPrimaryData) -> (CorrelationFamily, AbelianScenario) {
    let c = |x: f64| Complex64::new(x, 0.0);
    make_abelian(c(r), c(s), c(t), log_powers, qp)
}

/// Limits for [`make_random`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bounds {
    /// Largest `|Re|` of any exponent. Zero gives a constant family.
    pub exponent: f64,
    pub log_power: u32,
    pub dim: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            log_power: 2,
            dim: 3,
        }
    }
}

const DENOMS: [i64; 7] = [1, 2, 3, 4, 5, 6, 8];

fn random_rational(rng: &mut ChaCha8Rng, bound: f64) -> Rational64 {
    let den = DENOMS[rng.gen_range(0..DENOMS.len())];
    let max = (bound * den as f64).floor() as i64;
    if max == 0 {
        return Rational64::from_integer(0);
    }
    Rational64::new(rng.gen_range(-max..=max), den)
}

fn to_c(q: Rational64) -> Complex64 {
    Complex64::new(*q.numer() as f64 / *q.denom() as f64, 0.0)
}

/// Reproducible random admissible family: a direct sum of towers whose
/// terms share `r` and `t` modulo 1 within each block, with rational
/// exponents, an integer insertion weight and a rational `h1`.
pub fn make_random(seed: u64, bounds: Bounds) -> Result<(CorrelationFamily, AbelianScenario), ModelError> {
    if !(0.0..=2.0).contains(&bounds.exponent) || bounds.log_power > 2 || bounds.dim == 0 || bounds.dim > 3 {
        return Err(ModelError::Bounds(format!(
            "need 0 ≤ exponent ≤ 2, log power ≤ 2, 1 ≤ dim ≤ 3; got {bounds:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constant = bounds.exponent == 0.0;
    let max_log = if constant { 0 } else { bounds.log_power };
    let target = rng.gen_range(1..=bounds.dim);
    let mut components = Vec::new();
    let mut used = 0;
    while used < target {
        let room = target - used;
        let (l, n) = loop {
            let l = rng.gen_range(0..=max_log);
            let n = rng.gen_range(0..=max_log);
            if ((l + 1) * (n + 1)) as usize <= room {
                break (l, n);
            }
        };
        // Shared classes; each term then moves by an integer within bounds.
        let r0 = random_rational(&mut rng, bounds.exponent);
        let t0 = random_rational(&mut rng, bounds.exponent);
        let nterms = rng.gen_range(1..=3);
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let shift = |rng: &mut ChaCha8Rng, x: Rational64| {
                let k = Rational64::from_integer(rng.gen_range(-1..=1));
                let moved = x + k;
                if (*moved.numer() as f64 / *moved.denom() as f64).abs() <= bounds.exponent {
                    moved
                } else {
                    x
                }
            };
            let r = shift(&mut rng, r0);
            let t = shift(&mut rng, t0);
            let s = random_rational(&mut rng, bounds.exponent);
            let m = rng.gen_range(0..=max_log);
            let coeff = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            terms.push(LogMonomial::new(coeff, to_c(r), to_c(s), to_c(t), 0, m, 0));
        }
        let mut base = LogFunction::new(terms);
        if base.is_zero() {
            base = LogFunction::monomial(LogMonomial::new(Complex64::new(1.0, 0.0), to_c(r0), to_c(Rational64::from_integer(0)), to_c(t0), 0, 0, 0));
        }
        let c = Component {
            r: to_c(r0),
            t: to_c(t0),
            l,
            n,
            base,
            offset: used,
        };
        used += c.dim();
        components.push(c);
    }
    let qp = if constant {
        QuasiPrimaryData::default()
    } else {
        let wt = rng.gen_range(-1..=2) as f64;
        let h1 = random_rational(&mut rng, 1.0);
        QuasiPrimaryData::new(wt, *h1.numer() as f64 / *h1.denom() as f64)
    };
    Ok(assemble(components, qp, seed))
}

/// Initial per-move step count of the oracle.
pub const ORACLE_MIN_STEPS: usize = 256;
const ORACLE_MAX_DOUBLINGS: u32 = 8;

/// End value and end logarithms from the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: Complex64,
    /// Continued `log z1`, `log z2`, `log(z1-z2)`.
    pub logs: [Complex64; 3],
    pub steps: usize,
}

/// Argument in `[0, 2π)`, with the same positive-axis snap as the branch
/// calculus so both start on the same sheet.
fn start_arg(z: Complex64) -> f64 {
    if z.re > 0.0 && z.im.abs() <= 1e-14 * z.re {
        return 0.0;
    }
    let a = z.im.atan2(z.re);
    let a = if a < 0.0 { a + 2.0 * PI } else { a };
    if a >= 2.0 * PI {
        0.0
    } else {
        a
    }
}

fn start_log(p: i64, z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), start_arg(z) + 2.0 * PI * p as f64)
}

fn direct_eval(f: &LogFunction, logs: [Complex64; 3]) -> Complex64 {
    let [l1, l2, l12] = logs;
    f.terms
        .iter()
        .map(|t| {
            t.coeff
                * (t.r * l1 + t.s * l2 + t.t * l12).exp()
                * l1.powu(t.l)
                * l2.powu(t.m)
                * l12.powu(t.n)
        })
        .sum()
}

fn unwrap_once(f: &LogFunction, bt: BranchTriple, path: &PathSpec, steps: usize) -> Result<OracleValue, ModelError> {
    let s = path.start;
    let mut logs = [start_log(bt.p1, s.z1), start_log(bt.p2, s.z2), start_log(bt.p12, s.diff())];
    let mut prev: Config = s;
    for m in &path.moves {
        let s0 = prev;
        for k in 1..=steps {
            let next = m.position(s0, k as f64 / steps as f64);
            let olds = [prev.z1, prev.z2, prev.diff()];
            let news = [next.z1, next.z2, next.diff()];
            for j in 0..3 {
                if olds[j] == Complex64::new(0.0, 0.0) || news[j] == Complex64::new(0.0, 0.0) {
                    return Err(ModelError::Degenerate);
                }
                logs[j] += (news[j] / olds[j]).ln();
            }
            prev = next;
        }
    }
    Ok(OracleValue {
        value: direct_eval(f, logs),
        logs,
        steps,
    })
}

/// Continues `f^{bt}` along `path` by accumulating `Log(w_new / w_old)` for
/// each of `z1`, `z2`, `z1 - z2` between uniform samples and evaluating the
/// terms directly on the accumulated logarithms. Sheet indices are never
/// consulted after the start point. The step count per move starts at
/// `max(steps, 256)` and doubles until two successive results agree to
/// `1e-10` relative to `max(1, |value|)`.
pub fn oracle_continue(f: &LogFunction, bt: BranchTriple, path: &PathSpec, steps: usize) -> Result<OracleValue, ModelError> {
    path.validate(crate::logfun::path::CLEARANCE)?;
    let mut n = steps.max(ORACLE_MIN_STEPS);
    let mut last = unwrap_once(f, bt, path, n)?;
    let mut change = f64::INFINITY;
    for _ in 0..ORACLE_MAX_DOUBLINGS {
        n *= 2;
        let next = unwrap_once(f, bt, path, n)?;
        change = crate::scaled_defect(next.value, last.value);
        last = next;
        if change < crate::tol::ORACLE_REFINE {
            return Ok(last);
        }
    }
    Err(ModelError::NonConvergence { change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logfun::{Center, Var};
    use crate::transforms::{screen_admissible, turn};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn untwisted_and_integer_phases_are_trivial() {
        for (r, t) in [(0.0, 0.0), (2.0, -1.0)] {
            let (fam, _) = make_abelian_real(r, 0.5, t, [0, 0, 0], QuasiPrimaryData::default());
            for g in [&fam.action.g1, &fam.action.g2, &fam.action.g3] {
                assert!((g[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn third_half_phases() {
        let (fam, scen) = make_abelian_real(1.0 / 3.0, 0.0, 0.5, [0, 0, 0], QuasiPrimaryData::default());
        assert!((fam.action.g1[(0, 0)] + c(1.0, 0.0)).norm() < 1e-12);
        assert!((fam.action.g2[(0, 0)] - turn(c(-1.0 / 3.0, 0.0))).norm() < 1e-12);
        assert!((fam.action.g3[(0, 0)] - turn(c(-5.0 / 6.0, 0.0))).norm() < 1e-12);
        let [a, b, g] = scen.components[0].exact_phases().unwrap();
        assert_eq!((a, b, g), (Rational64::new(1, 2), Rational64::new(2, 3), Rational64::new(1, 6)));
        assert_eq!(frac(a + b), g);
    }

    #[test]
    fn towers_are_admissible() {
        for lp in [[1, 0, 0], [0, 2, 1], [2, 1, 0], [1, 1, 1]] {
            let (fam, scen) = make_abelian_real(0.25, -0.5, 1.0 / 3.0, lp, QuasiPrimaryData::default());
            assert_eq!(scen.dim, ((lp[0] + 1) * (lp[2] + 1)) as usize);
            screen_admissible(&fam, 1e-10).unwrap();
        }
    }

    #[test]
    fn random_families_are_admissible_and_reproducible() {
        for seed in 0..40 {
            let (fam, scen) = make_random(seed, Bounds::default()).unwrap();
            assert!(scen.dim <= 3);
            screen_admissible(&fam, 1e-10).unwrap_or_else(|r| panic!("seed {seed}: {r:?}"));
            assert_eq!(make_random(seed, Bounds::default()).unwrap().0, fam);
        }
    }

    #[test]
    fn zero_range_is_constant() {
        let (fam, _) = make_random(5, Bounds { exponent: 0.0, ..Bounds::default() }).unwrap();
        for f in &fam.f {
            for t in &f.terms {
                assert_eq!((t.r, t.s, t.t, t.l, t.m, t.n), (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 0, 0, 0));
            }
        }
        assert!(make_random(0, Bounds { dim: 4, ..Bounds::default() }).is_err());
    }

    #[test]
    fn oracle_examples() {
        let ints = LogFunction::monomial(LogMonomial::real(2.0, -1.0, 3.0, 0, 0, 0));
        let sq = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 0.5, 0, 0, 0));
        let p = PathSpec::new(c(2.0, 0.0), c(1.5, 0.0)).arc(Var::Z1, Center::Other, 1.0);
        let v0 = ints.eval_branch2(BranchTriple::ZERO, p.start.z1, p.start.z2).unwrap();
        assert!((oracle_continue(&ints, BranchTriple::ZERO, &p, 256).unwrap().value - v0).norm() < 1e-10);
        let s0 = sq.eval_branch2(BranchTriple::ZERO, p.start.z1, p.start.z2).unwrap();
        assert!((oracle_continue(&sq, BranchTriple::ZERO, &p, 256).unwrap().value + s0).norm() < 1e-10);
    }

    #[test]
    fn exact_rational_detection() {
        assert_eq!(exact_rational(c(1.0 / 3.0, 0.0)), Some(Rational64::new(1, 3)));
        assert_eq!(exact_rational(c(-1.25, 0.0)), Some(Rational64::new(-5, 4)));
        assert_eq!(exact_rational(c(0.1234567, 0.0)), None);
        assert_eq!(exact_rational(c(0.5, 0.1)), None);
    }
}
