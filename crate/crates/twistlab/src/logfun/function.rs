use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::branchcalc::{lp, BranchError, BranchIndex};

/// Coefficients below this magnitude are dropped by [`LogFunction::normalize`].
pub const ZERO_COEFF: f64 = 1e-15;

/// `coeff · z1^r · z2^s · (z1-z2)^t · (log z1)^l · (log z2)^m · (log(z1-z2))^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMonomial {
    pub coeff: Complex64,
    pub r: Complex64,
    pub s: Complex64,
    pub t: Complex64,
    pub l: u32,
    pub m: u32,
    pub n: u32,
}

impl LogMonomial {
    pub fn new(coeff: Complex64, r: Complex64, s: Complex64, t: Complex64, l: u32, m: u32, n: u32) -> Self {
        Self { coeff, r, s, t, l, m, n }
    }

    /// Monomial with real exponents and unit coefficient.
    pub fn real(r: f64, s: f64, t: f64, l: u32, m: u32, n: u32) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new(c(1.0), c(r), c(s), c(t), l, m, n)
    }

    pub fn with_coeff(mut self, coeff: Complex64) -> Self {
        self.coeff = coeff;
        self
    }

    /// Lexicographic order on `(r, s, t, l, m, n)`.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        let parts = [
            (self.r.re, other.r.re),
            (self.r.im, other.r.im),
            (self.s.re, other.s.re),
            (self.s.im, other.s.im),
            (self.t.re, other.t.re),
            (self.t.im, other.t.im),
        ];
        for (a, b) in parts {
            match a.total_cmp(&b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        (self.l, self.m, self.n).cmp(&(other.l, other.m, other.n))
    }

    /// Keys agree to within `tol` in every exponent and exactly in the log powers.
    pub fn key_close(&self, other: &Self, tol: f64) -> bool {
        (self.l, self.m, self.n) == (other.l, other.m, other.n)
            && (self.r - other.r).norm() <= tol
            && (self.s - other.s).norm() <= tol
            && (self.t - other.t).norm() <= tol
    }

    fn canonical_zeros(mut self) -> Self {
        let fix = |z: Complex64| Complex64::new(z.re + 0.0, z.im + 0.0);
        self.r = fix(self.r);
        self.s = fix(self.s);
        self.t = fix(self.t);
        self
    }
}

/// Finite sum of [`LogMonomial`]s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogFunction {
    pub terms: Vec<LogMonomial>,
}

/// Sheet choice `(p1, p2, p12)` for `log z1`, `log z2`, `log(z1-z2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BranchTriple {
    pub p1: BranchIndex,
    pub p2: BranchIndex,
    pub p12: BranchIndex,
}

impl BranchTriple {
    pub const ZERO: BranchTriple = BranchTriple { p1: 0, p2: 0, p12: 0 };

    pub fn new(p1: BranchIndex, p2: BranchIndex, p12: BranchIndex) -> Self {
        Self { p1, p2, p12 }
    }

    pub fn shifted(self, d1: i64, d2: i64, d12: i64) -> Self {
        Self::new(self.p1 + d1, self.p2 + d2, self.p12 + d12)
    }

    pub fn as_array(self) -> [BranchIndex; 3] {
        [self.p1, self.p2, self.p12]
    }
}

/// Which variable a derivative or a path move acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Z1,
    Z2,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::Z1 => Var::Z2,
            Var::Z2 => Var::Z1,
        }
    }
}

/// `z^e` on the sheet whose logarithm is `log`; integer exponents skip the
/// logarithm entirely so their values are sheet-independent bit for bit.
pub(crate) fn pow_on_sheet(e: Complex64, log: Complex64, z: Complex64) -> Complex64 {
    if e.im == 0.0 && e.re == e.re.round() && e.re.abs() <= 1024.0 {
        if e.re == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z.powi(e.re as i32)
        }
    } else {
        (e * log).exp()
    }
}

impl LogFunction {
    pub fn new(terms: Vec<LogMonomial>) -> Self {
        Self { terms }.normalize()
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(m: LogMonomial) -> Self {
        Self::new(vec![m])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merges equal keys, drops coefficients below [`ZERO_COEFF`] and sorts.
    pub fn normalize(self) -> Self {
        let mut terms: Vec<LogMonomial> = self.terms.into_iter().map(LogMonomial::canonical_zeros).collect();
        terms.sort_by(|a, b| a.cmp_key(b));
        let mut out: Vec<LogMonomial> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.cmp_key(&t) == Ordering::Equal => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff.norm() >= ZERO_COEFF);
        Self { terms: out }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| t.with_coeff(t.coeff * c))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(terms)
    }

    /// `Σ c_j f_j`.
    pub fn combination<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = (Complex64, &'a LogFunction)>,
    {
        let mut terms = Vec::new();
        for (c, f) in parts {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            terms.extend(f.terms.iter().map(|t| t.with_coeff(t.coeff * c)));
        }
        Self::new(terms)
    }

    /// Largest coefficient mismatch after pairing terms whose exponents
    /// agree within `key_tol`; unpaired terms count with their full size.
    pub fn coefficient_distance(&self, other: &Self, key_tol: f64) -> f64 {
        let mut used = vec![false; other.terms.len()];
        let mut worst: f64 = 0.0;
        for a in &self.terms {
            let mut acc = a.coeff;
            for (j, b) in other.terms.iter().enumerate() {
                if !used[j] && a.key_close(b, key_tol) {
                    used[j] = true;
                    acc -= b.coeff;
                }
            }
            worst = worst.max(acc.norm());
        }
        for (j, b) in other.terms.iter().enumerate() {
            if !used[j] {
                worst = worst.max(b.coeff.norm());
            }
        }
        worst
    }

    /// Branch value `f^{p1,p2,p12}(z1, z2)`.
    pub fn eval_branch2(&self, bt: BranchTriple, z1: Complex64, z2: Complex64) -> Result<Complex64, BranchError> {
        let z12 = z1 - z2;
        let l1 = lp(bt.p1, z1)?;
        let l2 = lp(bt.p2, z2)?;
        let l12 = lp(bt.p12, z12)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut v = t.coeff * pow_on_sheet(t.r, l1, z1) * pow_on_sheet(t.s, l2, z2) * pow_on_sheet(t.t, l12, z12);
            if t.l > 0 {
                v *= l1.powu(t.l);
            }
            if t.m > 0 {
                v *= l2.powu(t.m);
            }
            if t.n > 0 {
                v *= l12.powu(t.n);
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Formal partial derivative; the result is normalized.
    pub fn differentiate(&self, var: Var) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.terms.len() * 4);
        for t in &self.terms {
            let (e, pw) = match var {
                Var::Z1 => (t.r, t.l),
                Var::Z2 => (t.s, t.m),
            };
            let lower = |m: &mut LogMonomial| match var {
                Var::Z1 => m.r -= one,
                Var::Z2 => m.s -= one,
            };
            if e != Complex64::new(0.0, 0.0) {
                let mut d = t.with_coeff(t.coeff * e);
                lower(&mut d);
                out.push(d);
            }
            if pw > 0 {
                let mut d = t.with_coeff(t.coeff * pw as f64);
                lower(&mut d);
                match var {
                    Var::Z1 => d.l -= 1,
                    Var::Z2 => d.m -= 1,
                }
                out.push(d);
            }
            let chain = match var {
                Var::Z1 => 1.0,
                Var::Z2 => -1.0,
            };
            if t.t != Complex64::new(0.0, 0.0) {
                let mut d = t.with_coeff(t.coeff * t.t * chain);
                d.t -= one;
                out.push(d);
            }
            if t.n > 0 {
                let mut d = t.with_coeff(t.coeff * (t.n as f64 * chain));
                d.t -= one;
                d.n -= 1;
                out.push(d);
            }
        }
        Self::new(out)
    }

    /// Derivatives `f, ∂f, ∂²f, …, ∂^order f` in one variable.
    pub fn derivative_tower(&self, var: Var, order: usize) -> Vec<LogFunction> {
        let mut out = Vec::with_capacity(order + 1);
        out.push(self.clone());
        for j in 0..order {
            let next = out[j].differentiate(var);
            out.push(next);
        }
        out
    }

    /// Largest `|Re|` among all exponents, and the largest log power.
    pub fn bounds(&self) -> (f64, u32) {
        let mut e: f64 = 0.0;
        let mut p = 0;
        for t in &self.terms {
            e = e.max(t.r.re.abs()).max(t.s.re.abs()).max(t.t.re.abs());
            p = p.max(t.l).max(t.m).max(t.n);
        }
        (e, p)
    }
}

/// One term `a · x^n · (log x)^k` of a one-variable series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub a: Complex64,
    pub n: Complex64,
    pub k: u32,
}

/// Finite one-variable logarithmic series `Σ a x^n (log x)^k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OneVarLogSeries {
    pub terms: Vec<SeriesTerm>,
}

impl OneVarLogSeries {
    pub fn new(terms: Vec<SeriesTerm>) -> Self {
        Self { terms }
    }

    /// Branch value `X^p(z) = Σ a e^{n l_p(z)} l_p(z)^k`.
    pub fn eval_branch1(&self, p: BranchIndex, z: Complex64) -> Result<Complex64, BranchError> {
        let l = lp(p, z)?;
        Ok(self
            .terms
            .iter()
            .map(|t| t.a * pow_on_sheet(t.n, l, z) * l.powu(t.k))
            .sum())
    }

    /// The `z2` slot of a two-variable function: `Σ a x^s (log x)^m`.
    pub fn z2_slot(f: &LogFunction) -> Self {
        Self::new(
            f.terms
                .iter()
                .map(|t| SeriesTerm { a: t.coeff, n: t.s, k: t.m })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalize_cancels_and_is_idempotent() {
        let m = LogMonomial::real(0.5, 0.0, 1.0, 0, 1, 0);
        let f = LogFunction::new(vec![m, m.with_coeff(c(-1.0, 0.0))]);
        assert!(f.is_zero());
        let g = LogFunction::new(vec![LogMonomial::real(1.0, 2.0, 0.0, 0, 0, 0), m]);
        assert_eq!(g.clone().normalize(), g);
    }

    #[test]
    fn negative_zero_exponent_merges() {
        let a = LogMonomial::new(c(1.0, 0.0), c(-0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 0, 0, 0);
        let b = LogMonomial::real(0.0, 0.0, 0.0, 0, 0, 0);
        assert_eq!(LogFunction::new(vec![a, b]).terms.len(), 1);
    }

    #[test]
    fn eval_examples() {
        let z1 = LogFunction::monomial(LogMonomial::real(1.0, 0.0, 0.0, 0, 0, 0));
        for bt in [BranchTriple::ZERO, BranchTriple::new(3, -2, 5)] {
            assert_eq!(z1.eval_branch2(bt, c(3.0, 4.0), c(1.0, 0.0)).unwrap(), c(3.0, 4.0));
        }
        let sq = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 0.5, 0, 0, 0));
        let v0 = sq.eval_branch2(BranchTriple::ZERO, c(2.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v0 - c(1.5f64.sqrt(), 0.0)).norm() < 1e-15);
        let v1 = sq.eval_branch2(BranchTriple::new(0, 0, 1), c(2.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v1 + c(1.5f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_branch1_examples() {
        let sq = OneVarLogSeries::new(vec![SeriesTerm { a: c(1.0, 0.0), n: c(0.5, 0.0), k: 0 }]);
        assert!((sq.eval_branch1(0, c(4.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        assert!((sq.eval_branch1(1, c(4.0, 0.0)).unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
        let lg = OneVarLogSeries::new(vec![SeriesTerm { a: c(1.0, 0.0), n: c(0.0, 0.0), k: 1 }]);
        let e = std::f64::consts::E;
        assert!((lg.eval_branch1(0, c(e, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn differentiate_examples() {
        let sq = LogFunction::monomial(LogMonomial::real(2.0, 0.0, 0.0, 0, 0, 0));
        let d = sq.differentiate(Var::Z1);
        assert_eq!(d, LogFunction::monomial(LogMonomial::real(1.0, 0.0, 0.0, 0, 0, 0).with_coeff(c(2.0, 0.0))));
        let lg = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 0.0, 0, 1, 0));
        assert_eq!(
            lg.differentiate(Var::Z2),
            LogFunction::monomial(LogMonomial::real(0.0, -1.0, 0.0, 0, 0, 0))
        );
    }

    #[test]
    fn coefficient_distance_pairs_close_keys() {
        let a = LogFunction::monomial(LogMonomial::real(1.0 / 3.0, 0.0, 0.0, 0, 0, 0));
        let b = LogFunction::monomial(LogMonomial::real(1.0 / 3.0 + 1e-15, 0.0, 0.0, 0, 0, 0));
        assert!(a.coefficient_distance(&b, 1e-12) < 1e-15);
        assert!((a.coefficient_distance(&LogFunction::zero(), 1e-12) - 1.0).abs() < 1e-15);
    }
}
