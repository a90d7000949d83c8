use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::{BranchTriple, LogFunction, LogMonomial};
use crate::branchcalc::{principal_arg, BranchError};

/// The three convergence regions of a two-variable function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionId {
    /// `|z1| > |z2| > 0`, expanded in `z2/z1`.
    Product,
    /// `|z2| > |z1| > 0`, expanded in `z1/z2`.
    Reversed,
    /// `|z2| > |z1-z2| > 0`, expanded in `(z1-z2)/z2`.
    Iterate,
}

impl RegionId {
    pub const ALL: [RegionId; 3] = [RegionId::Product, RegionId::Reversed, RegionId::Iterate];

    pub fn name(self) -> &'static str {
        match self {
            RegionId::Product => "product",
            RegionId::Reversed => "reversed",
            RegionId::Iterate => "iterate",
        }
    }

    /// Sheet the region's series sums to inside its argument window:
    /// `(p1,p2,p1)`, `(p1,p2,p2)` and `(p2,p2,p12)`.
    pub fn designated(self, bt: BranchTriple) -> BranchTriple {
        match self {
            RegionId::Product => BranchTriple::new(bt.p1, bt.p2, bt.p1),
            RegionId::Reversed => BranchTriple::new(bt.p1, bt.p2, bt.p2),
            RegionId::Iterate => BranchTriple::new(bt.p2, bt.p2, bt.p12),
        }
    }

    /// Inner over outer radius; the region proper is where this is below 1.
    pub fn radius_ratio(self, z1: Complex64, z2: Complex64) -> f64 {
        match self {
            RegionId::Product => z2.norm() / z1.norm(),
            RegionId::Reversed => z1.norm() / z2.norm(),
            RegionId::Iterate => (z1 - z2).norm() / z2.norm(),
        }
    }

    /// Argument-window test with the window shrunk by `margin` on each side.
    pub fn in_window(self, z1: Complex64, z2: Complex64, margin: f64) -> Result<bool, BranchError> {
        let a1 = principal_arg(z1)?;
        let a2 = principal_arg(z2)?;
        let a12 = principal_arg(z1 - z2)?;
        Ok(match self {
            RegionId::Product => (a12 - a1).abs() < PI / 2.0 - margin,
            RegionId::Reversed => {
                let d = a12 - a2;
                d > -1.5 * PI + margin && d < -PI / 2.0 - margin
            }
            RegionId::Iterate => (a1 - a2).abs() < PI / 2.0 - margin,
        })
    }
}

/// Total ordering wrapper for a complex exponent (real part first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpKey(pub Complex64);

impl Eq for ExpKey {}

impl PartialOrd for ExpKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExpKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .re
            .total_cmp(&other.0.re)
            .then(self.0.im.total_cmp(&other.0.im))
    }
}

/// Truncated region series, grouped by the total exponent of the inner
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionExpansion {
    pub region: RegionId,
    pub order: usize,
    pub bt: BranchTriple,
    pub groups: BTreeMap<ExpKey, LogFunction>,
}

impl RegionExpansion {
    /// Sum of all groups on the designated sheet.
    pub fn evaluate(&self, z1: Complex64, z2: Complex64) -> Result<Complex64, BranchError> {
        let bt = self.region.designated(self.bt);
        let mut acc = Complex64::new(0.0, 0.0);
        for g in self.groups.values() {
            acc += g.eval_branch2(bt, z1, z2)?;
        }
        Ok(acc)
    }

    pub fn term_count(&self) -> usize {
        self.groups.values().map(|g| g.terms.len()).sum()
    }
}

/// Coefficients of `(1 + σw)^e` up to `w^order`.
fn binomial_series(e: Complex64, sigma: f64, order: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut c = Complex64::new(1.0, 0.0);
    out.push(c);
    for k in 1..=order {
        c = c * (e - (k - 1) as f64) / k as f64 * sigma;
        out.push(c);
    }
    out
}

/// Coefficients of `Log(1 + σw)` up to `w^order`.
fn log_series(sigma: f64, order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut sk = 1.0;
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        sk *= sigma;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        *slot = Complex64::new(sign * sk / k as f64, 0.0);
    }
    out
}

fn mul_trunc(a: &[Complex64], b: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `[(1+σw)^e · Log(1+σw)^j]` for `j = 0..=jmax`.
fn weighted_log_powers(e: Complex64, sigma: f64, jmax: u32, order: usize) -> Vec<Vec<Complex64>> {
    let base = binomial_series(e, sigma, order);
    let lg = log_series(sigma, order);
    let mut out = Vec::with_capacity(jmax as usize + 1);
    out.push(base);
    for j in 1..=jmax as usize {
        let next = mul_trunc(&out[j - 1], &lg, order);
        out.push(next);
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

fn push(groups: &mut BTreeMap<ExpKey, Vec<LogMonomial>>, key: Complex64, m: LogMonomial) {
    if m.coeff != Complex64::new(0.0, 0.0) {
        groups.entry(ExpKey(key)).or_default().push(m);
    }
}

/// Region series of `f` truncated at `order` in the inner ratio.
pub fn expand_region(f: &LogFunction, region: RegionId, bt: BranchTriple, order: usize) -> RegionExpansion {
    let mut raw: BTreeMap<ExpKey, Vec<LogMonomial>> = BTreeMap::new();
    let zero = Complex64::new(0.0, 0.0);
    let ipi = Complex64::new(0.0, PI);
    for term in &f.terms {
        match region {
            RegionId::Product => {
                // (z1-z2)^t = z1^t (1-w)^t,  log(z1-z2) = log z1 + Log(1-w),  w = z2/z1
                let series = weighted_log_powers(term.t, -1.0, term.n, order);
                for j in 0..=term.n {
                    let c = term.coeff * binom(term.n, j);
                    for (k, &sk) in series[j as usize].iter().enumerate() {
                        let kk = k as f64;
                        let m = LogMonomial::new(
                            c * sk,
                            term.r + term.t - kk,
                            term.s + kk,
                            zero,
                            term.l + term.n - j,
                            term.m,
                            0,
                        );
                        push(&mut raw, term.s + kk, m);
                    }
                }
            }
            RegionId::Reversed => {
                // (z1-z2)^t = e^{-πi t} z2^t (1-v)^t,  log(z1-z2) = log z2 - πi + Log(1-v),  v = z1/z2
                let series = weighted_log_powers(term.t, -1.0, term.n, order);
                let phase = (-ipi * term.t).exp();
                for j in 0..=term.n {
                    let rest = term.n - j;
                    for i in 0..=rest {
                        let c = term.coeff * phase * binom(term.n, j) * binom(rest, i) * (-ipi).powu(rest - i);
                        for (k, &sk) in series[j as usize].iter().enumerate() {
                            let kk = k as f64;
                            let m = LogMonomial::new(
                                c * sk,
                                term.r + kk,
                                term.s + term.t - kk,
                                zero,
                                term.l,
                                term.m + i,
                                0,
                            );
                            push(&mut raw, term.r + kk, m);
                        }
                    }
                }
            }
            RegionId::Iterate => {
                // z1^r = z2^r (1+u)^r,  log z1 = log z2 + Log(1+u),  u = (z1-z2)/z2
                let series = weighted_log_powers(term.r, 1.0, term.l, order);
                for j in 0..=term.l {
                    let c = term.coeff * binom(term.l, j);
                    for (k, &sk) in series[j as usize].iter().enumerate() {
                        let kk = k as f64;
                        let m = LogMonomial::new(
                            c * sk,
                            zero,
                            term.r + term.s - kk,
                            term.t + kk,
                            0,
                            term.m + term.l - j,
                            term.n,
                        );
                        push(&mut raw, term.t + kk, m);
                    }
                }
            }
        }
    }
    let groups = raw
        .into_iter()
        .map(|(k, v)| (k, LogFunction::new(v)))
        .filter(|(_, g)| !g.is_zero())
        .collect();
    RegionExpansion {
        region,
        order,
        bt,
        groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn terminating_binomial_is_exact() {
        let f = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 1.0, 0, 0, 0));
        let e = expand_region(&f, RegionId::Product, BranchTriple::ZERO, 3);
        let (z1, z2) = (c(2.0, 1.0), c(0.3, -0.4));
        assert!((e.evaluate(z1, z2).unwrap() - (z1 - z2)).norm() < 1e-15);
    }

    #[test]
    fn sqrt_product_example() {
        let f = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 0.5, 0, 0, 0));
        let e = expand_region(&f, RegionId::Product, BranchTriple::ZERO, 40);
        let v = e.evaluate(c(2.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((v - c(1.224_744_871_391_589, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn log_iterate_example() {
        let f = LogFunction::monomial(LogMonomial::real(0.0, 0.0, 0.0, 0, 0, 1));
        let e = expand_region(&f, RegionId::Iterate, BranchTriple::ZERO, 40);
        let (z1, z2) = (c(1.05, 0.0), c(1.0, 0.0));
        let want = f.eval_branch2(BranchTriple::ZERO, z1, z2).unwrap();
        assert!((e.evaluate(z1, z2).unwrap() - want).norm() < 1e-10);
    }

    #[test]
    fn groups_are_keyed_by_inner_exponent() {
        let f = LogFunction::monomial(LogMonomial::real(0.0, 0.5, 0.25, 0, 0, 0));
        let e = expand_region(&f, RegionId::Product, BranchTriple::ZERO, 5);
        let keys: Vec<f64> = e.groups.keys().map(|k| k.0.re).collect();
        assert_eq!(keys, vec![0.5, 1.5, 2.5, 3.5, 4.5, 5.5]);
    }

    #[test]
    fn designated_sheets() {
        let bt = BranchTriple::new(1, 2, 3);
        assert_eq!(RegionId::Product.designated(bt), BranchTriple::new(1, 2, 1));
        assert_eq!(RegionId::Reversed.designated(bt), BranchTriple::new(1, 2, 2));
        assert_eq!(RegionId::Iterate.designated(bt), BranchTriple::new(2, 2, 3));
    }
}
