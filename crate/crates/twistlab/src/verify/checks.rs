use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::{sample_crossing_arc, sample_generic, sample_region};
use crate::branchcalc::{diff_inv_index, inv_branch, principal_arg, BranchError};
use crate::logfun::{
    continue_along, expand_region, loops, winding_profile, BranchTriple, Center, LogFunction, PathSpec, RegionId,
    Tracked, Var,
};
use crate::models::{frac, label_phases, oracle_continue, ORACLE_MIN_STEPS};
use crate::report::{CheckReport, Defects, WorstPoint};
use crate::transforms::{
    a_eval_relation, a_family, check_g1_shift, check_g2_shift, checked_inverse, contragredient, omega_family,
    omega_transform, quasi_primary_modify, screen_admissible, CMatrix, CorrelationFamily, QuasiPrimaryData,
    SCREEN_POINTS,
};
use crate::{scaled_defect, Sign};

/// Sampling and tolerance settings shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckParams {
    /// Points per region or per sub-check.
    pub samples: usize,
    /// Truncation order of region expansions.
    pub order: usize,
    pub tol: f64,
    pub seed: u64,
}

impl CheckParams {
    pub fn new(samples: usize, order: usize, tol: f64, seed: u64) -> Self {
        Self {
            samples,
            order,
            tol,
            seed,
        }
    }
}

/// Radii of the monodromy loops: base point `z1 = -a1`, `z2 = -a2`, inner
/// loop radius `a3`.
pub const GAMMA_RADII: (f64, f64, f64) = (1.8, 1.0, 0.5);
/// Orientation of the monodromy loops. Clockwise, which is the direction
/// that lowers the sheet index at each cut crossing.
pub const GAMMA_TURNS: f64 = -1.0;

fn point(z1: Complex64, z2: Complex64, bt: BranchTriple, label: usize) -> WorstPoint {
    WorstPoint {
        z1,
        z2,
        bt,
        label: Some(label),
    }
}

fn defect_of(a: Result<Complex64, BranchError>, b: Result<Complex64, BranchError>) -> f64 {
    match (a, b) {
        (Ok(a), Ok(b)) => scaled_defect(a, b),
        _ => f64::INFINITY,
    }
}

fn add(bt: BranchTriple, off: BranchTriple) -> BranchTriple {
    bt.shifted(off.p1, off.p2, off.p12)
}

fn duality_into(
    d: &mut Defects,
    fam: &CorrelationFamily,
    bt: BranchTriple,
    p: &CheckParams,
    rng: &mut ChaCha8Rng,
    eval_offset: BranchTriple,
) -> Result<(), String> {
    for region in RegionId::ALL {
        d.part(region.name());
        let series: Vec<_> = fam.f.iter().map(|f| expand_region(f, region, bt, p.order)).collect();
        let target = add(region.designated(bt), eval_offset);
        for _ in 0..p.samples {
            let (z1, z2) = sample_region(rng, region)
                .ok_or_else(|| format!("no sample found in the {} window", region.name()))?;
            for (u, f) in fam.f.iter().enumerate() {
                let defect = defect_of(series[u].evaluate(z1, z2), f.eval_branch2(target, z1, z2));
                d.record(defect, || point(z1, z2, target, u));
            }
        }
    }
    Ok(())
}

/// Region series against the designated branch in all three windows:
/// product ↦ `(p1,p2,p1)`, reversed ↦ `(p1,p2,p2)`, iterate ↦ `(p2,p2,p12)`.
/// `eval_offset` moves the comparison sheet, which turns the check into a
/// negative control.
pub fn check_duality_regions(
    fam: &CorrelationFamily,
    bt: BranchTriple,
    p: &CheckParams,
    eval_offset: BranchTriple,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut d = Defects::new("duality", p.tol, p.seed);
    match duality_into(&mut d, fam, bt, p, &mut rng, eval_offset) {
        Ok(()) => d.finish(),
        Err(e) => CheckReport::errored("duality", p.seed, p.tol, e),
    }
}

/// Continues `f^{p1,p2,p2}` from the reversed window across `arg(z1-z2) = 0`
/// into the opposite window and compares with the `(p1, p2, p2-1)` branch
/// there. With `expect_shift = false` the comparison uses `(p1, p2, p2)`,
/// the negative control.
pub fn check_lemma44(fam: &CorrelationFamily, bt: BranchTriple, p: &CheckParams, expect_shift: bool) -> CheckReport {
    let name = "lemma44";
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut d = Defects::new(name, p.tol, p.seed);
    let start = BranchTriple::new(bt.p1, bt.p2, bt.p2);
    let target = if expect_shift {
        BranchTriple::new(bt.p1, bt.p2, bt.p2 - 1)
    } else {
        start
    };
    let mut arcs = Vec::with_capacity(p.samples);
    let mut tries = 0;
    while arcs.len() < p.samples {
        tries += 1;
        if tries > 100 * p.samples.max(1) {
            return CheckReport::errored(name, p.seed, p.tol, "could not build crossing paths");
        }
        let Some(arc) = sample_crossing_arc(&mut rng) else {
            return CheckReport::errored(name, p.seed, p.tol, "no crossing arc found");
        };
        let path = PathSpec::new(arc.z1_start, arc.z2).arc(Var::Z1, Center::Other, arc.turns());
        match winding_profile(&path) {
            Ok(w) if w.cut_crossings.iter().all(|c| c.quantity == Tracked::Diff) && w.w12 == -1 => {
                arcs.push((arc, path))
            }
            _ => continue,
        }
    }
    d.part("oracle");
    for (arc, path) in &arcs {
        for (u, f) in fam.f.iter().enumerate() {
            let o = oracle_continue(f, start, path, ORACLE_MIN_STEPS);
            let defect = match o {
                Ok(o) => defect_of(Ok(o.value), f.eval_branch2(target, arc.z1_end, arc.z2)),
                Err(_) => f64::INFINITY,
            };
            d.record(defect, || point(arc.z1_end, arc.z2, target, u));
        }
    }
    if expect_shift {
        d.part("tracking");
        for (arc, path) in &arcs {
            for (u, f) in fam.f.iter().enumerate() {
                let defect = match continue_along(f, start, path) {
                    Ok(c) if c.end == target => defect_of(Ok(c.value), f.eval_branch2(target, arc.z1_end, arc.z2)),
                    _ => 1.0,
                };
                d.record(defect, || point(arc.z1_end, arc.z2, target, u));
            }
        }
    }
    d.finish()
}

/// Product of automorphisms read off the cut crossings of a path, in path
/// order: a lowered `p1` contributes `g2`, a lowered `p12` contributes `g1`,
/// raised indices the inverses.
fn crossing_product(fam: &CorrelationFamily, path: &PathSpec) -> Result<CMatrix, String> {
    let w = winding_profile(path).map_err(|e| e.to_string())?;
    let a = &fam.action;
    let g1i = checked_inverse(&a.g1, "g1").map_err(|e| e.to_string())?;
    let g2i = checked_inverse(&a.g2, "g2").map_err(|e| e.to_string())?;
    let mut g = CMatrix::identity(fam.dim(), fam.dim());
    for c in &w.cut_crossings {
        let m = match (c.quantity, c.direction) {
            (Tracked::Z1, -1) => &a.g2,
            (Tracked::Z1, _) => &g2i,
            (Tracked::Diff, -1) => &a.g1,
            (Tracked::Diff, _) => &g1i,
            (Tracked::Z2, _) => return Err("z2 moves on a monodromy loop".into()),
        };
        g = &g * m;
    }
    Ok(g)
}

/// Rational in `[0, 1)` with denominator at most 720 within `1e-9` of `x`
/// modulo 1.
fn rationalize_turn(x: f64) -> Option<Rational64> {
    let x = x.rem_euclid(1.0);
    for den in 1..=720i64 {
        let num = (x * den as f64).round() as i64;
        if (x - num as f64 / den as f64).abs() < 1e-9 {
            return Some(frac(Rational64::new(num, den)));
        }
    }
    None
}

/// Measured phase, in turns, of the oracle continuation of `f` around `path`.
fn loop_phase(f: &LogFunction, bt: BranchTriple, path: &PathSpec) -> Option<f64> {
    let v0 = f.eval_branch2(bt, path.start.z1, path.start.z2).ok()?;
    if v0.norm() < 1e-8 {
        return None;
    }
    let v1 = oracle_continue(f, bt, path, ORACLE_MIN_STEPS).ok()?.value;
    Some((v1 / v0).arg() / TAU)
}

/// Monodromy composition on the loops `Γ1` (z1 once around 0 and z2) and
/// `Γ2` (around 0 only, then around z2 only).
///
/// Parts:
/// - `homotopy`: oracle values along `Γ1` and `Γ2` agree and the tracked end
///   sheets coincide; does not use the automorphisms.
/// - `gamma1Monodromy`: continuation along `Γ1` equals `f(g3 u)` on the start sheet.
/// - `gamma2Bookkeeping`: continuation along `Γ2` equals `f(G u)`, with `G` the
///   product of the branch-shift substitutions at each crossing.
/// - `composition`: `f(g3 u) = f(G u)` at generic points.
/// - `exactPhases`: for log-free labels with rational exponents, the
///   measured loop phases are the expected rationals and compose exactly.
pub fn check_thm46_monodromy(fam: &CorrelationFamily, bt: BranchTriple, p: &CheckParams) -> CheckReport {
    let name = "thm46";
    if let Err(r) = screen_admissible(fam, crate::tol::SHIFT) {
        return CheckReport::errored(
            name,
            p.seed,
            p.tol,
            format!("inadmissible family: {} defect {:e}", r.name, r.max_defect),
        );
    }
    let (a1, a2, a3) = GAMMA_RADII;
    let g1 = loops::gamma1(a1, a2, GAMMA_TURNS);
    let g2 = loops::gamma2(a1, a2, a3, GAMMA_TURNS);
    let base = g1.start;
    let mut d = Defects::new(name, p.tol, p.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut o1 = Vec::with_capacity(fam.dim());
    let mut o2 = Vec::with_capacity(fam.dim());
    d.part("homotopy");
    for (u, f) in fam.f.iter().enumerate() {
        let v1 = oracle_continue(f, bt, &g1, ORACLE_MIN_STEPS).map(|o| o.value);
        let v2 = oracle_continue(f, bt, &g2, ORACLE_MIN_STEPS).map(|o| o.value);
        let defect = match (&v1, &v2) {
            (Ok(a), Ok(b)) => scaled_defect(*b, *a),
            _ => f64::INFINITY,
        };
        d.record(defect, || point(base.z1, base.z2, bt, u));
        let ends = (continue_along(f, bt, &g1), continue_along(f, bt, &g2));
        let defect = match ends {
            (Ok(c1), Ok(c2)) if c1.end == c2.end && c1.end == bt.shifted(-1, 0, -1) => 0.0,
            _ => 1.0,
        };
        d.record(defect, || point(base.z1, base.z2, bt, u));
        o1.push(v1.ok());
        o2.push(v2.ok());
    }

    d.part("gamma1Monodromy");
    for u in 0..fam.dim() {
        let rhs = fam.apply_column(&fam.action.g3, u).eval_branch2(bt, base.z1, base.z2);
        let defect = match o1[u] {
            Some(v) => defect_of(Ok(v), rhs),
            None => f64::INFINITY,
        };
        d.record(defect, || point(base.z1, base.z2, bt, u));
    }

    let big_g = match crossing_product(fam, &g2) {
        Ok(g) => g,
        Err(e) => return CheckReport::errored(name, p.seed, p.tol, e),
    };
    d.part("gamma2Bookkeeping");
    for u in 0..fam.dim() {
        let rhs = fam.apply_column(&big_g, u).eval_branch2(bt, base.z1, base.z2);
        let defect = match o2[u] {
            Some(v) => defect_of(Ok(v), rhs),
            None => f64::INFINITY,
        };
        d.record(defect, || point(base.z1, base.z2, bt, u));
    }

    d.part("composition");
    for _ in 0..p.samples.max(1) {
        let (z1, z2) = sample_generic(&mut rng);
        for u in 0..fam.dim() {
            let a = fam.apply_column(&fam.action.g3, u).eval_branch2(bt, z1, z2);
            let b = fam.apply_column(&big_g, u).eval_branch2(bt, z1, z2);
            d.record(defect_of(a, b), || point(z1, z2, bt, u));
        }
    }

    d.part("exactPhases");
    let around_z2 = PathSpec::new(base.z1, base.z2).arc(Var::Z1, Center::Other, GAMMA_TURNS);
    let around_0 = PathSpec::new(Complex64::new(-a3, 0.0), base.z2).arc(Var::Z1, Center::Origin, GAMMA_TURNS);
    for (u, f) in fam.f.iter().enumerate() {
        let Some((r, t)) = label_phases(f) else { continue };
        let expected = [frac(-t), frac(-r), frac(-(r + t))];
        let measured = [
            loop_phase(f, bt, &around_z2).and_then(rationalize_turn),
            loop_phase(f, bt, &around_0).and_then(rationalize_turn),
            loop_phase(f, bt, &g1).and_then(rationalize_turn),
        ];
        let mut defect = match measured {
            [Some(m1), Some(m2), Some(m3)] if [m1, m2, m3] == expected && frac(m1 + m2) == m3 => 0.0,
            [None, _, _] | [_, None, _] | [_, _, None] if f.eval_branch2(bt, base.z1, base.z2).map_or(true, |v| v.norm() < 1e-8) => continue,
            _ => 1.0,
        };
        // Where an automorphism acts diagonally on this label its entry must be the exact phase.
        for (k, g) in [&fam.action.g1, &fam.action.g2, &fam.action.g3].into_iter().enumerate() {
            let off: f64 = (0..fam.dim()).filter(|&j| j != u).map(|j| g[(j, u)].norm()).sum();
            if off < 1e-13 {
                let th = expected[k];
                let want = Complex64::from_polar(1.0, TAU * (*th.numer() as f64) / (*th.denom() as f64));
                defect = f64::max(defect, (g[(u, u)] - want).norm());
            }
        }
        d.record(defect, || point(base.z1, base.z2, bt, u));
    }
    d.finish()
}

fn shifts_into(d: &mut Defects, fam: &CorrelationFamily, bt: BranchTriple, rng: &mut ChaCha8Rng, samples: usize) {
    let mut pts: Vec<(Complex64, Complex64)> = SCREEN_POINTS.to_vec();
    pts.extend((0..samples).map(|_| sample_generic(rng)));
    d.part("g1Shift");
    d.absorb(&check_g1_shift(fam, bt, &pts, d.tol()));
    d.part("g2Shift");
    d.absorb(&check_g2_shift(fam, bt, &pts, d.tol()));
}

/// Both branch-shift identities of the family itself.
pub fn check_shifts(fam: &CorrelationFamily, bt: BranchTriple, p: &CheckParams) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut d = Defects::new("shifts", p.tol, p.seed);
    shifts_into(&mut d, fam, bt, &mut rng, p.samples);
    d.finish()
}

/// Skew-symmetry: the `Ω±` family satisfies the three-region duality and
/// the branch-shift identities with the swapped automorphisms, and agrees
/// pointwise with `f^{p12,p2,p1}(z1-z2, -z2)` where `l_{p2}(-z2) = l_{p2}(z2) ± πi`.
pub fn check_thm52_omega(fam: &CorrelationFamily, sign: Sign, bt: BranchTriple, p: &CheckParams) -> CheckReport {
    let name = match sign {
        Sign::Plus => "thm52.plus",
        Sign::Minus => "thm52.minus",
    };
    let g = match omega_family(fam, sign) {
        Ok(g) => g,
        Err(e) => return CheckReport::errored(name, p.seed, p.tol, e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut d = Defects::new(name, p.tol, p.seed);
    if let Err(e) = duality_into(&mut d, &g, bt, p, &mut rng, BranchTriple::ZERO) {
        return CheckReport::errored(name, p.seed, p.tol, e);
    }
    shifts_into(&mut d, &g, bt, &mut rng, p.samples);
    d.part("pointwise");
    let swapped = BranchTriple::new(bt.p12, bt.p2, bt.p1);
    let mut taken = 0;
    while taken < p.samples.max(1) {
        let (z1, z2) = sample_generic(&mut rng);
        let upper = principal_arg(z2).map_or(false, |a| a < PI);
        if upper != (sign == Sign::Plus) {
            continue;
        }
        taken += 1;
        for u in 0..fam.dim() {
            let lhs = g.f[u].eval_branch2(bt, z1, z2);
            let rhs = fam.f[u].eval_branch2(swapped, z1 - z2, -z2);
            d.record(defect_of(lhs, rhs), || point(z1, z2, bt, u));
        }
    }
    d.finish()
}

/// Contragredient: the `A±` family satisfies the three-region duality and
/// the branch-shift identities for its type, agrees pointwise with the
/// modified function at `(1/z1, 1/z2)` on the sheets given by the inversion
/// calculus, and its single-variable specialization satisfies the inversion
/// relation on and off the positive real axis.
pub fn check_thm62_contragredient(
    fam: &CorrelationFamily,
    qp: QuasiPrimaryData,
    sign: Sign,
    bt: BranchTriple,
    p: &CheckParams,
) -> CheckReport {
    let name = match sign {
        Sign::Plus => "thm62.plus",
        Sign::Minus => "thm62.minus",
    };
    let h = match a_family(fam, qp, sign) {
        Ok(h) => h,
        Err(e) => return CheckReport::errored(name, p.seed, p.tol, e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut d = Defects::new(name, p.tol, p.seed);
    if let Err(e) = duality_into(&mut d, &h, bt, p, &mut rng, BranchTriple::ZERO) {
        return CheckReport::errored(name, p.seed, p.tol, e);
    }
    shifts_into(&mut d, &h, bt, &mut rng, p.samples);

    d.part("pointwise");
    let fmod: Vec<LogFunction> = fam.f.iter().map(|f| quasi_primary_modify(f, qp, sign)).collect();
    for _ in 0..p.samples.max(1) {
        let (z1, z2) = sample_generic(&mut rng);
        let sheets = (|| {
            let p1 = inv_branch(bt.p1, z1)?;
            let p2 = inv_branch(bt.p2, z2)?;
            let k = diff_inv_index(bt.p1, bt.p2, bt.p12, z1, z2, sign)?;
            Ok::<_, BranchError>(BranchTriple::new(p1, p2, k))
        })();
        for u in 0..fam.dim() {
            let defect = match sheets {
                Ok(inv) => defect_of(h.f[u].eval_branch2(bt, z1, z2), fmod[u].eval_branch2(inv, z1.inv(), z2.inv())),
                Err(_) => f64::INFINITY,
            };
            d.record(defect, || point(z1, z2, bt, u));
        }
    }

    d.part("aEvalRelation");
    let on_axis = Complex64::new(1.7, 0.0);
    let off_axis = [Complex64::new(-0.8, 0.0), Complex64::new(0.6, -1.1), Complex64::new(-0.3, 0.9)];
    for z in std::iter::once(on_axis).chain(off_axis) {
        for pp in [bt.p2, bt.p2 + 1, -bt.p2 - 1] {
            match a_eval_relation(fam, qp, pp, z, sign, p.tol) {
                Ok(r) => d.absorb(&r),
                Err(_) => d.record(f64::INFINITY, || point(Complex64::new(0.0, 0.0), z, bt, 0)),
            }
        }
    }
    d.finish()
}

/// `Ω∓∘Ω± = id` and `A∓∘A± = e^{2πi wt_u}` coefficient-wise, plus the
/// automorphism round trip of the `Ω` family.
pub fn check_involution(fam: &CorrelationFamily, qp: QuasiPrimaryData, p: &CheckParams) -> CheckReport {
    let mut d = Defects::new("involution", p.tol, p.seed);
    let key_tol = 1e-12;
    let here = |u: usize| WorstPoint {
        z1: Complex64::new(0.0, 0.0),
        z2: Complex64::new(0.0, 0.0),
        bt: BranchTriple::ZERO,
        label: Some(u),
    };
    d.part("omega");
    for (u, f) in fam.f.iter().enumerate() {
        for s in [Sign::Plus, Sign::Minus] {
            let back = omega_transform(&omega_transform(f, s), s.flip());
            d.record(back.coefficient_distance(f, key_tol), || here(u));
        }
    }
    d.part("omegaAutomorphisms");
    for s in [Sign::Plus, Sign::Minus] {
        let back = omega_family(fam, s).and_then(|g| omega_family(&g, s.flip()));
        let defect = match back {
            Ok(b) => [
                (&b.action.g1 - &fam.action.g1).norm(),
                (&b.action.g2 - &fam.action.g2).norm(),
                (&b.action.g3 - &fam.action.g3).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        d.record(defect, || here(0));
    }
    d.part("contragredient");
    let w = (Complex64::new(0.0, 2.0 * PI) * qp.wt_u).exp();
    for (u, f) in fam.f.iter().enumerate() {
        for s in [Sign::Plus, Sign::Minus] {
            let back = contragredient(&contragredient(f, qp, s), qp, s.flip());
            d.record(back.coefficient_distance(&f.scale(w), key_tol), || here(u));
        }
    }
    d.finish()
}

/// `continue_along` against the oracle on one path for every label: the
/// tracked end sheet evaluated by the branch formula must reproduce the
/// phase-unwrapped value.
pub fn check_continuation(fam: &CorrelationFamily, bt: BranchTriple, path: &PathSpec, p: &CheckParams) -> CheckReport {
    let mut d = Defects::new("continuation", p.tol, p.seed);
    let end = path.end();
    for (u, f) in fam.f.iter().enumerate() {
        let tracked = continue_along(f, bt, path);
        let oracle = oracle_continue(f, bt, path, ORACLE_MIN_STEPS);
        let defect = match (tracked, oracle) {
            (Ok(c), Ok(o)) => scaled_defect(c.value, o.value),
            _ => f64::INFINITY,
        };
        d.record(defect, || point(end.z1, end.z2, bt, u));
    }
    d.finish()
}
