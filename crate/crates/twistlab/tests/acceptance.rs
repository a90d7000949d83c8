//! One line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twistlab::branchcalc::{
    diff_inv_branch, diff_inv_index, diff_inv_residual, inv_branch, inv_diff, iterate_inv_branch, lp, neg_branch,
    principal_arg, q_offset_product,
};
use twistlab::cli::load_scenario;
use twistlab::logfun::{continue_along, expand_region, BranchTriple, Center, LogFunction, LogMonomial, PathSpec, RegionId, Var};
use twistlab::models::{make_random, oracle_continue, Bounds, ORACLE_MIN_STEPS};
use twistlab::report::CheckReport;
use twistlab::transforms::{a_eval_relation, CorrelationFamily, QuasiPrimaryData};
use twistlab::verify::checks::{
    check_involution, check_lemma44, check_thm46_monodromy, check_thm52_omega, check_thm62_contragredient,
    CheckParams,
};
use twistlab::verify::sampling::sample_region;
use twistlab::verify::{run_suite, SuiteConfig};
use twistlab::Sign;

const BRANCH_TOL: f64 = 1e-12;
const EXPANSION_TOL: f64 = 1e-9;
const CONTINUATION_TOL: f64 = 1e-9;
const INVOLUTION_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn polar(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    let r = rng.gen_range(lo..hi);
    Complex64::from_polar(r, rng.gen_range(0.0..TAU))
}

/// Nonzero sample; one in eight lies exactly on a real half-axis.
fn sample_z(rng: &mut ChaCha8Rng) -> Complex64 {
    match rng.gen_range(0..8) {
        0 => Complex64::new(rng.gen_range(0.05..20.0), 0.0),
        1 => Complex64::new(-rng.gen_range(0.05..20.0), 0.0),
        _ => polar(rng, 0.05, 20.0),
    }
}

fn sample_pair(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    loop {
        let (a, b) = (sample_z(rng), sample_z(rng));
        if (a - b).norm() > 1e-3 * a.norm().max(b.norm()) {
            return (a, b);
        }
    }
}

fn max_of(reports: &[CheckReport]) -> f64 {
    reports.iter().map(|r| r.max_defect).fold(0.0, f64::max)
}

fn first_failure(reports: &[CheckReport]) -> String {
    reports
        .iter()
        .find(|r| !r.pass)
        .map(|r| {
            let parts: Vec<String> = r
                .parts
                .iter()
                .filter(|p| !p.pass)
                .map(|p| format!("{}={:.2e}", p.name, p.max_defect))
                .collect();
            format!("; first failure {} [{}]{}", r.name, parts.join(", "), r.error.as_ref().map_or(String::new(), |e| format!(" {e}")))
        })
        .unwrap_or_default()
}

fn criterion_1() -> Outcome {
    let n = 10_000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 5];
    let mut errors = 0usize;
    for _ in 0..n {
        let p = rng.gen_range(-50..=50);
        let z = sample_z(&mut rng);
        let l = lp(p, z).unwrap();
        worst[0] = worst[0].max((l.exp() - z).norm() / z.norm());
        match neg_branch(p, z) {
            Ok(s) => worst[1] = worst[1].max((lp(p, -z).unwrap() - l - Complex64::new(0.0, s as f64 * PI)).norm()),
            Err(_) => errors += 1,
        }
        let q = inv_branch(p, z).unwrap();
        if principal_arg(z).unwrap() == 0.0 && q != -p {
            errors += 1;
        }
        worst[2] = worst[2].max((lp(q, z.inv()).unwrap() + l).norm() / l.norm().max(1.0));

        let (z1, z2) = sample_pair(&mut rng);
        let q = q_offset_product(z1, z2).unwrap();
        let a = |z| principal_arg(z).unwrap();
        let rhs = a(z1 - z2) - a(z1) - a(z2) + (2 * q + 1) as f64 * PI;
        let gap = (rhs - a(inv_diff(z1, z2))).abs();
        if !(-1e-12..TAU + 1e-12).contains(&rhs) {
            errors += 1;
        }
        worst[3] = worst[3].max(gap.min((gap - TAU).abs()));

        let (p1, p2, p12) = (rng.gen_range(-5..=5), rng.gen_range(-5..=5), rng.gen_range(-5..=5));
        for sign in [Sign::Plus, Sign::Minus] {
            let k = diff_inv_index(p1, p2, p12, z1, z2, sign).unwrap();
            worst[4] = worst[4].max(diff_inv_residual(k, p1, p2, p12, z1, z2, sign).unwrap());
            worst[4] = worst[4].max(iterate_inv_branch(p2, p12, z1, z2, sign).unwrap().1);
        }
        worst[4] = worst[4].max(diff_inv_branch(p1, p2, z1, z2).unwrap().1);
    }
    let elapsed = started.elapsed();
    let max = worst.iter().copied().fold(0.0, f64::max);
    let pass = max < BRANCH_TOL && errors == 0 && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "{n} samples each: lp {:.1e}, neg {:.1e}, inv {:.1e}, q-offset {:.1e}, difference {:.1e} (tol {BRANCH_TOL:e}); {errors} rule violations; {:.2}s of 5s",
            worst[0], worst[1], worst[2], worst[3], worst[4],
            elapsed.as_secs_f64()
        ),
    )
}

fn random_function(rng: &mut ChaCha8Rng) -> LogFunction {
    let n = rng.gen_range(1..=4);
    let e = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-2.0..=2.0), rng.gen_range(-0.25..0.25));
    let terms = (0..n)
        .map(|_| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (r, s, t) = (e(rng), e(rng), e(rng));
            LogMonomial::new(c, r, s, t, rng.gen_range(0..=2), rng.gen_range(0..=2), rng.gen_range(0..=2))
        })
        .collect();
    LogFunction::new(terms)
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 3];
    let per_region = 10;
    for _ in 0..100 {
        let f = random_function(&mut rng);
        let bt = BranchTriple::new(rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        for (i, region) in RegionId::ALL.into_iter().enumerate() {
            let series = expand_region(&f, region, bt, 60);
            for _ in 0..per_region {
                let (z1, z2) = sample_region(&mut rng, region).expect("window sample");
                let a = series.evaluate(z1, z2).unwrap();
                let b = f.eval_branch2(region.designated(bt), z1, z2).unwrap();
                worst[i] = worst[i].max(twistlab::scaled_defect(a, b));
            }
        }
    }
    let elapsed = started.elapsed();
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max < EXPANSION_TOL && elapsed < Duration::from_secs(60),
        format!(
            "100 functions x {per_region} points per region at order 60: product {:.1e}, reversed {:.1e}, iterate {:.1e} (tol {EXPANSION_TOL:e}); {:.2}s of 60s",
            worst[0], worst[1], worst[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn families(seeds: std::ops::Range<u64>) -> Vec<(u64, CorrelationFamily, QuasiPrimaryData)> {
    seeds
        .map(|s| {
            let (f, a) = make_random(s, Bounds::default()).unwrap();
            (s, f, a.qp)
        })
        .collect()
}

fn nontrivial_g1(fam: &CorrelationFamily) -> bool {
    let id = twistlab::transforms::CMatrix::identity(fam.dim(), fam.dim());
    (&fam.action.g1 - id).norm() > 1e-6
}

fn criterion_3() -> Outcome {
    let fams = families(300..350);
    let mut reports = Vec::new();
    let mut control_min = f64::INFINITY;
    let mut controls = 0;
    for (seed, fam, _) in &fams {
        let p = CheckParams::new(8, 60, CONTINUATION_TOL, *seed);
        let bt = BranchTriple::new((*seed % 3) as i64 - 1, (*seed % 5) as i64 - 2, 0);
        reports.push(check_lemma44(fam, bt, &p, true));
        if nontrivial_g1(fam) {
            controls += 1;
            control_min = control_min.min(check_lemma44(fam, bt, &p, false).max_defect);
        }
    }
    let pass_all = reports.iter().all(|r| r.pass);
    let pass = pass_all && controls > 0 && control_min > 10.0 * CONTINUATION_TOL;
    outcome(
        pass,
        format!(
            "50 scenarios: max defect {:.1e} (tol {CONTINUATION_TOL:e}); no-shift control on {controls} twisted scenarios, smallest defect {:.2e} (needs > {:e}){}",
            max_of(&reports),
            control_min,
            10.0 * CONTINUATION_TOL,
            first_failure(&reports)
        ),
    )
}

fn criterion_4() -> Outcome {
    let fams = families(400..420);
    let mut reports = Vec::new();
    let mut exact_labels = 0;
    let mut control_min = f64::INFINITY;
    for (seed, fam, _) in &fams {
        let p = CheckParams::new(4, 60, CONTINUATION_TOL, *seed);
        let r = check_thm46_monodromy(fam, BranchTriple::ZERO, &p);
        exact_labels += r.parts.iter().find(|q| q.name == "exactPhases").map_or(0, |q| q.samples);
        reports.push(r);
        let mut bad = fam.clone();
        bad.action.g3 = &bad.action.g3 * Complex64::from_polar(1.0, TAU / 7.0);
        control_min = control_min.min(check_thm46_monodromy(&bad, BranchTriple::ZERO, &p).max_defect);
    }
    let homotopy = reports
        .iter()
        .flat_map(|r| r.parts.iter().filter(|p| p.name == "homotopy"))
        .map(|p| p.max_defect)
        .fold(0.0, f64::max);
    let pass = reports.iter().all(|r| r.pass) && exact_labels > 0 && control_min > 10.0 * CONTINUATION_TOL;
    outcome(
        pass,
        format!(
            "20 scenarios: homotopy {homotopy:.1e}, overall {:.1e} (tol {CONTINUATION_TOL:e}); exact phases on {exact_labels} labels; injected g3 control smallest defect {control_min:.2e}{}",
            max_of(&reports),
            first_failure(&reports)
        ),
    )
}

fn criterion_5() -> Outcome {
    let fams = families(500..520);
    let mut reports = Vec::new();
    let mut involution = Vec::new();
    for (seed, fam, qp) in &fams {
        let p = CheckParams::new(6, 60, EXPANSION_TOL, *seed);
        for sign in [Sign::Plus, Sign::Minus] {
            reports.push(check_thm52_omega(fam, sign, BranchTriple::new(1, -1, 0), &p));
        }
        let mut r = check_involution(fam, *qp, &CheckParams::new(0, 0, INVOLUTION_TOL, *seed));
        // Only the Ω parts belong to this criterion.
        r.parts.retain(|p| p.name.starts_with("omega"));
        r.max_defect = r.parts.iter().map(|p| p.max_defect).fold(0.0, f64::max);
        r.pass = r.max_defect < INVOLUTION_TOL;
        involution.push(r);
    }
    let pass = reports.iter().all(|r| r.pass) && involution.iter().all(|r| r.pass);
    outcome(
        pass,
        format!(
            "20 scenarios x 2 signs: duality/shift/link max {:.1e} (tol {EXPANSION_TOL:e}); involution {:.1e} (tol {INVOLUTION_TOL:e}){}{}",
            max_of(&reports),
            max_of(&involution),
            first_failure(&reports),
            first_failure(&involution)
        ),
    )
}

fn criterion_6() -> Outcome {
    let fams = families(600..620);
    let mut reports = Vec::new();
    let mut involution = Vec::new();
    let mut relation = Vec::new();
    for (seed, fam, qp) in &fams {
        let p = CheckParams::new(6, 120, EXPANSION_TOL, *seed);
        for sign in [Sign::Plus, Sign::Minus] {
            reports.push(check_thm62_contragredient(fam, *qp, sign, BranchTriple::ZERO, &p));
            for (z, pp) in [(Complex64::new(1.7, 0.0), 2), (Complex64::new(2.5, 0.0), -1), (Complex64::new(-0.4, 1.3), 1), (Complex64::new(0.9, -0.2), 0)] {
                relation.push(a_eval_relation(fam, *qp, pp, z, sign, BRANCH_TOL).unwrap());
            }
        }
        involution.push(check_involution(fam, *qp, &CheckParams::new(0, 0, INVOLUTION_TOL, *seed)));
    }
    let pass = [&reports, &relation, &involution].iter().all(|v| v.iter().all(|r| r.pass));
    outcome(
        pass,
        format!(
            "20 scenarios x 2 signs: duality/shift/link max {:.1e} (tol {EXPANSION_TOL:e}); one-variable relation on and off the positive axis {:.1e} (tol {BRANCH_TOL:e}); involution {:.1e} (tol {INVOLUTION_TOL:e}){}{}",
            max_of(&reports),
            max_of(&relation),
            max_of(&involution),
            first_failure(&reports),
            first_failure(&involution)
        ),
    )
}

fn random_loop(rng: &mut ChaCha8Rng) -> PathSpec {
    loop {
        let z1 = polar(rng, 0.4, 1.8);
        let z2 = polar(rng, 0.4, 1.8);
        let mut path = PathSpec::new(z1, z2);
        for _ in 0..rng.gen_range(1..=4) {
            let var = if rng.gen_bool(0.7) { Var::Z1 } else { Var::Z2 };
            path = match rng.gen_range(0..3) {
                0 => path.arc(var, Center::Origin, [-2.0, -1.0, 1.0, 2.0][rng.gen_range(0..4)]),
                1 => path.arc(var, Center::Other, [-1.0, 1.0][rng.gen_range(0..2)]),
                _ => {
                    let here = path.end().get(var);
                    let there = polar(rng, 0.3, 2.2);
                    path.segment(var, there).segment(var, here)
                }
            };
        }
        if path.validate(0.08).is_ok() {
            return path;
        }
    }
}

fn oracle_shares_no_branch_code() -> bool {
    let src = include_str!("../src/models.rs");
    let start = src.find("pub const ORACLE_MIN_STEPS").unwrap_or(0);
    let end = src[start..].find("#[cfg(test)]").map_or(src.len(), |e| start + e);
    let oracle = &src[start..end];
    ["branchcalc", "lp(", "eval_branch", "inv_branch", "neg_branch", "continue_along", ".shifted("]
        .iter()
        .all(|needle| !oracle.contains(needle))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..200 {
        let f = random_function(&mut rng);
        let bt = BranchTriple::new(rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        let path = random_loop(&mut rng);
        match (continue_along(&f, bt, &path), oracle_continue(&f, bt, &path, ORACLE_MIN_STEPS)) {
            (Ok(c), Ok(o)) => worst = worst.max(twistlab::scaled_defect(c.value, o.value)),
            _ => failures += 1,
        }
    }
    let independent = oracle_shares_no_branch_code();
    outcome(
        worst < CONTINUATION_TOL && failures == 0 && independent,
        format!("200 random loops: max defect {worst:.1e} (tol {CONTINUATION_TOL:e}); {failures} runs errored; oracle source free of branch-index calls: {independent}"),
    )
}

fn criterion_8() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    files.sort();
    let scenarios: Vec<_> = files.iter().map(|p| load_scenario(p).unwrap()).collect();
    let started = Instant::now();
    let reports = run_suite(&scenarios, &SuiteConfig::default());
    let elapsed = started.elapsed();
    let unexpected: Vec<&str> = reports.iter().filter(|r| !r.as_expected()).map(|r| r.name.as_str()).collect();
    let controls = reports.iter().filter(|r| r.expect_fail && !r.pass).count();
    outcome(
        unexpected.is_empty() && controls >= 3 && elapsed < Duration::from_secs(300),
        format!(
            "{} scenarios, {} reports in {:.2}s of 300s; {} unexpected {:?}; {controls} negative controls failed as intended (needs >= 3)",
            scenarios.len(),
            reports.len(),
            elapsed.as_secs_f64(),
            unexpected.len(),
            unexpected
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("branch calculus identities", criterion_1),
        ("region expansion convergence", criterion_2),
        ("difference cut crossing", criterion_3),
        ("loop monodromy composition", criterion_4),
        ("skew-symmetry transform", criterion_5),
        ("contragredient transform", criterion_6),
        ("oracle independence", criterion_7),
        ("shipped suite", criterion_8),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.pass;
        println!("criterion {} ({name}): {} | {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
