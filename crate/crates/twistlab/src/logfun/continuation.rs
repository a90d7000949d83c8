use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::function::{BranchTriple, LogFunction, Var};
use super::path::{Config, Move, PathError, PathSpec, CLEARANCE};
use crate::branchcalc::{principal_arg, BranchError};
use crate::scaled_defect;

/// Bisection depth limit for a single sample interval.
const MAX_DEPTH: u32 = 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error("move {move_index}: step could not be refined below a quarter turn of phase")]
    Unresolved { move_index: usize },
    #[error("move {move_index}: Taylor certificate {certificate:e} exceeds tolerance {tol:e}")]
    Certificate {
        move_index: usize,
        certificate: f64,
        tol: f64,
    },
}

/// One of the three tracked logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tracked {
    Z1,
    Z2,
    Diff,
}

/// Passage of a tracked quantity through the positive real axis;
/// `direction = +1` for counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CutCrossing {
    pub quantity: Tracked,
    pub move_index: usize,
    pub direction: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Per-step Taylor certificate threshold.
    pub tol: f64,
    /// Number of derivatives used by the certificate.
    pub taylor_order: usize,
    /// Multiplier on the default sampling density.
    pub density_scale: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            tol: crate::tol::CONTINUATION,
            taylor_order: 8,
            density_scale: 1,
        }
    }
}

/// Result of following a branch along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub end: BranchTriple,
    pub end_point: Config,
    pub value: Complex64,
    /// Largest disagreement between a Taylor step from the previous sample
    /// and the branch formula at the next one.
    pub certificate: f64,
    pub crossings: Vec<CutCrossing>,
    /// Accepted sample intervals.
    pub intervals: usize,
}

/// Net counterclockwise cut crossings of `z1`, `z2` and `z1 - z2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WindingProfile {
    pub w1: i64,
    pub w2: i64,
    pub w12: i64,
    pub cut_crossings: Vec<CutCrossing>,
}

fn args(c: Config) -> Result<[f64; 3], BranchError> {
    Ok([principal_arg(c.z1)?, principal_arg(c.z2)?, principal_arg(c.diff())?])
}

struct Tracker<'a> {
    towers: Option<[Vec<LogFunction>; 2]>,
    f: Option<&'a LogFunction>,
    tol: f64,
    bt: BranchTriple,
    crossings: Vec<CutCrossing>,
    certificate: f64,
    intervals: usize,
}

fn factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut f = 1.0;
    out.push(f);
    for k in 1..=n {
        f *= k as f64;
        out.push(f);
    }
    out
}

impl<'a> Tracker<'a> {
    fn taylor_defect(&self, var: Var, from: Config, to: Config, next_bt: BranchTriple) -> Result<f64, BranchError> {
        let (Some(towers), Some(f)) = (&self.towers, self.f) else {
            return Ok(0.0);
        };
        let tower = &towers[match var {
            Var::Z1 => 0,
            Var::Z2 => 1,
        }];
        let h = to.get(var) - from.get(var);
        let fact = factorials(tower.len());
        let mut pred = Complex64::new(0.0, 0.0);
        let mut hp = Complex64::new(1.0, 0.0);
        for (j, d) in tower.iter().enumerate() {
            pred += d.eval_branch2(self.bt, from.z1, from.z2)? * hp / fact[j];
            hp *= h;
        }
        let actual = f.eval_branch2(next_bt, to.z1, to.z2)?;
        Ok(scaled_defect(pred, actual))
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        index: usize,
        m: &Move,
        s0: Config,
        ta: f64,
        ca: Config,
        aa: [f64; 3],
        tb: f64,
        depth: u32,
    ) -> Result<(Config, [f64; 3]), ContinuationError> {
        let cb = m.position(s0, tb);
        let ab = args(cb)?;
        let mut dirs = [0i64; 3];
        let mut coarse = false;
        for k in 0..3 {
            let d = ab[k] - aa[k];
            let (wrapped, dir) = if d > PI {
                (d - TAU, -1)
            } else if d < -PI {
                (d + TAU, 1)
            } else {
                (d, 0)
            };
            dirs[k] = dir;
            coarse |= wrapped.abs() >= FRAC_PI_4;
        }
        let next_bt = self.bt.shifted(dirs[0], dirs[1], dirs[2]);
        let defect = if coarse {
            f64::INFINITY
        } else {
            self.taylor_defect(m.var(), ca, cb, next_bt)?
        };
        if coarse || defect > self.tol {
            if depth >= MAX_DEPTH {
                return Err(if coarse {
                    ContinuationError::Unresolved { move_index: index }
                } else {
                    ContinuationError::Certificate {
                        move_index: index,
                        certificate: defect,
                        tol: self.tol,
                    }
                });
            }
            let mid = 0.5 * (ta + tb);
            let (cm, am) = self.advance(index, m, s0, ta, ca, aa, mid, depth + 1)?;
            return self.advance(index, m, s0, mid, cm, am, tb, depth + 1);
        }
        let quantities = [Tracked::Z1, Tracked::Z2, Tracked::Diff];
        for k in 0..3 {
            if dirs[k] != 0 {
                self.crossings.push(CutCrossing {
                    quantity: quantities[k],
                    move_index: index,
                    direction: dirs[k],
                });
            }
        }
        self.bt = next_bt;
        self.certificate = self.certificate.max(defect);
        self.intervals += 1;
        Ok((cb, ab))
    }

    fn run(&mut self, path: &PathSpec, density_scale: usize) -> Result<Config, ContinuationError> {
        path.validate(CLEARANCE)?;
        let mut state = path.start;
        let mut a = args(state)?;
        for (index, m) in path.moves.iter().enumerate() {
            let n = m.default_density(state) * density_scale.max(1);
            let s0 = state;
            let mut c = s0;
            for k in 1..=n {
                let ta = (k - 1) as f64 / n as f64;
                let tb = k as f64 / n as f64;
                let (cb, ab) = self.advance(index, m, s0, ta, c, a, tb, 0)?;
                c = cb;
                a = ab;
            }
            state = c;
        }
        Ok(state)
    }
}

/// Follows the branch `bt` of `f` along `path`, recovering the end sheet
/// from cut crossings of the three principal arguments and certifying each
/// step with a Taylor expansion of the previous sheet.
pub fn continue_along(f: &LogFunction, bt: BranchTriple, path: &PathSpec) -> Result<Continuation, ContinuationError> {
    continue_along_with(f, bt, path, &ContinuationOptions::default())
}

pub fn continue_along_with(
    f: &LogFunction,
    bt: BranchTriple,
    path: &PathSpec,
    opts: &ContinuationOptions,
) -> Result<Continuation, ContinuationError> {
    let towers = [
        f.derivative_tower(Var::Z1, opts.taylor_order),
        f.derivative_tower(Var::Z2, opts.taylor_order),
    ];
    let mut tr = Tracker {
        towers: Some(towers),
        f: Some(f),
        tol: opts.tol,
        bt,
        crossings: Vec::new(),
        certificate: 0.0,
        intervals: 0,
    };
    let end_point = tr.run(path, opts.density_scale)?;
    let value = f.eval_branch2(tr.bt, end_point.z1, end_point.z2)?;
    Ok(Continuation {
        end: tr.bt,
        end_point,
        value,
        certificate: tr.certificate,
        crossings: tr.crossings,
        intervals: tr.intervals,
    })
}

/// Winding numbers of `z1`, `z2` and `z1 - z2` about `0` along `path`,
/// counted as net counterclockwise crossings of the positive real axis.
pub fn winding_profile(path: &PathSpec) -> Result<WindingProfile, ContinuationError> {
    let mut tr = Tracker {
        towers: None,
        f: None,
        tol: f64::INFINITY,
        bt: BranchTriple::ZERO,
        crossings: Vec::new(),
        certificate: 0.0,
        intervals: 0,
    };
    tr.run(path, 1)?;
    Ok(WindingProfile {
        w1: tr.bt.p1,
        w2: tr.bt.p2,
        w12: tr.bt.p12,
        cut_crossings: tr.crossings,
    })
}
