use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::function::Var;

/// Minimum distance a path may come to `z1 = 0`, `z2 = 0` or `z1 = z2`.
pub const CLEARANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("move {index}: path comes within {distance:e} of {locus}")]
    Singular {
        index: usize,
        locus: &'static str,
        distance: f64,
    },
    #[error("move {index}: {reason}")]
    Invalid { index: usize, reason: String },
}

/// A point of the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Config {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    pub fn get(&self, v: Var) -> Complex64 {
        match v {
            Var::Z1 => self.z1,
            Var::Z2 => self.z2,
        }
    }

    pub fn with(mut self, v: Var, z: Complex64) -> Self {
        match v {
            Var::Z1 => self.z1 = z,
            Var::Z2 => self.z2 = z,
        }
        self
    }

    pub fn diff(&self) -> Complex64 {
        self.z1 - self.z2
    }
}

/// Center of a circular move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CenterRepr", into = "CenterRepr")]
pub enum Center {
    Origin,
    /// The current position of the variable that is not moving.
    Other,
    Point(Complex64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CenterRepr {
    Name(String),
    Point(Complex64),
}

impl TryFrom<CenterRepr> for Center {
    type Error = String;
    fn try_from(r: CenterRepr) -> Result<Self, String> {
        match r {
            CenterRepr::Name(s) => match s.as_str() {
                "origin" => Ok(Center::Origin),
                "other" => Ok(Center::Other),
                _ => Err(format!("unknown center {s:?}; expected \"origin\", \"other\" or [re, im]")),
            },
            CenterRepr::Point(p) => Ok(Center::Point(p)),
        }
    }
}

impl From<Center> for CenterRepr {
    fn from(c: Center) -> Self {
        match c {
            Center::Origin => CenterRepr::Name("origin".into()),
            Center::Other => CenterRepr::Name("other".into()),
            Center::Point(p) => CenterRepr::Point(p),
        }
    }
}

/// One piece of a path; exactly one variable moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum Move {
    /// Straight line from the current position to `to`.
    Segment { var: Var, to: Complex64 },
    /// Rotation about `center` by `turns` full turns, counterclockwise positive.
    Arc { var: Var, center: Center, turns: f64 },
}

impl Move {
    pub fn var(&self) -> Var {
        match *self {
            Move::Segment { var, .. } | Move::Arc { var, .. } => var,
        }
    }

    fn center_point(center: Center, state: Config, var: Var) -> Complex64 {
        match center {
            Center::Origin => Complex64::new(0.0, 0.0),
            Center::Other => state.get(var.other()),
            Center::Point(p) => p,
        }
    }

    /// Configuration at fraction `tau ∈ [0, 1]` of this move.
    pub fn position(&self, state: Config, tau: f64) -> Config {
        let var = self.var();
        let z0 = state.get(var);
        let z = match *self {
            Move::Segment { to, .. } => {
                if tau >= 1.0 {
                    to
                } else {
                    z0 + (to - z0) * tau
                }
            }
            Move::Arc { center, turns, .. } => {
                if tau >= 1.0 && turns.fract() == 0.0 {
                    z0
                } else {
                    let c = Self::center_point(center, state, var);
                    c + (z0 - c) * Complex64::from_polar(1.0, TAU * turns * tau)
                }
            }
        };
        state.with(var, z)
    }

    /// `n + 1` evenly spaced configurations from start to end.
    pub fn samples(&self, state: Config, n: usize) -> Vec<Config> {
        let n = n.max(1);
        (0..=n).map(|k| self.position(state, k as f64 / n as f64)).collect()
    }

    /// Closest approach of the moving variable to the point `q`.
    pub fn distance_to(&self, state: Config, q: Complex64) -> f64 {
        let var = self.var();
        let z0 = state.get(var);
        match *self {
            Move::Segment { to, .. } => segment_distance(z0, to, q),
            Move::Arc { center, turns, .. } => {
                let c = Self::center_point(center, state, var);
                arc_distance(c, z0, turns, q)
            }
        }
    }

    /// Closest approach to any singular locus during this move.
    pub fn clearance(&self, state: Config) -> (f64, &'static str) {
        let var = self.var();
        let fixed = state.get(var.other());
        let to_zero = self.distance_to(state, Complex64::new(0.0, 0.0));
        let to_other = self.distance_to(state, fixed);
        let mut best = (fixed.norm(), if var == Var::Z1 { "z2 = 0" } else { "z1 = 0" });
        if to_zero < best.0 {
            best = (to_zero, if var == Var::Z1 { "z1 = 0" } else { "z2 = 0" });
        }
        if to_other < best.0 {
            best = (to_other, "z1 = z2");
        }
        best
    }

    /// Initial number of sample intervals: 64 for segments,
    /// `max(64, 32·|turns|·radius/clearance)` for arcs.
    pub fn default_density(&self, state: Config) -> usize {
        match *self {
            Move::Segment { .. } => 64,
            Move::Arc { center, turns, var } => {
                let c = Self::center_point(center, state, var);
                let rho = (state.get(var) - c).norm();
                let (d, _) = self.clearance(state);
                let ratio = if d > 0.0 { (rho / d).max(1.0) } else { 1.0 };
                64usize.max((32.0 * turns.abs() * ratio).ceil() as usize)
            }
        }
    }
}

fn segment_distance(a: Complex64, b: Complex64, q: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = ((q - a) * d.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (a + d * t - q).norm()
}

fn arc_distance(c: Complex64, z0: Complex64, turns: f64, q: Complex64) -> f64 {
    let rho = (z0 - c).norm();
    if rho == 0.0 {
        return (z0 - q).norm();
    }
    let rq = (q - c).norm();
    let on_circle = (rq - rho).abs();
    if turns.abs() >= 1.0 || rq == 0.0 {
        return on_circle;
    }
    let phi0 = (z0 - c).arg();
    let psi = (q - c).arg();
    let sweep = TAU * turns;
    let delta = if sweep >= 0.0 {
        (psi - phi0).rem_euclid(TAU)
    } else {
        (phi0 - psi).rem_euclid(TAU)
    };
    if delta <= sweep.abs() {
        on_circle
    } else {
        let end = c + (z0 - c) * Complex64::from_polar(1.0, sweep);
        (z0 - q).norm().min((end - q).norm())
    }
}

/// Piecewise path in the configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub start: Config,
    pub moves: Vec<Move>,
}

impl PathSpec {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Self {
            start: Config::new(z1, z2),
            moves: Vec::new(),
        }
    }

    pub fn segment(mut self, var: Var, to: Complex64) -> Self {
        self.moves.push(Move::Segment { var, to });
        self
    }

    pub fn arc(mut self, var: Var, center: Center, turns: f64) -> Self {
        self.moves.push(Move::Arc { var, center, turns });
        self
    }

    pub fn then(mut self, other: &PathSpec) -> Self {
        self.moves.extend_from_slice(&other.moves);
        self
    }

    /// Configuration at the start of every move, plus the end point.
    pub fn waypoints(&self) -> Vec<Config> {
        let mut out = Vec::with_capacity(self.moves.len() + 1);
        let mut s = self.start;
        out.push(s);
        for m in &self.moves {
            s = m.position(s, 1.0);
            out.push(s);
        }
        out
    }

    pub fn end(&self) -> Config {
        *self.waypoints().last().expect("waypoints is never empty")
    }

    /// Rejects paths that touch `z1 = 0`, `z2 = 0` or `z1 = z2`, using exact
    /// distance bounds for segments and arcs.
    pub fn validate(&self, clearance: f64) -> Result<(), PathError> {
        for (index, (m, s)) in self.moves.iter().zip(self.waypoints()).enumerate() {
            let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
            let ok = match *m {
                Move::Segment { to, .. } => finite(to),
                Move::Arc { center, turns, .. } => {
                    turns.is_finite() && !matches!(center, Center::Point(p) if !finite(p))
                }
            };
            if !ok {
                return Err(PathError::Invalid {
                    index,
                    reason: "non-finite move data".into(),
                });
            }
            let (distance, locus) = m.clearance(s);
            if distance <= clearance {
                return Err(PathError::Singular { index, locus, distance });
            }
        }
        let s = self.start;
        let d = s.z1.norm().min(s.z2.norm()).min(s.diff().norm());
        if d <= clearance {
            return Err(PathError::Singular {
                index: 0,
                locus: "start point",
                distance: d,
            });
        }
        Ok(())
    }

    /// The reversed path, starting from this path's end.
    pub fn reversed(&self) -> PathSpec {
        let pts = self.waypoints();
        let mut out = PathSpec {
            start: *pts.last().expect("waypoints is never empty"),
            moves: Vec::with_capacity(self.moves.len()),
        };
        for (i, m) in self.moves.iter().enumerate().rev() {
            let back = match *m {
                Move::Segment { var, .. } => Move::Segment { var, to: pts[i].get(var) },
                Move::Arc { var, center, turns } => Move::Arc { var, center, turns: -turns },
            };
            out.moves.push(back);
        }
        out
    }
}

/// Loops used for the monodromy composition: base point `z1 = -a1`,
/// `z2 = -a2` with `a1 > a2 > a1 - a2 > 0`, inner radius `a3 < a2`.
pub mod loops {
    use super::*;

    /// `z1` once around both `0` and `z2`; `turns = ±1`.
    pub fn gamma1(a1: f64, a2: f64, turns: f64) -> PathSpec {
        PathSpec::new(Complex64::new(-a1, 0.0), Complex64::new(-a2, 0.0)).arc(Var::Z1, Center::Origin, turns)
    }

    /// First leg: half turn over `z2`, then along the negative axis to `-a3`.
    pub fn gamma2_l1(a1: f64, a2: f64, a3: f64, turns: f64) -> PathSpec {
        PathSpec::new(Complex64::new(-a1, 0.0), Complex64::new(-a2, 0.0))
            .arc(Var::Z1, Center::Other, 0.5 * turns)
            .segment(Var::Z1, Complex64::new(-a3, 0.0))
    }

    /// Composite loop: `l1`, then `z1` around `0` only, then `l1` reversed,
    /// then `z1` around `z2` only.
    pub fn gamma2(a1: f64, a2: f64, a3: f64, turns: f64) -> PathSpec {
        let l1 = gamma2_l1(a1, a2, a3, turns);
        let l2 = PathSpec {
            start: l1.end(),
            moves: vec![Move::Arc {
                var: Var::Z1,
                center: Center::Origin,
                turns,
            }],
        };
        let l3 = l1.reversed();
        let l4 = PathSpec::new(Complex64::new(-a1, 0.0), Complex64::new(-a2, 0.0)).arc(Var::Z1, Center::Other, turns);
        l1.then(&l2).then(&l3).then(&l4)
    }

    /// Number of moves in each of `l1`, `l2`, `l3`, `l4`.
    pub const GAMMA2_LEGS: [usize; 4] = [2, 1, 2, 1];

    /// Radii admissible for [`gamma1`] and [`gamma2`].
    pub fn valid_radii(a1: f64, a2: f64, a3: f64) -> bool {
        a1 > a2 && a2 > a1 - a2 && a1 - a2 > 0.0 && a3 > 0.0 && a3 < a2 && (a3 - (2.0 * a2 - a1)).abs() > 1e-6
    }
}
