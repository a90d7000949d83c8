use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::logfun::RegionId;

/// Excluded band at each edge of an argument window.
pub const WINDOW_MARGIN: f64 = 0.05;
/// Inner/outer radius ratio range of sampled points.
pub const RATIO_RANGE: (f64, f64) = (0.3, 0.6);
/// Radius range of the outer variable.
pub const OUTER_RANGE: (f64, f64) = (0.8, 1.25);
pub const MAX_TRIES: usize = 10_000;

fn polar(rng: &mut ChaCha8Rng, rho: f64) -> Complex64 {
    Complex64::from_polar(rho, rng.gen_range(0.0..TAU))
}

/// A point strictly inside `region` and its argument window, with radius
/// ratio in [`RATIO_RANGE`]. `None` after [`MAX_TRIES`] rejections.
pub fn sample_region(rng: &mut ChaCha8Rng, region: RegionId) -> Option<(Complex64, Complex64)> {
    for _ in 0..MAX_TRIES {
        let outer = rng.gen_range(OUTER_RANGE.0..OUTER_RANGE.1);
        let inner = outer * rng.gen_range(RATIO_RANGE.0..RATIO_RANGE.1);
        let (z1, z2) = match region {
            RegionId::Product => (polar(rng, outer), polar(rng, inner)),
            RegionId::Reversed => (polar(rng, inner), polar(rng, outer)),
            RegionId::Iterate => {
                let z2 = polar(rng, outer);
                (z2 + polar(rng, inner), z2)
            }
        };
        if region.in_window(z1, z2, WINDOW_MARGIN).unwrap_or(false) {
            return Some((z1, z2));
        }
    }
    None
}

/// A generic point: both variables and their difference of modulus at
/// least `0.3`.
pub fn sample_generic(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    loop {
        let (r1, r2) = (rng.gen_range(0.5..1.6), rng.gen_range(0.5..1.6));
        let z1 = polar(rng, r1);
        let z2 = polar(rng, r2);
        if (z1 - z2).norm() >= 0.3 {
            return (z1, z2);
        }
    }
}

/// Starting data of a cut-crossing arc: `z2` fixed, `z1 = z2 + d e^{iδ}`
/// turning clockwise to `z2 + d e^{-iδ}`, so `z1 - z2` passes through the
/// positive real axis while both ends stay inside `|z1| < |z2|`. The start
/// lies in the reversed window and the end in the window
/// `π/2 < arg(z1-z2) - arg z2 < 3π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingArc {
    pub z1_start: Complex64,
    pub z1_end: Complex64,
    pub z2: Complex64,
    pub delta: f64,
}

impl CrossingArc {
    /// Signed turns of the arc about `z2`.
    pub fn turns(&self) -> f64 {
        -self.delta / PI
    }
}

pub fn sample_crossing_arc(rng: &mut ChaCha8Rng) -> Option<CrossingArc> {
    let arg = |z: Complex64| {
        let a = z.im.atan2(z.re);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    };
    for _ in 0..MAX_TRIES {
        let delta = rng.gen_range(0.15..0.5);
        let lo = PI / 2.0 + delta + WINDOW_MARGIN;
        let hi = 1.5 * PI - delta - WINDOW_MARGIN;
        let beta = rng.gen_range(lo..hi);
        let rho2 = rng.gen_range(OUTER_RANGE.0..OUTER_RANGE.1);
        let d = rho2 * rng.gen_range(RATIO_RANGE.0..RATIO_RANGE.1);
        let z2 = Complex64::from_polar(rho2, beta);
        let z1_start = z2 + Complex64::from_polar(d, delta);
        let z1_end = z2 + Complex64::from_polar(d, -delta);
        if z1_start.norm() >= rho2 || z1_end.norm() >= rho2 {
            continue;
        }
        let a2 = arg(z2);
        let start = delta - a2;
        let end = TAU - delta - a2;
        let in_start = start > -1.5 * PI + WINDOW_MARGIN && start < -PI / 2.0 - WINDOW_MARGIN;
        let in_end = end > PI / 2.0 + WINDOW_MARGIN && end < 1.5 * PI - WINDOW_MARGIN;
        if in_start && in_end {
            return Some(CrossingArc {
                z1_start,
                z1_end,
                z2,
                delta,
            });
        }
    }
    None
}
