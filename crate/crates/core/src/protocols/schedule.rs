//! Fixed two-block schedule of the nonadaptive protocol and its simple estimator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::circular::wrap_angle;
use crate::error::{domain, Error, Result};

use super::Trajectory;

/// `M/2` rounds at φ = 0 followed by `M/2` rounds at φ = π/2, as
/// `(multiplier, φ)` pairs.
pub fn nonadaptive_schedule(m: usize) -> Result<Vec<(usize, f64)>> {
    if m % 2 == 1 {
        return domain(format!("nonadaptive schedule needs an even round count, got {m}"));
    }
    Ok((0..m).map(|i| (1, if i < m / 2 { 0.0 } else { PI / 2.0 })).collect())
}

/// `arg(2P̃₀ − 1 − i(2P̃_{π/2} − 1))` from the outcome-0 frequencies of the
/// two schedule blocks.
pub fn estimate_theta_simple(traj: &Trajectory) -> Result<f64> {
    let (mut n0, mut z0, mut n1, mut z1) = (0usize, 0usize, 0usize, 0usize);
    for r in &traj.rounds {
        if r.multiplier != 1 {
            return domain("simple estimator needs unit-multiplier rounds");
        }
        if r.phi == 0.0 {
            n0 += 1;
            z0 += (r.outcome == 0) as usize;
        } else if r.phi == PI / 2.0 {
            n1 += 1;
            z1 += (r.outcome == 0) as usize;
        } else {
            return domain("simple estimator needs rounds at φ = 0 or φ = π/2");
        }
    }
    if n0 == 0 || n1 == 0 {
        return domain("simple estimator needs rounds in both schedule blocks");
    }
    let re = 2.0 * z0 as f64 / n0 as f64 - 1.0;
    let im = -(2.0 * z1 as f64 / n1 as f64 - 1.0);
    if re == 0.0 && im == 0.0 {
        return Err(Error::Degenerate("both block averages are 1/2".into()));
    }
    Ok(wrap_angle(Complex64::new(re, im).arg()))
}
