//! Squeezing conversions and error-rate composition.
//!
//! dB figures use the amplifier-gain convention `10·log10(cosh² r)` with
//! `r = ln(1/Δ)`. The variance-based convention `10·log10(e^{2r})` is
//! available as [`squeeze_db_variance`] but nothing downstream uses it.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::special::erfc;

/// A squeezing level expressed three equivalent ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeLevel {
    pub delta: f64,
    pub r: f64,
    pub db: f64,
}

impl SqueezeLevel {
    pub fn from_delta(delta: f64) -> Result<Self> {
        let db = squeeze_db(delta)?;
        Ok(Self { delta, r: -delta.ln(), db })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        let delta = delta_from_db(db)?;
        Ok(Self { delta, r: -delta.ln(), db })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("squeezing parameter Δ = {delta} must lie in (0, 1]"));
    }
    Ok(())
}

/// Squeezing in dB, `10·log10(cosh²(ln(1/Δ)))`.
pub fn squeeze_db(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    // cosh r − 1 = (1 − Δ)²/(2Δ), kept explicit so Δ → 1 stays well conditioned
    let excess = (1.0 - delta).powi(2) / (2.0 * delta);
    Ok(20.0 / std::f64::consts::LN_10 * excess.ln_1p())
}

/// Inverse of [`squeeze_db`].
pub fn delta_from_db(db: f64) -> Result<f64> {
    if !(db >= 0.0) || !db.is_finite() {
        return domain(format!("squeezing {db} dB must be finite and non-negative"));
    }
    let excess = (db * std::f64::consts::LN_10 / 20.0).exp_m1();
    let r = (excess + (excess * (excess + 2.0)).sqrt()).ln_1p();
    Ok((-r).exp())
}

/// Variance-based dB convention, `10·log10(1/Δ²)`.
pub fn squeeze_db_variance(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(-20.0 * delta.log10())
}

/// Probability that a q-squeezed vacuum lies outside `|q| ≤ √π/6`, namely
/// `1 − erf(e^r·√π/6)`.
pub fn squeezed_vac_error(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(erfc(PI.sqrt() / 6.0 / delta))
}

/// Mean photon number of the squeezed vacuum, `sinh²(ln(1/Δ))`.
pub fn squeezed_vac_photons(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let half = 0.5 * (1.0 / delta - delta);
    Ok(half * half)
}

/// Union of two independent error events, `p + q − p·q`.
pub fn combine_errors(p_err: f64, q_err: f64) -> Result<f64> {
    for (name, v) in [("p", p_err), ("q", q_err)] {
        if !(0.0..=1.0).contains(&v) {
            return domain(format!("{name} error rate {v} is not a probability"));
        }
    }
    Ok(p_err + q_err - p_err * q_err)
}
