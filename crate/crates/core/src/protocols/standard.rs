//! Standard (binary) phase estimation.
//!
//! Round `i = 1..M` uses multiplier `2^{M−i}` and so resolves bit `x_i` of
//! `θ/2π = 0.x_M … x_2 x_1`. Lower bits already measured are removed with the
//! semiclassical Fourier feedback `φ_i = −π·(0.x_{i−1} x_{i−2} … x_1)₂`, the
//! most recent outcome being the most significant digit.

use std::f64::consts::PI;

use rand::Rng;

use crate::circular::{wrap_angle, wrap_positive};
use crate::error::{domain, Result};
use crate::rng::{seeded, SimRng};

use super::{outcome_likelihood, Protocol, RoundRecord, Trajectory};

/// Largest round count (multipliers must fit in 64 bits).
pub const MAX_STANDARD_ROUNDS: usize = 62;

/// Runs `m_total` rounds against a true phase and rounds the result to
/// `m_tilde` bits.
pub fn standard_pe_run(m_total: usize, m_tilde: usize, true_theta: f64, seed: u64) -> Result<Trajectory> {
    standard_pe_run_with(m_total, m_tilde, true_theta, &mut seeded(seed))
}

pub fn standard_pe_run_with(m_total: usize, m_tilde: usize, true_theta: f64, rng: &mut SimRng) -> Result<Trajectory> {
    check_bits(m_total, m_tilde)?;
    if !true_theta.is_finite() {
        return domain("true phase must be finite");
    }
    let mut rounds: Vec<RoundRecord> = Vec::with_capacity(m_total);
    for i in 1..=m_total {
        let multiplier = 1usize << (m_total - i);
        let phi = wrap_positive(feedback_phase(&rounds));
        let p0 = outcome_likelihood(true_theta, phi, multiplier);
        let outcome = if rng.random::<f64>() < p0 { 0 } else { 1 };
        rounds.push(RoundRecord { multiplier, phi, outcome });
    }
    let bits: Vec<u8> = rounds.iter().map(|r| r.outcome).collect();
    let theta_hat = standard_estimate(&bits, m_tilde)?;
    Ok(Trajectory {
        protocol: Protocol::Standard,
        rounds,
        theta_hat,
    })
}

/// `−π·(0.x_{i−1} … x_1)₂` for the rounds measured so far.
pub(crate) fn feedback_phase(rounds: &[RoundRecord]) -> f64 {
    -PI * rounds
        .iter()
        .rev()
        .enumerate()
        .map(|(j, r)| r.outcome as f64 * 0.5f64.powi(j as i32 + 1))
        .sum::<f64>()
}

/// Best `m_tilde`-bit estimate from outcome bits in round order.
///
/// `x = Σ_i x_i 2^{i−1}` is rounded (half up) to its top `m_tilde` bits,
/// wrapping modulo `2^{m_tilde}`; the estimate is `2π·x_round/2^{m_tilde}`
/// when that fraction is at most 1/2 and `2π·x_round/2^{m_tilde} − 2π`
/// otherwise, so the boundary value 1/2 maps to +π.
pub fn standard_estimate(bits: &[u8], m_tilde: usize) -> Result<f64> {
    check_bits(bits.len(), m_tilde)?;
    let x: u64 = bits.iter().enumerate().map(|(i, &b)| (b as u64 & 1) << i).sum();
    let drop = bits.len() - m_tilde;
    let rounded = if drop == 0 { x } else { (x + (1u64 << (drop - 1))) >> drop };
    let modulus = 1u64 << m_tilde;
    let frac = (rounded % modulus) as f64 / modulus as f64;
    let theta = if frac <= 0.5 { 2.0 * PI * frac } else { 2.0 * PI * frac - 2.0 * PI };
    Ok(if theta == PI { PI } else { wrap_angle(theta) })
}

fn check_bits(m_total: usize, m_tilde: usize) -> Result<()> {
    if m_total == 0 || m_total > MAX_STANDARD_ROUNDS {
        return domain(format!("standard rounds {m_total} must lie in 1..={MAX_STANDARD_ROUNDS}"));
    }
    if m_tilde == 0 || m_tilde > m_total {
        return domain(format!("estimate bits {m_tilde} must lie in 1..={m_total}"));
    }
    Ok(())
}
