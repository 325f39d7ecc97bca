//! Output states of unit-multiplier phase-estimation runs.
//!
//! Round `k` applies `(1 + z_k·S_p)/2` with `z_k = (−1)^{x_k} e^{iφ_k}`, so
//! after `M` rounds the (unnormalized) state is
//! `Σ_j c_j S_p^j |sq.vac⟩` with `c_j = e_j(z_1, …, z_M)`, recentred by
//! `D(−M√(π/2))`.
//!
//! Writing `ϑ = −2√π·p`, the momentum density of that state is proportional
//! to the likelihood of the outcomes at phase `ϑ`. Consequences used in the
//! tests: `Σ_j|c_j|² = 4^M·P(x)` and the posterior coefficients equal
//! `4^{−M}·Σ_j c_{j+k}·conj(c_j)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gaussian_states::{photon_stats, LatticeSuperposition};
use crate::metrics::squeezed_vac_photons;
use crate::protocols::{enumerate_outcomes, FeedbackTable, Protocol, Trajectory};

/// Stabilizer displacement amplitude, `√(2π)`.
pub fn sp_spacing() -> f64 {
    (2.0 * PI).sqrt()
}

/// Lattice weights `c_j = e_j(z_1, …, z_M)`, built as `Π_k (1 + z_k t)`.
pub fn coefficients_from_trajectory(traj: &Trajectory) -> Result<Vec<Complex64>> {
    if let Some(r) = traj.rounds.iter().find(|r| r.multiplier != 1) {
        return Err(Error::Unsupported(format!(
            "state synthesis needs unit multipliers, found {}",
            r.multiplier
        )));
    }
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in &traj.rounds {
        let sign = if r.outcome == 0 { 1.0 } else { -1.0 };
        let z = Complex64::from_polar(sign, r.phi);
        poly.push(Complex64::new(0.0, 0.0));
        for j in (1..poly.len()).rev() {
            let prev = poly[j - 1];
            poly[j] += z * prev;
        }
    }
    Ok(poly)
}

/// Prepared state together with its phase-frame correction.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub state: LatticeSuperposition,
    pub theta_hat: f64,
    /// Corrective `e^{+iv·q}` amplitude, `θ̃/(2√π)`.
    pub correction_v: f64,
}

/// The raw output state (no correction applied).
pub fn output_state(traj: &Trajectory, delta: f64) -> Result<LatticeSuperposition> {
    let weights = coefficients_from_trajectory(traj)?;
    let m = traj.rounds.len() as f64;
    LatticeSuperposition::new(delta, sp_spacing(), weights, -0.5 * m)
}

/// Output state shifted back by the estimate.
///
/// The estimate `θ̃` corresponds to a momentum offset `−θ̃/(2√π)`; the
/// correction `e^{+iθ̃q/(2√π)}` is stored as `shift_v = −θ̃/(2√π)` in the
/// lattice convention `e^{−iv·q}`.
pub fn prepared_state(traj: &Trajectory, delta: f64) -> Result<SynthesisResult> {
    let correction_v = traj.theta_hat / (2.0 * PI.sqrt());
    let raw = output_state(traj, delta)?;
    let state = raw.shifted(0.0, -correction_v)?;
    Ok(SynthesisResult {
        state,
        theta_hat: traj.theta_hat,
        correction_v,
    })
}

/// Outcome-weighted mean photon number of the prepared states and the
/// between-outcome standard deviation, by exact enumeration.
///
/// Uses the orthogonal-peak mean of each state (the corrective shift is not
/// counted).
pub fn average_photons_over_theta(
    protocol: Protocol,
    m: usize,
    delta: f64,
    table: Option<&FeedbackTable>,
) -> Result<(f64, f64)> {
    if protocol == Protocol::Standard {
        return Err(Error::Unsupported(
            "standard runs produce 2^M-point lattices; use standard_pe_photon_count".into(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("Δ = {delta} must lie in (0, 1]"));
    }
    let outcomes = enumerate_outcomes(protocol, m, table)?;
    let stats: Vec<(f64, f64)> = outcomes
        .par_iter()
        .map(|o| {
            let state = output_state(&o.trajectory(protocol), delta)?;
            Ok((o.probability, photon_stats(&state).mean))
        })
        .collect::<Result<_>>()?;
    let total: f64 = stats.iter().map(|s| s.0).sum();
    let mean = stats.iter().map(|(p, n)| p * n).sum::<f64>() / total;
    let var = stats.iter().map(|(p, n)| p * (n - mean).powi(2)).sum::<f64>() / total;
    Ok((mean, var.max(0.0).sqrt()))
}

/// Photon count of the standard protocol: the exact bracket
/// `2π(2^{2M−2}/3 + 2^{M−1}/2 + 1/6)` and the leading term `2π·2^{2M}/12`,
/// both plus the squeezing contribution.
pub fn standard_pe_photon_count(m: usize, delta: f64) -> Result<(f64, f64)> {
    if m == 0 {
        return domain("standard photon count needs M ≥ 1");
    }
    if m > 500 {
        return domain("standard photon count overflows beyond M = 500");
    }
    let n_sq = squeezed_vac_photons(delta)?;
    let mi = m as i32;
    let exact = 2.0 * PI * (2f64.powi(2 * mi - 2) / 3.0 + 2f64.powi(mi - 1) / 2.0 + 1.0 / 6.0);
    let leading = 2.0 * PI * 2f64.powi(2 * mi) / 12.0;
    Ok((exact + n_sq, leading + n_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_states::{codeword_shift_error_rate, Quadrature};
    use crate::protocols::{build_feedback_table, RoundRecord};
    use approx::assert_abs_diff_eq;

    fn traj(rounds: &[(u8, f64)], theta_hat: f64) -> Trajectory {
        Trajectory {
            protocol: Protocol::Nonadaptive,
            rounds: rounds
                .iter()
                .map(|&(outcome, phi)| RoundRecord { multiplier: 1, phi, outcome })
                .collect(),
            theta_hat,
        }
    }

    // direct subset expansion of Π(1 + z_k t)
    fn subset_oracle(z: &[Complex64]) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); z.len() + 1];
        for mask in 0u32..(1 << z.len()) {
            let mut prod = Complex64::new(1.0, 0.0);
            for (k, zk) in z.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    prod *= zk;
                }
            }
            c[mask.count_ones() as usize] += prod;
        }
        c
    }

    #[test]
    fn coefficient_examples() {
        let c = coefficients_from_trajectory(&traj(&[(0, 0.0), (0, PI / 2.0)], 0.0)).unwrap();
        assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((c[1] - Complex64::new(1.0, 1.0)).norm() < 1e-15);
        assert!((c[2] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let c = coefficients_from_trajectory(&traj(&[(1, 0.0)], 0.0)).unwrap();
        assert_eq!(c, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let c = coefficients_from_trajectory(&traj(&[(0, 0.0); 6], 0.0)).unwrap();
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for (cj, b) in c.iter().zip(binom) {
            assert_abs_diff_eq!(cj.re, b);
        }
        let mut bad = traj(&[(0, 0.0)], 0.0);
        bad.rounds[0].multiplier = 2;
        assert!(matches!(coefficients_from_trajectory(&bad), Err(Error::Unsupported(_))));
    }

    #[test]
    fn coefficients_match_subset_expansion() {
        let rounds = [(0, 0.3), (1, 2.0), (1, 4.4), (0, 1.0)];
        let z: Vec<Complex64> = rounds
            .iter()
            .map(|&(x, phi): &(u8, f64)| Complex64::from_polar(if x == 0 { 1.0 } else { -1.0 }, phi))
            .collect();
        for m in 1..=4 {
            let c = coefficients_from_trajectory(&traj(&rounds[..m], 0.0)).unwrap();
            for (a, b) in c.iter().zip(subset_oracle(&z[..m])) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn identities_over_all_histories() {
        let table = build_feedback_table(8).unwrap();
        for (protocol, m) in [(Protocol::Nonadaptive, 8), (Protocol::Adaptive, 8), (Protocol::Adaptive, 5)] {
            for o in enumerate_outcomes(protocol, m, Some(&table)).unwrap() {
                let c = coefficients_from_trajectory(&o.trajectory(protocol)).unwrap();
                let scale = 4f64.powi(m as i32);
                let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
                assert!((norm - scale * o.probability).abs() < 1e-12 * scale);
                for k in -(m as i64)..=m as i64 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..c.len() as i64 {
                        let jk = j + k;
                        if jk >= 0 && (jk as usize) < c.len() {
                            acc += c[jk as usize] * c[j as usize].conj();
                        }
                    }
                    assert!((acc / scale - o.posterior.coeff(k)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn prepared_state_basics() {
        let empty = prepared_state(&traj(&[], 0.0), 0.2).unwrap();
        assert_eq!(empty.state.weights().len(), 1);
        assert_eq!(empty.correction_v, 0.0);
        assert_abs_diff_eq!(photon_stats(&empty.state).mean, 5.76, epsilon = 1e-12);

        let four = prepared_state(&traj(&[(0, 0.0); 4], 0.0), 0.2).unwrap();
        let w: Vec<f64> = four.state.weights().iter().map(|c| c.re).collect();
        assert_eq!(w, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        let q = four.state.peak_positions();
        assert_abs_diff_eq!(q[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[3], 2.0 * PI.sqrt(), epsilon = 1e-12);
        for x in [0.3, 1.7, 4.0] {
            assert!((four.state.wavefunction_q(x) - four.state.wavefunction_q(-x)).norm() < 1e-12);
        }
    }

    #[test]
    fn correction_centres_the_momentum_lattice() {
        // the folded p-marginal of the corrected state reproduces the
        // posterior error rate when the envelope is broad
        let table = build_feedback_table(6).unwrap();
        let outcomes = enumerate_outcomes(Protocol::Adaptive, 6, Some(&table)).unwrap();
        for o in outcomes.iter().step_by(7) {
            let prepared = prepared_state(&o.trajectory(Protocol::Adaptive), 0.02).unwrap();
            let from_state = codeword_shift_error_rate(&prepared.state, Quadrature::P, PI.sqrt() / 6.0).unwrap();
            let from_posterior = o.posterior.error_rate(o.theta_hat);
            assert!((from_state - from_posterior).abs() < 5e-3, "{from_state} vs {from_posterior}");
        }
    }

    #[test]
    fn photon_approximation_is_tight() {
        let table = build_feedback_table(8).unwrap();
        for o in enumerate_outcomes(Protocol::Adaptive, 8, Some(&table)).unwrap().iter().step_by(5) {
            let s = output_state(&o.trajectory(Protocol::Adaptive), 0.3).unwrap();
            assert!(photon_stats(&s).overlap_correction.abs() < 1e-6);
        }
    }

    #[test]
    fn photon_averages() {
        let (m0, s0) = average_photons_over_theta(Protocol::Nonadaptive, 0, 0.2, None).unwrap();
        assert_abs_diff_eq!(m0, 5.76, epsilon = 1e-12);
        assert_eq!(s0, 0.0);
        let table = build_feedback_table(8).unwrap();
        let (ma, sa) = average_photons_over_theta(Protocol::Adaptive, 8, 0.2, Some(&table)).unwrap();
        let (mn, sn) = average_photons_over_theta(Protocol::Nonadaptive, 8, 0.2, None).unwrap();
        let expect = 8.0 * PI / 2.0 + 5.76;
        assert!((ma - expect).abs() < 1.0 && (mn - expect).abs() < 1.0);
        assert!(ma < 25.0);
        assert!(sa < sn);
        assert!(average_photons_over_theta(Protocol::Standard, 2, 0.2, None).is_err());
    }

    #[test]
    fn standard_counts() {
        let n_sq = squeezed_vac_photons(0.2).unwrap();
        let (exact, leading) = standard_pe_photon_count(4, 0.2).unwrap();
        assert_abs_diff_eq!(leading - n_sq, 2.0 * PI * 256.0 / 12.0, epsilon = 1e-12);
        assert!((leading - n_sq - 134.0).abs() < 0.5);
        assert_abs_diff_eq!(exact - n_sq, 2.0 * PI * (64.0 / 3.0 + 4.0 + 1.0 / 6.0), epsilon = 1e-12);
        let (one, _) = standard_pe_photon_count(1, 1.0).unwrap();
        assert_abs_diff_eq!(one, 2.0 * PI, epsilon = 1e-15);
        assert!(standard_pe_photon_count(0, 0.2).is_err());
    }
}
