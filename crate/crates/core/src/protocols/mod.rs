//! Phase-estimation protocols for the `S_p` stabilizer eigenphase.
//!
//! Three protocols are provided: repeated rounds with a fixed two-block
//! schedule (`pe`), adaptive rounds whose feedback phase maximizes the
//! expected posterior sharpness (`ape`), and standard binary phase
//! estimation with power-of-two multipliers (`spe`).
//!
//! A round with multiplier `m` and feedback phase `φ` yields outcome 0 with
//! probability `(1 + cos(mθ + φ))/2`.

mod feedback;
mod sampling;
mod schedule;
mod standard;
mod survey;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use feedback::{build_feedback_table, optimize_feedback_phase, FeedbackTable, MAX_TABLE_DEPTH};
pub use sampling::{
    enumerate_nonadaptive_classes, enumerate_outcomes, sample_trajectory, sample_trajectory_with, OutcomeClass,
    OutcomeRecord, MAX_ENUMERATION_DEPTH, MAX_STANDARD_ENUMERATION_DEPTH,
};
pub use schedule::{estimate_theta_simple, nonadaptive_schedule};
pub use standard::{standard_estimate, standard_pe_run, standard_pe_run_with, MAX_STANDARD_ROUNDS};
pub use survey::{
    chernoff_bound, chernoff_check, deviation_survey, error_histogram, ErrorHistogram, SurveyCurve, HISTOGRAM_CEILING,
};

/// Which phase-estimation protocol drives the rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    /// Repeated unit rounds, half at φ = 0 then half at φ = π/2.
    #[serde(rename = "pe")]
    Nonadaptive,
    /// Unit rounds with feedback phases from a [`FeedbackTable`].
    #[serde(rename = "ape")]
    Adaptive,
    /// Binary phase estimation with multipliers `2^{M−1}, …, 2, 1`.
    #[serde(rename = "spe")]
    Standard,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Nonadaptive => "pe",
            Protocol::Adaptive => "ape",
            Protocol::Standard => "spe",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "pe" => Ok(Protocol::Nonadaptive),
            "ape" => Ok(Protocol::Adaptive),
            "spe" => Ok(Protocol::Standard),
            _ => Err(Error::Domain(format!("unknown protocol {s:?} (expected pe, ape or spe)"))),
        }
    }
}

/// One measured round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub multiplier: usize,
    /// Feedback phase in [0, 2π).
    pub phi: f64,
    pub outcome: u8,
}

/// Ordered record of a run and its final estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub protocol: Protocol,
    pub rounds: Vec<RoundRecord>,
    /// Final phase estimate in (−π, π].
    pub theta_hat: f64,
}

impl Trajectory {
    pub fn outcomes(&self) -> Vec<u8> {
        self.rounds.iter().map(|r| r.outcome).collect()
    }
}

/// Probability of outcome 0 given the true phase.
pub fn outcome_likelihood(theta: f64, phi: f64, m: usize) -> f64 {
    (0.5 * (1.0 + (m as f64 * theta + phi).cos())).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for p in [Protocol::Nonadaptive, Protocol::Adaptive, Protocol::Standard] {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!("qpe".parse::<Protocol>().is_err());
    }
}
