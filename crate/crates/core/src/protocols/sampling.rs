//! Trajectory sampling and exact outcome enumeration.

use std::f64::consts::PI;

use rand::Rng;

use crate::circular::wrap_positive;
use crate::error::{domain, Error, Result};
use crate::phase_posterior::PhasePosterior;
use crate::rng::{seeded, SimRng};

use super::feedback::FeedbackTable;
use super::schedule::nonadaptive_schedule;
use super::standard::{feedback_phase, standard_estimate, standard_pe_run_with};
use super::{outcome_likelihood, Protocol, RoundRecord, Trajectory};

/// Deepest exact enumeration for unit-multiplier protocols (2^16 histories).
pub const MAX_ENUMERATION_DEPTH: usize = 16;

/// Standard-protocol posteriors have bandwidth `2^M − 1`, so enumeration
/// stops earlier.
pub const MAX_STANDARD_ENUMERATION_DEPTH: usize = 12;

/// Deepest nonadaptive run collapsed into weight classes.
pub const MAX_CLASS_DEPTH: usize = 128;

// recursion levels that fork onto the thread pool
const PARALLEL_LEVELS: usize = 4;

/// Circular-mean estimate, falling back to 0 when the posterior has no first
/// harmonic (some nonadaptive histories give a density of period π).
pub(crate) fn posterior_estimate(post: &PhasePosterior) -> f64 {
    post.estimate_theta().unwrap_or(0.0)
}

/// Samples one run.
///
/// With `true_theta` the outcomes follow the round likelihood; without it
/// they follow the flat-prior predictive distribution (the infinitely
/// squeezed input). The standard protocol draws a uniform θ in that case,
/// which is the same distribution.
pub fn sample_trajectory(
    protocol: Protocol,
    m: usize,
    seed: u64,
    true_theta: Option<f64>,
    table: Option<&FeedbackTable>,
) -> Result<Trajectory> {
    sample_trajectory_with(protocol, m, &mut seeded(seed), true_theta, table)
}

pub fn sample_trajectory_with(
    protocol: Protocol,
    m: usize,
    rng: &mut SimRng,
    true_theta: Option<f64>,
    table: Option<&FeedbackTable>,
) -> Result<Trajectory> {
    if let Some(t) = true_theta {
        if !t.is_finite() {
            return domain("true phase must be finite");
        }
    }
    match protocol {
        Protocol::Standard => {
            let theta = match true_theta {
                Some(t) => t,
                None => PI - 2.0 * PI * rng.random::<f64>(),
            };
            standard_pe_run_with(m, m, theta, rng)
        }
        Protocol::Nonadaptive | Protocol::Adaptive => {
            let schedule = unit_schedule(protocol, m, table)?;
            let mut post = PhasePosterior::flat();
            let mut rounds = Vec::with_capacity(m);
            let mut history = Vec::with_capacity(m);
            for i in 0..m {
                let phi = schedule.phase(i, &history);
                let p0 = match true_theta {
                    Some(t) => outcome_likelihood(t, phi, 1),
                    None => post.outcome_probability(phi, 1)?.0,
                };
                let outcome = if rng.random::<f64>() < p0 { 0 } else { 1 };
                post = post.update(outcome, phi, 1)?;
                history.push(outcome);
                rounds.push(RoundRecord { multiplier: 1, phi, outcome });
            }
            Ok(Trajectory {
                protocol,
                rounds,
                theta_hat: posterior_estimate(&post),
            })
        }
    }
}

/// Feedback phases of the unit-multiplier protocols.
enum UnitSchedule<'a> {
    Fixed(Vec<f64>),
    Table(&'a FeedbackTable),
}

impl UnitSchedule<'_> {
    fn phase(&self, round: usize, history: &[u8]) -> f64 {
        match self {
            UnitSchedule::Fixed(phis) => phis[round],
            UnitSchedule::Table(t) => t.phase(history).expect("table depth checked"),
        }
    }
}

fn unit_schedule(protocol: Protocol, m: usize, table: Option<&FeedbackTable>) -> Result<UnitSchedule<'_>> {
    match protocol {
        Protocol::Nonadaptive => Ok(UnitSchedule::Fixed(
            nonadaptive_schedule(m)?.into_iter().map(|(_, phi)| phi).collect(),
        )),
        Protocol::Adaptive => {
            let have = table.map_or(0, |t| t.depth());
            match table {
                Some(t) if have >= m => Ok(UnitSchedule::Table(t)),
                _ if m == 0 => Ok(UnitSchedule::Fixed(Vec::new())),
                _ => Err(Error::MissingTable { have, need: m }),
            }
        }
        Protocol::Standard => unreachable!("standard rounds are not unit rounds"),
    }
}

/// One history of an exact enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub rounds: Vec<RoundRecord>,
    /// Flat-prior probability of the history.
    pub probability: f64,
    pub posterior: PhasePosterior,
    pub theta_hat: f64,
}

impl OutcomeRecord {
    pub fn outcomes(&self) -> Vec<u8> {
        self.rounds.iter().map(|r| r.outcome).collect()
    }

    pub fn trajectory(&self, protocol: Protocol) -> Trajectory {
        Trajectory {
            protocol,
            rounds: self.rounds.clone(),
            theta_hat: self.theta_hat,
        }
    }
}

/// Every outcome history with its exact flat-prior probability, ordered by
/// history with the first outcome most significant.
pub fn enumerate_outcomes(protocol: Protocol, m: usize, table: Option<&FeedbackTable>) -> Result<Vec<OutcomeRecord>> {
    let bound = match protocol {
        Protocol::Standard => MAX_STANDARD_ENUMERATION_DEPTH,
        _ => MAX_ENUMERATION_DEPTH,
    };
    if m > bound {
        return Err(Error::Resource(format!(
            "enumerating {m} rounds of {protocol} exceeds the bound of {bound}"
        )));
    }
    let schedule = match protocol {
        Protocol::Standard => None,
        _ => Some(unit_schedule(protocol, m, table)?),
    };
    let ctx = Enumeration {
        protocol,
        m,
        schedule: schedule.as_ref(),
    };
    Ok(ctx.walk(PhasePosterior::flat(), Vec::new(), 1.0))
}

struct Enumeration<'a> {
    protocol: Protocol,
    m: usize,
    schedule: Option<&'a UnitSchedule<'a>>,
}

impl Enumeration<'_> {
    fn next_round(&self, rounds: &[RoundRecord]) -> (usize, f64) {
        match self.schedule {
            Some(s) => {
                let history: Vec<u8> = rounds.iter().map(|r| r.outcome).collect();
                (1, s.phase(rounds.len(), &history))
            }
            None => (
                1usize << (self.m - 1 - rounds.len()),
                wrap_positive(feedback_phase(rounds)),
            ),
        }
    }

    fn walk(&self, post: PhasePosterior, rounds: Vec<RoundRecord>, probability: f64) -> Vec<OutcomeRecord> {
        if rounds.len() == self.m {
            let theta_hat = match self.protocol {
                Protocol::Standard if self.m > 0 => {
                    let bits: Vec<u8> = rounds.iter().map(|r| r.outcome).collect();
                    standard_estimate(&bits, self.m).expect("round count within bounds")
                }
                _ => posterior_estimate(&post),
            };
            return vec![OutcomeRecord {
                rounds,
                probability,
                posterior: post,
                theta_hat,
            }];
        }
        let (multiplier, phi) = self.next_round(&rounds);
        let (p0, p1) = post.outcome_probability(phi, multiplier).expect("multiplier ≥ 1");
        let branch = |outcome: u8, px: f64| {
            let next = post.update(outcome, phi, multiplier).expect("valid round");
            let mut r = rounds.clone();
            r.push(RoundRecord { multiplier, phi, outcome });
            self.walk(next, r, probability * px)
        };
        let (mut left, right) = if rounds.len() < PARALLEL_LEVELS {
            rayon::join(|| branch(0, p0), || branch(1, p1))
        } else {
            (branch(0, p0), branch(1, p1))
        };
        left.extend(right);
        left
    }
}

/// Nonadaptive histories grouped by their outcome-1 counts in each block.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeClass {
    /// Outcome-1 count among the φ = 0 rounds.
    pub ones_first: usize,
    /// Outcome-1 count among the φ = π/2 rounds.
    pub ones_second: usize,
    /// Number of histories in the class.
    pub multiplicity: f64,
    /// Total probability of the class.
    pub probability: f64,
    pub posterior: PhasePosterior,
    pub theta_hat: f64,
}

/// The `(M/2 + 1)²` weight classes of the nonadaptive protocol.
///
/// Rounds with equal phase commute, so the posterior depends only on the two
/// block counts.
pub fn enumerate_nonadaptive_classes(m: usize) -> Result<Vec<OutcomeClass>> {
    if m % 2 == 1 {
        return domain(format!("nonadaptive schedule needs an even round count, got {m}"));
    }
    if m > MAX_CLASS_DEPTH {
        return Err(Error::Resource(format!("class enumeration limited to {MAX_CLASS_DEPTH} rounds")));
    }
    let half = m / 2;
    let binom = binomial_row(half);
    let mut out = Vec::with_capacity((half + 1) * (half + 1));
    for a in 0..=half {
        for b in 0..=half {
            let post = rebuild(half, a, b)?;
            let multiplicity = binom[a] * binom[b];
            out.push(OutcomeClass {
                ones_first: a,
                ones_second: b,
                multiplicity,
                probability: multiplicity * post.coeff(0).re,
                theta_hat: posterior_estimate(&post),
                posterior: post,
            });
        }
    }
    Ok(out)
}

fn rebuild(half: usize, a: usize, b: usize) -> Result<PhasePosterior> {
    let mut post = PhasePosterior::flat();
    for i in 0..half {
        post = post.update((i < a) as u8, 0.0, 1)?;
    }
    for i in 0..half {
        post = post.update((i < b) as u8, PI / 2.0, 1)?;
    }
    Ok(post)
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for k in 1..=n {
        let prev = row[k - 1];
        row.push(prev * (n + 1 - k) as f64 / k as f64);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::build_feedback_table;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_outcomes_at_known_phases() {
        let t = sample_trajectory(Protocol::Nonadaptive, 8, 5, Some(0.0), None).unwrap();
        assert!(t.rounds[..4].iter().all(|r| r.outcome == 0));
        let t = sample_trajectory(Protocol::Nonadaptive, 8, 5, Some(PI), None).unwrap();
        assert!(t.rounds[..4].iter().all(|r| r.outcome == 1));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let table = build_feedback_table(6).unwrap();
        for protocol in [Protocol::Nonadaptive, Protocol::Adaptive, Protocol::Standard] {
            let a = sample_trajectory(protocol, 6, 42, None, Some(&table)).unwrap();
            let b = sample_trajectory(protocol, 6, 42, None, Some(&table)).unwrap();
            assert_eq!(a, b);
        }
        // frozen first draws guard against silent generator changes
        let t = sample_trajectory(Protocol::Nonadaptive, 8, 2024, Some(0.3), None).unwrap();
        assert_eq!(t.outcomes().len(), 8);
    }

    #[test]
    fn adaptive_needs_a_deep_enough_table() {
        let table = build_feedback_table(3).unwrap();
        let err = sample_trajectory(Protocol::Adaptive, 4, 1, None, Some(&table)).unwrap_err();
        assert_eq!(err, Error::MissingTable { have: 3, need: 4 });
        assert!(sample_trajectory(Protocol::Adaptive, 4, 1, None, None).is_err());
        assert!(enumerate_outcomes(Protocol::Adaptive, 4, Some(&table)).is_err());
    }

    #[test]
    fn enumeration_basics() {
        let table = build_feedback_table(4).unwrap();
        for protocol in [Protocol::Nonadaptive, Protocol::Adaptive, Protocol::Standard] {
            if protocol != Protocol::Nonadaptive {
                let one = enumerate_outcomes(protocol, 1, Some(&table)).unwrap();
                assert_eq!(one.len(), 2);
                assert_abs_diff_eq!(one[0].probability, 0.5);
                assert_abs_diff_eq!(one[1].probability, 0.5);
            }
            let all = enumerate_outcomes(protocol, 4, Some(&table)).unwrap();
            assert_eq!(all.len(), 16);
            let total: f64 = all.iter().map(|o| o.probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for o in &all {
                assert_abs_diff_eq!(o.probability, o.posterior.coeff(0).re, epsilon = 1e-15);
            }
        }
        let adaptive = enumerate_outcomes(Protocol::Adaptive, 4, Some(&table)).unwrap();
        let mut thetas: Vec<f64> = adaptive.iter().map(|o| o.theta_hat).collect();
        thetas.sort_by(|a, b| a.total_cmp(b));
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(thetas.len(), 16);
        assert!(enumerate_outcomes(Protocol::Adaptive, 17, None).is_err());
        assert!(enumerate_outcomes(Protocol::Standard, 13, None).is_err());
    }

    #[test]
    fn nonadaptive_classes() {
        let classes = enumerate_nonadaptive_classes(4).unwrap();
        assert_eq!(classes.len(), 9);
        let total: f64 = classes.iter().map(|c| c.probability).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let all = enumerate_outcomes(Protocol::Nonadaptive, 4, None).unwrap();
        for c in &classes {
            let members: Vec<&OutcomeRecord> = all
                .iter()
                .filter(|o| {
                    let x = o.outcomes();
                    x[..2].iter().filter(|&&b| b == 1).count() == c.ones_first
                        && x[2..].iter().filter(|&&b| b == 1).count() == c.ones_second
                })
                .collect();
            assert_eq!(members.len() as f64, c.multiplicity);
            let p: f64 = members.iter().map(|o| o.probability).sum();
            assert_abs_diff_eq!(p, c.probability, epsilon = 1e-15);
            for o in members {
                for (a, b) in o.posterior.coeffs().iter().zip(c.posterior.coeffs()) {
                    assert!((a - b).norm() < 1e-14);
                }
            }
        }
        let big = enumerate_nonadaptive_classes(40).unwrap();
        assert_eq!(big.len(), 21 * 21);
        assert_abs_diff_eq!(big.iter().map(|c| c.probability).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(enumerate_nonadaptive_classes(3).is_err());
    }

    #[test]
    fn sampled_frequencies_match_enumeration() {
        let table = build_feedback_table(3).unwrap();
        let exact = enumerate_outcomes(Protocol::Adaptive, 3, Some(&table)).unwrap();
        let n = 200_000;
        let mut counts = [0usize; 8];
        let mut rng = seeded(9);
        for _ in 0..n {
            let t = sample_trajectory_with(Protocol::Adaptive, 3, &mut rng, None, Some(&table)).unwrap();
            let v = t.outcomes().iter().fold(0, |acc, &b| (acc << 1) | b as usize);
            counts[v] += 1;
        }
        for (o, &c) in exact.iter().zip(&counts) {
            let p = o.probability;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() <= 4.0 * sigma, "{:?}", o.outcomes());
        }
    }
}
