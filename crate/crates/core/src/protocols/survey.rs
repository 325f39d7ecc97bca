//! Monte-Carlo and exact surveys over many runs.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::circular::circular_distance;
use crate::error::{domain, Result};
use crate::rng::stream;

use super::feedback::FeedbackTable;
use super::sampling::{enumerate_outcomes, sample_trajectory_with};
use super::schedule::estimate_theta_simple;
use super::Protocol;

/// Samples per parallel chunk; chunk `i` draws from stream `i` of the seed.
pub const CHUNK: usize = 4096;

/// Number of ε steps between 0 and π.
pub const SURVEY_STEPS: usize = 180;

/// Errors at or above this land in the histogram overflow bin.
pub const HISTOGRAM_CEILING: f64 = 0.1;

/// Survival curve `P(δθ > ε)` over ε = kπ/180, k = 0..=180.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyCurve {
    pub epsilon: Vec<f64>,
    pub survival: Vec<f64>,
    /// Sorted circular deviations `|θ̃ − θ|`.
    deviations: Vec<f64>,
}

impl SurveyCurve {
    fn from_deviations(mut deviations: Vec<f64>) -> Self {
        deviations.sort_by(|a, b| a.total_cmp(b));
        let mut curve = Self {
            epsilon: Vec::with_capacity(SURVEY_STEPS + 1),
            survival: Vec::with_capacity(SURVEY_STEPS + 1),
            deviations,
        };
        for k in 0..=SURVEY_STEPS {
            let eps = PI * k as f64 / SURVEY_STEPS as f64;
            curve.epsilon.push(eps);
            curve.survival.push(curve.survival_at(eps));
        }
        curve
    }

    pub fn samples(&self) -> usize {
        self.deviations.len()
    }

    /// Fraction of runs with deviation strictly above `eps`.
    pub fn survival_at(&self, eps: f64) -> f64 {
        let n = self.deviations.len();
        let below = self.deviations.partition_point(|&d| d <= eps);
        (n - below) as f64 / n as f64
    }
}

fn sample_deviations<F>(n_samples: usize, seed: u64, per_sample: F) -> Result<Vec<f64>>
where
    F: Fn(&mut crate::rng::SimRng, f64) -> Result<f64> + Sync,
{
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let count = CHUNK.min(n_samples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let theta = PI - 2.0 * PI * rng.random::<f64>();
                    per_sample(&mut rng, theta)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n_samples);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Draws θ uniformly in (−π, π], runs the protocol against it and records
/// the circular deviation of the estimate.
pub fn deviation_survey(
    protocol: Protocol,
    m: usize,
    n_samples: usize,
    seed: u64,
    table: Option<&FeedbackTable>,
) -> Result<SurveyCurve> {
    if n_samples == 0 {
        return domain("survey needs at least one sample");
    }
    // surface configuration errors before spawning work
    sample_trajectory_with(protocol, m, &mut stream(seed, u64::MAX), Some(0.0), table)?;
    let devs = sample_deviations(n_samples, seed, |rng, theta| {
        let t = sample_trajectory_with(protocol, m, rng, Some(theta), table)?;
        Ok(circular_distance(t.theta_hat, theta))
    })?;
    Ok(SurveyCurve::from_deviations(devs))
}

/// `4·exp(−3f/16)`.
pub fn chernoff_bound(f: f64) -> f64 {
    4.0 * (-3.0 * f / 16.0).exp()
}

/// Empirical `P(δθ ≥ (π/3)√(f/M))` of the nonadaptive protocol with the
/// simple estimator, next to the bound `4e^{−3f/16}`.
///
/// Runs whose block averages are both exactly 1/2 have no estimate and are
/// counted as failures.
pub fn chernoff_check(m: usize, n_samples: usize, f: f64, seed: u64) -> Result<(f64, f64)> {
    if !(f > 0.0 && f <= m as f64) {
        return domain(format!("Chernoff parameter f = {f} must lie in (0, M]"));
    }
    if n_samples == 0 {
        return domain("Chernoff check needs at least one sample");
    }
    let threshold = PI / 3.0 * (f / m as f64).sqrt();
    sample_trajectory_with(Protocol::Nonadaptive, m, &mut stream(seed, u64::MAX), Some(0.0), None)?;
    let devs = sample_deviations(n_samples, seed, |rng, theta| {
        let t = sample_trajectory_with(Protocol::Nonadaptive, m, rng, Some(theta), None)?;
        Ok(match estimate_theta_simple(&t) {
            Ok(est) => circular_distance(est, theta),
            Err(_) => PI,
        })
    })?;
    let fails = devs.iter().filter(|&&d| d >= threshold).count();
    Ok((fails as f64 / n_samples as f64, chernoff_bound(f)))
}

/// Exact distribution of the post-correction shift error rate over outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorHistogram {
    pub bin_width: f64,
    /// Probability in `[i·w, (i+1)·w)`, covering `[0, 0.1)`.
    pub bins: Vec<f64>,
    /// Probability with error rate ≥ 0.1.
    pub overflow: f64,
    /// `(error rate, probability)` per outcome history.
    pub entries: Vec<(f64, f64)>,
}

impl ErrorHistogram {
    /// Probability that the error rate is strictly below `threshold`.
    pub fn mass_below(&self, threshold: f64) -> f64 {
        self.entries.iter().filter(|e| e.0 < threshold).map(|e| e.1).sum()
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum::<f64>() + self.overflow
    }
}

/// Enumerates every outcome, corrects by its estimate and bins
/// `1 − mass(θ̃ ± π/3)` weighted by the outcome probability.
pub fn error_histogram(
    protocol: Protocol,
    m: usize,
    bin_width: f64,
    table: Option<&FeedbackTable>,
) -> Result<ErrorHistogram> {
    if !(bin_width > 0.0 && bin_width <= HISTOGRAM_CEILING) {
        return domain(format!("bin width {bin_width} must lie in (0, {HISTOGRAM_CEILING}]"));
    }
    let outcomes = enumerate_outcomes(protocol, m, table)?;
    let n_bins = ((HISTOGRAM_CEILING / bin_width) - 1e-9).ceil() as usize;
    let mut bins = vec![0.0; n_bins];
    let mut overflow = 0.0;
    let mut entries = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let err = o.posterior.error_rate(o.theta_hat);
        let i = (err / bin_width).floor() as usize;
        if err >= HISTOGRAM_CEILING || i >= n_bins {
            overflow += o.probability;
        } else {
            bins[i] += o.probability;
        }
        entries.push((err, o.probability));
    }
    Ok(ErrorHistogram {
        bin_width,
        bins,
        overflow,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::build_feedback_table;
    use approx::assert_abs_diff_eq;

    #[test]
    fn survey_shape_and_determinism() {
        let a = deviation_survey(Protocol::Nonadaptive, 4, 5000, 3, None).unwrap();
        let b = deviation_survey(Protocol::Nonadaptive, 4, 5000, 3, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epsilon.len(), SURVEY_STEPS + 1);
        assert_eq!(*a.survival.last().unwrap(), 0.0);
        assert!(a.survival.windows(2).all(|w| w[1] <= w[0]));
        assert!(deviation_survey(Protocol::Nonadaptive, 4, 0, 3, None).is_err());
        assert!(deviation_survey(Protocol::Adaptive, 4, 10, 3, None).is_err());
    }

    #[test]
    fn bounds() {
        assert_abs_diff_eq!(chernoff_bound(8.0), 0.892521, epsilon = 1e-6);
        assert_abs_diff_eq!(chernoff_bound(32.0), 9.915e-3, epsilon = 1e-6);
        assert!(chernoff_check(8, 10, 9.0, 1).is_err());
        let (emp, bound) = chernoff_check(8, 20_000, 8.0, 1).unwrap();
        assert!(emp <= bound);
    }

    #[test]
    fn histogram_basics() {
        let h0 = error_histogram(Protocol::Nonadaptive, 0, 0.002, None).unwrap();
        assert_eq!(h0.bins.len(), 50);
        assert_eq!(h0.overflow, 1.0);
        assert_abs_diff_eq!(h0.entries[0].0, 2.0 / 3.0, epsilon = 1e-15);

        let table = build_feedback_table(6).unwrap();
        let h = error_histogram(Protocol::Adaptive, 6, 0.002, Some(&table)).unwrap();
        assert_abs_diff_eq!(h.total(), 1.0, epsilon = 1e-12);
        assert!(error_histogram(Protocol::Adaptive, 6, 0.0, Some(&table)).is_err());
    }
}
