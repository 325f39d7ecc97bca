//! Bayesian posterior over the stabilizer eigenphase θ.
//!
//! The density is kept as a finite Fourier series `f(θ) = Σ_k c_k e^{ikθ}`
//! over `k ∈ [−K, K]`. A round with multiplier `m`, feedback phase `φ` and
//! outcome `x` multiplies `f` by `(1 + (−1)^x cos(mθ + φ))/2`, which only
//! shifts coefficients by `±m`, so every update is exact.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::circular::wrap_angle;
use crate::error::{domain, Error, Result};

/// Grid size for the nonnegativity self-check.
pub const NONNEGATIVITY_GRID: usize = 4096;

/// Angular halfwidth matching a `√π/6` shift in the phase picture.
pub const ERROR_HALFWIDTH: f64 = PI / 3.0;

/// Unnormalized posterior density as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePosterior {
    /// `c_k` stored at index `k + bandwidth`
    coeffs: Vec<Complex64>,
    bandwidth: usize,
}

impl PhasePosterior {
    /// Flat density, `c_0 = 1`.
    pub fn flat() -> Self {
        Self {
            coeffs: vec![Complex64::new(1.0, 0.0)],
            bandwidth: 0,
        }
    }

    /// Posterior from coefficients `c_{−K}..=c_K` (length `2K + 1`).
    ///
    /// Used to chain a previously computed posterior into a new run.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return domain("coefficient vector must have odd length 2K + 1");
        }
        let bandwidth = coeffs.len() / 2;
        let post = Self { coeffs, bandwidth };
        let c0 = post.coeff(0);
        if !(c0.re > 0.0 && c0.re.is_finite()) {
            return domain("zeroth coefficient must be positive");
        }
        for k in 1..=bandwidth as i64 {
            let d = post.coeff(-k) - post.coeff(k).conj();
            if d.norm() > 1e-14 * c0.re.max(1.0) {
                return domain(format!("coefficients are not Hermitian at k = {k}"));
            }
        }
        Ok(post)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `c_k`, zero outside the stored band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.bandwidth as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// All coefficients from `c_{−K}` to `c_K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `∫_{−π}^{π} f dθ = 2π c_0`.
    pub fn total_mass(&self) -> f64 {
        2.0 * PI * self.coeff(0).re
    }

    /// Unnormalized density `f(θ)`.
    pub fn density(&self, theta: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        for k in 1..=self.bandwidth as i64 {
            // c_k e^{ikθ} + c_{−k} e^{−ikθ} = 2 Re(c_k e^{ikθ})
            acc += 2.0 * (self.coeff(k) * Complex64::from_polar(1.0, k as f64 * theta)).re;
        }
        acc
    }

    /// Minimum of `f/c_0` on an `n`-point grid over (−π, π].
    pub fn min_normalized_density(&self, n: usize) -> f64 {
        let c0 = self.coeff(0).re;
        (0..n)
            .map(|i| self.density(-PI + 2.0 * PI * (i as f64 + 1.0) / n as f64) / c0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Conditions on one more round.
    pub fn update(&self, outcome: u8, phi: f64, m: usize) -> Result<Self> {
        check_round(outcome, m)?;
        let sign = if outcome == 0 { 0.25 } else { -0.25 };
        let k_new = self.bandwidth + m;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_new + 1];
        let up = Complex64::from_polar(sign, phi);
        let down = up.conj();
        let mi = m as i64;
        for k in -(k_new as i64)..=k_new as i64 {
            coeffs[(k + k_new as i64) as usize] =
                self.coeff(k) * 0.5 + up * self.coeff(k - mi) + down * self.coeff(k + mi);
        }
        // restore exact Hermitian symmetry against rounding
        let c0 = &mut coeffs[k_new];
        *c0 = Complex64::new(c0.re, 0.0);
        Ok(Self {
            coeffs,
            bandwidth: k_new,
        })
    }

    /// Predictive outcome probabilities `(p0, p1)` for the next round.
    pub fn outcome_probability(&self, phi: f64, m: usize) -> Result<(f64, f64)> {
        check_round(0, m)?;
        let c0 = self.coeff(0).re;
        let mi = m as i64;
        // c′_0(x) = c_0/2 + (−1)^x/2 · Re(e^{iφ} c_{−m})
        let t = 0.5 * (Complex64::from_polar(1.0, phi) * self.coeff(-mi)).re;
        let p0 = ((0.5 * c0 + t) / c0).clamp(0.0, 1.0);
        Ok((p0, 1.0 - p0))
    }

    /// `|⟨e^{iθ}⟩| = |c_{−1}|/c_0`.
    pub fn sharpness(&self) -> f64 {
        self.coeff(-1).norm() / self.coeff(0).re
    }

    /// `S^{−2} − 1`; infinite for a flat posterior.
    pub fn holevo_variance(&self) -> f64 {
        let s = self.sharpness();
        if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (s * s) - 1.0
        }
    }

    /// Circular mean `arg ∫e^{iθ} f dθ = arg c_{−1}`, in (−π, π].
    pub fn estimate_theta(&self) -> Result<f64> {
        let c = self.coeff(-1);
        if c.norm() < 1e-300 {
            return Err(Error::Degenerate("posterior has no first moment".into()));
        }
        Ok(wrap_angle(c.arg()))
    }

    /// Normalized mass within circular distance `halfwidth` of `center`.
    pub fn interval_mass(&self, center: f64, halfwidth: f64) -> Result<f64> {
        if !(halfwidth > 0.0 && halfwidth <= PI) {
            return domain(format!("halfwidth {halfwidth} must lie in (0, π]"));
        }
        let a = center - halfwidth;
        let b = center + halfwidth;
        // antiderivative of a periodic series, so no wrap splitting is needed
        let mut acc = self.coeff(0).re * (b - a);
        for k in 1..=self.bandwidth as i64 {
            let kf = k as f64;
            let diff = Complex64::from_polar(1.0, kf * b) - Complex64::from_polar(1.0, kf * a);
            acc += 2.0 * (self.coeff(k) * diff / Complex64::new(0.0, kf)).re;
        }
        Ok((acc / self.total_mass()).clamp(0.0, 1.0))
    }

    /// Probability that the true phase lies more than π/3 from `theta_hat`.
    pub fn error_rate(&self, theta_hat: f64) -> f64 {
        1.0 - self
            .interval_mass(theta_hat, ERROR_HALFWIDTH)
            .expect("π/3 is a valid halfwidth")
    }

    /// Writes `k,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,re,im")?;
        for k in -(self.bandwidth as i64)..=self.bandwidth as i64 {
            let c = self.coeff(k);
            writeln!(w, "{k},{:.16e},{:.16e}", c.re, c.im)?;
        }
        Ok(())
    }
}

impl Default for PhasePosterior {
    fn default() -> Self {
        Self::flat()
    }
}

fn check_round(outcome: u8, m: usize) -> Result<()> {
    if m < 1 {
        return domain("round multiplier must be at least 1");
    }
    if outcome > 1 {
        return domain(format!("outcome {outcome} is not a bit"));
    }
    Ok(())
}

/// Free-function form of [`PhasePosterior::error_rate`].
pub fn error_rate_from_posterior(post: &PhasePosterior, theta_hat: f64) -> f64 {
    post.error_rate(theta_hat)
}
