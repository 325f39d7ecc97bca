//! Oscillator states built from displaced squeezed Gaussians on a line.
//!
//! Conventions: quadratures `q = (a + a†)/√2`, `p = i(a† − a)/√2`; a
//! displacement amplitude `α` moves the q-quadrature by `√2·Re α`. Lattice
//! spacings are given in amplitude units (`√(2π)` for `S_p` rounds), peak
//! positions in quadrature units.
//!
//! Every state is normalized with exact Gaussian overlaps. The paper-style
//! orthogonal-peak figures (`N = Σ|c_j|²`) are kept alongside for comparison.
//! For Δ = 0.2 the overlap of neighbouring `S_p` peaks is `exp(−π/Δ²) ≈ 8e−35`,
//! far below the `O(1e−13)` sometimes quoted for it; the quadrature-checked
//! closed form is what the code uses.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::quadrature::{integrate_resolved, DEFAULT_TOL};

/// Half-width of the integration window around the outermost peaks, in units
/// of the peak width Δ.
pub const WINDOW_WIDTHS: f64 = 8.0;

/// Envelope weights below this are dropped from codeword lattices.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Which quadrature a squeezed state or a marginal refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Q,
    P,
}

/// Squeezed vacuum with parameter Δ = e^{−r}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedVacuum {
    delta: f64,
    quadrature: Quadrature,
}

impl SqueezedVacuum {
    pub fn new(delta: f64, quadrature: Quadrature) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return domain(format!("squeezing parameter Δ = {delta} must lie in (0, 1]"));
        }
        Ok(Self { delta, quadrature })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    /// `⟨sq.vac| T_d |sq.vac⟩` for a pure position translation by `d`.
    ///
    /// Real by construction: for a q-squeezed state this is `exp(−d²/(4Δ²))`,
    /// for a p-squeezed state (q-variance `1/(2Δ²)`) it is `exp(−d²Δ²/4)`.
    pub fn overlap_displaced(&self, d: f64) -> Complex64 {
        let v = match self.quadrature {
            Quadrature::Q => (-d * d / (4.0 * self.delta * self.delta)).exp(),
            Quadrature::P => (-d * d * self.delta * self.delta / 4.0).exp(),
        };
        Complex64::new(v, 0.0)
    }

    /// The q-squeezed vacuum as a single-peak lattice state.
    pub fn to_lattice(&self) -> Result<LatticeSuperposition> {
        if self.quadrature != Quadrature::Q {
            return Err(crate::Error::Unsupported(
                "lattice states are built from q-squeezed peaks".into(),
            ));
        }
        LatticeSuperposition::new(self.delta, (2.0 * PI).sqrt(), vec![Complex64::new(1.0, 0.0)], 0.0)
    }
}

/// Free-function form of [`SqueezedVacuum::overlap_displaced`].
pub fn overlap_displaced(state: &SqueezedVacuum, d: f64) -> Complex64 {
    state.overlap_displaced(d)
}

/// Complex-weighted displaced squeezed Gaussians on a 1-D lattice with a
/// residual shift `e^{−iu·p} e^{−iv·q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSuperposition {
    delta: f64,
    spacing: f64,
    weights: Vec<Complex64>,
    center_offset: f64,
    shift_u: f64,
    shift_v: f64,
    /// 1/√(exact squared norm of the raw weights)
    scale: f64,
}

impl LatticeSuperposition {
    /// Peaks sit at `q_j = √2·spacing·(j + center_offset)`.
    pub fn new(delta: f64, spacing: f64, weights: Vec<Complex64>, center_offset: f64) -> Result<Self> {
        Self::with_shifts(delta, spacing, weights, center_offset, 0.0, 0.0)
    }

    pub fn with_shifts(
        delta: f64,
        spacing: f64,
        weights: Vec<Complex64>,
        center_offset: f64,
        shift_u: f64,
        shift_v: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return domain(format!("peak width Δ = {delta} must lie in (0, 1]"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return domain(format!("lattice spacing {spacing} must be positive"));
        }
        if !center_offset.is_finite() || !shift_u.is_finite() || !shift_v.is_finite() {
            return domain("offsets and shifts must be finite");
        }
        if weights.iter().all(|w| w.norm() == 0.0) {
            return domain("at least one lattice weight must be nonzero");
        }
        if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return domain("lattice weights must be finite");
        }
        let mut state = Self {
            delta,
            spacing,
            weights,
            center_offset,
            shift_u,
            shift_v,
            scale: 1.0,
        };
        let n2 = state.raw_norm_sq_exact();
        if !(n2.is_finite() && n2 > 0.0) {
            return domain("state norm is not finite and positive");
        }
        state.scale = 1.0 / n2.sqrt();
        Ok(state)
    }

    /// Same lattice with the residual shifts replaced.
    pub fn shifted(&self, shift_u: f64, shift_v: f64) -> Result<Self> {
        Self::with_shifts(
            self.delta,
            self.spacing,
            self.weights.clone(),
            self.center_offset,
            shift_u,
            shift_v,
        )
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Raw (unnormalized) weights as supplied.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn shift_u(&self) -> f64 {
        self.shift_u
    }

    pub fn shift_v(&self) -> f64 {
        self.shift_v
    }

    pub fn peak_position(&self, j: usize) -> f64 {
        SQRT_2 * self.spacing * (j as f64 + self.center_offset) + self.shift_u
    }

    pub fn peak_positions(&self) -> Vec<f64> {
        (0..self.weights.len()).map(|j| self.peak_position(j)).collect()
    }

    /// Orthogonal-peak norm `Σ|c_j|²` of the raw weights.
    pub fn norm_sq_orthogonal(&self) -> f64 {
        self.weights.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Exact squared norm of the raw weights, `Σ c̄_j c_l ⟨g_j|g_l⟩`.
    pub fn raw_norm_sq_exact(&self) -> f64 {
        let q = self.peak_positions();
        let mut s = 0.0;
        for (j, cj) in self.weights.iter().enumerate() {
            for (l, cl) in self.weights.iter().enumerate() {
                let d = q[j] - q[l];
                s += (cj.conj() * cl).re * gaussian_overlap(self.delta, d);
            }
        }
        s
    }

    /// Normalized weights.
    fn normalized(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.weights.iter().map(move |c| c * self.scale)
    }

    fn q_extent(&self) -> (f64, f64) {
        let q = self.peak_positions();
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Integration window for the q marginal.
    pub fn q_window(&self) -> (f64, f64) {
        let (lo, hi) = self.q_extent();
        (lo - WINDOW_WIDTHS * self.delta, hi + WINDOW_WIDTHS * self.delta)
    }

    /// Integration window for the p marginal (the per-peak envelope has
    /// width 1/Δ and is centred at −v).
    pub fn p_window(&self) -> (f64, f64) {
        let half = WINDOW_WIDTHS / self.delta;
        (-self.shift_v - half, -self.shift_v + half)
    }

    /// Narrowest feature of the p marginal, set by the lattice extent.
    fn p_feature(&self) -> f64 {
        let (lo, hi) = self.q_extent();
        (PI / (4.0 * (hi - lo + 4.0 * self.delta))).min(self.delta / 4.0)
    }

    /// Position-space amplitude.
    pub fn wavefunction_q(&self, q: f64) -> Complex64 {
        let norm = (PI * self.delta * self.delta).powf(-0.25);
        let inv = 1.0 / (2.0 * self.delta * self.delta);
        let mut amp = Complex64::new(0.0, 0.0);
        for (j, c) in self.normalized().enumerate() {
            let d = q - self.peak_position(j);
            let e = d * d * inv;
            if e < 745.0 {
                amp += c * (-e).exp();
            }
        }
        amp * norm * Complex64::from_polar(1.0, -self.shift_v * q)
    }

    /// Momentum-space amplitude, `(2π)^{−1/2}∫e^{−ipq}Ψ(q)dq` in closed form.
    pub fn wavefunction_p(&self, p: f64) -> Complex64 {
        let k = p + self.shift_v;
        let env = (self.delta * self.delta / PI).powf(0.25) * (-0.5 * k * k * self.delta * self.delta).exp();
        if env == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (j, c) in self.normalized().enumerate() {
            sum += c * Complex64::from_polar(1.0, -k * self.peak_position(j));
        }
        sum * env
    }

    pub fn density(&self, quadrature: Quadrature, x: f64) -> f64 {
        match quadrature {
            Quadrature::Q => self.wavefunction_q(x).norm_sqr(),
            Quadrature::P => self.wavefunction_p(x).norm_sqr(),
        }
    }

    /// `∫|Ψ|²` of one marginal by adaptive quadrature over its window.
    pub fn marginal_mass(&self, quadrature: Quadrature) -> f64 {
        let (lo, hi) = self.window(quadrature);
        integrate_resolved(|x| self.density(quadrature, x), lo, hi, self.feature(quadrature), DEFAULT_TOL)
    }

    fn window(&self, quadrature: Quadrature) -> (f64, f64) {
        match quadrature {
            Quadrature::Q => self.q_window(),
            Quadrature::P => self.p_window(),
        }
    }

    fn feature(&self, quadrature: Quadrature) -> f64 {
        match quadrature {
            Quadrature::Q => self.delta / 4.0,
            Quadrature::P => self.p_feature(),
        }
    }

    /// Wigner function `W(p, q) = (1/π)∫e^{2ipx}Ψ*(q+x)Ψ(q−x)dx`, in closed form.
    ///
    /// Each peak pair contributes a Gaussian bump at the pair midpoint:
    /// `(1/π)·e^{−k²Δ²}·c̄_j c_l·exp(−(2q − q_j − q_l)²/(4Δ²))·e^{ik(q_j − q_l)}`
    /// with `k = p + shift_v`.
    pub fn wigner(&self, p: f64, q: f64) -> f64 {
        let k = p + self.shift_v;
        let env = (-k * k * self.delta * self.delta).exp();
        if env == 0.0 {
            return 0.0;
        }
        let inv = 1.0 / (4.0 * self.delta * self.delta);
        let peaks = self.peak_positions();
        let c: Vec<Complex64> = self.normalized().collect();
        let mut acc = 0.0;
        for (j, &qj) in peaks.iter().enumerate() {
            for (l, &ql) in peaks.iter().enumerate() {
                let s = 2.0 * q - qj - ql;
                let e = s * s * inv;
                if e > 745.0 {
                    continue;
                }
                acc += (c[j].conj() * c[l] * Complex64::from_polar((-e).exp(), k * (qj - ql))).re;
            }
        }
        acc * env / PI
    }

    /// The Wigner integral evaluated by adaptive quadrature.
    ///
    /// The integrand is a sum of bumps of width `Δ/√2` centred at
    /// `x = (q_j − q_l)/2`, one per peak pair whose midpoint is near `q`;
    /// only those intervals are integrated. Much slower than [`Self::wigner`],
    /// kept as an independent check of it.
    pub fn wigner_quadrature(&self, p: f64, q: f64) -> f64 {
        self.wigner_complex(p, q).re
    }

    /// Wigner integral before discarding the (vanishing) imaginary part.
    pub fn wigner_complex(&self, p: f64, q: f64) -> Complex64 {
        let peaks = self.peak_positions();
        let reach = 2.0 * WINDOW_WIDTHS * self.delta;
        let mut centers: Vec<f64> = Vec::new();
        for &qj in &peaks {
            for &ql in &peaks {
                if (2.0 * q - qj - ql).abs() < reach {
                    centers.push(0.5 * (qj - ql));
                }
            }
        }
        if centers.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        centers.sort_by(|a, b| a.total_cmp(b));
        let half = WINDOW_WIDTHS * self.delta;
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for c in centers {
            match intervals.last_mut() {
                Some(last) if c - half <= last.1 => last.1 = last.1.max(c + half),
                _ => intervals.push((c - half, c + half)),
            }
        }
        let feature = (self.delta / 4.0).min(PI / (4.0 * p.abs() + 1e-300));
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in intervals {
            let re = integrate_resolved(
                |x| self.wigner_integrand(p, q, x).re,
                a,
                b,
                feature,
                DEFAULT_TOL,
            );
            let im = integrate_resolved(
                |x| self.wigner_integrand(p, q, x).im,
                a,
                b,
                feature,
                DEFAULT_TOL,
            );
            acc += Complex64::new(re, im);
        }
        acc / PI
    }

    fn wigner_integrand(&self, p: f64, q: f64, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * p * x) * self.wavefunction_q(q + x).conj() * self.wavefunction_q(q - x)
    }

    /// Mass of a marginal that folds (modulo `period`, into the centred cell
    /// `(−period/2, period/2]`) outside `±cutoff`.
    pub fn folded_tail_mass(&self, quadrature: Quadrature, period: f64, cutoff: f64) -> Result<f64> {
        if !(cutoff > 0.0 && cutoff <= 0.5 * period) {
            return domain(format!("cutoff {cutoff} must lie in (0, {}]", 0.5 * period));
        }
        let (lo, hi) = self.window(quadrature);
        let feature = self.feature(quadrature);
        let first = ((lo + cutoff) / period).floor() as i64 - 1;
        let last = ((hi - cutoff) / period).ceil() as i64 + 1;
        let mut outside = 0.0;
        for n in first..=last {
            // gap between the cutoff windows around n·P and (n+1)·P
            let a = (n as f64 * period + cutoff).max(lo);
            let b = ((n + 1) as f64 * period - cutoff).min(hi);
            if b > a {
                outside += integrate_resolved(|x| self.density(quadrature, x), a, b, feature, DEFAULT_TOL);
            }
        }
        Ok(outside.clamp(0.0, 1.0))
    }

    /// Exact `⟨a†a⟩` from Gaussian matrix elements.
    pub fn photon_mean_exact(&self) -> f64 {
        let m = self.moments();
        0.5 * (m.q2 + m.p2 - 1.0)
    }

    fn moments(&self) -> Moments {
        let d2 = self.delta * self.delta;
        let q = self.peak_positions();
        let c: Vec<Complex64> = self.normalized().collect();
        let mut norm = 0.0;
        let mut q2 = 0.0;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for j in 0..c.len() {
            for l in 0..c.len() {
                let diff = q[j] - q[l];
                let s = gaussian_overlap(self.delta, diff);
                if s == 0.0 {
                    continue;
                }
                let w = c[j].conj() * c[l];
                let mid = 0.5 * (q[j] + q[l]);
                norm += w.re * s;
                q2 += w.re * s * (mid * mid + 0.5 * d2);
                // ⟨g_j|p|g_l⟩ = i·S·(q_j − q_l)/(2Δ²)
                p1 += (w * Complex64::new(0.0, s * diff / (2.0 * d2))).re;
                p2 += w.re * s * (0.5 * d2 - 0.25 * diff * diff) / (d2 * d2);
            }
        }
        let v = self.shift_v;
        Moments {
            q2: q2 / norm,
            p2: (p2 - 2.0 * v * p1 + v * v * norm) / norm,
        }
    }

    /// Photon-number variance, `⟨n²⟩ − ⟨n⟩²`, with `⟨n²⟩ = ‖n̂Ψ‖²` integrated
    /// in position space (`n̂ = (q² − ∂²_q − 1)/2`).
    pub fn photon_variance(&self) -> f64 {
        let mean = self.photon_mean_exact();
        let (lo, hi) = self.q_window();
        // the q² factor pushes support outward slightly
        let (lo, hi) = (lo - 2.0 * self.delta, hi + 2.0 * self.delta);
        let n2 = integrate_resolved(|x| self.number_applied(x).norm_sqr(), lo, hi, self.delta / 4.0, 1e-9);
        n2 - mean * mean
    }

    fn number_applied(&self, q: f64) -> Complex64 {
        let d2 = self.delta * self.delta;
        let norm = (PI * d2).powf(-0.25);
        let v = self.shift_v;
        let mut chi = Complex64::new(0.0, 0.0);
        let mut dchi = Complex64::new(0.0, 0.0);
        let mut ddchi = Complex64::new(0.0, 0.0);
        for (j, c) in self.normalized().enumerate() {
            let d = q - self.peak_position(j);
            let g = (-d * d / (2.0 * d2)).exp() * norm;
            chi += c * g;
            dchi += c * (-d / d2 * g);
            ddchi += c * ((d * d / (d2 * d2) - 1.0 / d2) * g);
        }
        // Ψ = e^{−ivq}χ, Ψ'' = e^{−ivq}(χ'' − 2ivχ' − v²χ)
        let psi2 = ddchi - Complex64::new(0.0, 2.0 * v) * dchi - chi * (v * v);
        let n_psi = (chi * (q * q) - psi2 - chi) * 0.5;
        n_psi * Complex64::from_polar(1.0, -v * q)
    }
}

struct Moments {
    q2: f64,
    p2: f64,
}

/// `⟨g_a|g_b⟩ = exp(−(a−b)²/(4Δ²))` for unit-normalized peaks of width Δ.
pub fn gaussian_overlap(delta: f64, separation: f64) -> f64 {
    (-separation * separation / (4.0 * delta * delta)).exp()
}

fn codeword_half_count(delta: f64) -> usize {
    // first dropped envelope exponent π Δ² s²/2 must exceed ln(1/floor), s = 2(T+1)
    let s_min = (2.0 * (1.0 / ENVELOPE_FLOOR).ln() / (PI * delta * delta)).sqrt();
    ((s_min / 2.0).ceil() as usize).saturating_sub(1).max(1)
}

/// Approximate GKP codeword `|0⟩` or `|1⟩`: peaks at `q = s√π` (s even for
/// bit 0, odd for bit 1) weighted by the envelope `exp(−πΔ²s²/2)`.
///
/// `envelope_count` is the number of peaks kept on each side of the centre;
/// `None` picks the smallest count whose first dropped weight is below
/// [`ENVELOPE_FLOOR`].
pub fn approx_codeword(delta: f64, bit: u8, envelope_count: Option<usize>) -> Result<LatticeSuperposition> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("codeword Δ = {delta} must lie in (0, 1)"));
    }
    if bit > 1 {
        return domain(format!("logical bit {bit} must be 0 or 1"));
    }
    let half = match envelope_count {
        None => codeword_half_count(delta),
        Some(t) => {
            let first_dropped = if bit == 0 { 2 * t + 2 } else { 2 * t + 3 } as f64;
            let w = (-PI * delta * delta * first_dropped * first_dropped / 2.0).exp();
            if w >= ENVELOPE_FLOOR {
                return domain(format!(
                    "envelope count {t} truncates a weight of {w:.3e} (must be < {ENVELOPE_FLOOR:e})"
                ));
            }
            t
        }
    };
    let (count, offset) = if bit == 0 {
        (2 * half + 1, -(half as f64))
    } else {
        (2 * half + 2, -(half as f64) - 0.5)
    };
    let weights = (0..count)
        .map(|j| {
            let s = 2.0 * (j as f64 + offset);
            Complex64::new((-PI * delta * delta * s * s / 2.0).exp(), 0.0)
        })
        .collect();
    LatticeSuperposition::new(delta, (2.0 * PI).sqrt(), weights, offset)
}

/// Effective shift error rate of one marginal: mass folded modulo √π that
/// lands outside `±cutoff`, `cutoff ∈ (0, √π/2]`.
pub fn codeword_shift_error_rate(state: &LatticeSuperposition, quadrature: Quadrature, cutoff: f64) -> Result<f64> {
    let period = PI.sqrt();
    if !(cutoff > 0.0 && cutoff <= 0.5 * period) {
        return domain(format!("cutoff {cutoff} must lie in (0, √π/2]"));
    }
    state.folded_tail_mass(quadrature, period, cutoff)
}

/// Logical misidentification rate: mass folded modulo the 2√π codeword period
/// that lies at least √π/2 from the nearest codeword peak.
pub fn logical_error_rate(state: &LatticeSuperposition, quadrature: Quadrature) -> Result<f64> {
    let period = 2.0 * PI.sqrt();
    state.folded_tail_mass(quadrature, period, 0.5 * PI.sqrt())
}

/// Mean photon number in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonStats {
    /// `sinh²(ln Δ) + Σ_j |(j + offset)·spacing·c_j|² / Σ_j|c_j|²`.
    pub mean: f64,
    /// Exact-overlap mean minus `mean`.
    pub overlap_correction: f64,
}

impl PhotonStats {
    pub fn exact(&self) -> f64 {
        self.mean + self.overlap_correction
    }
}

/// Photon statistics of a lattice state.
///
/// The orthogonal-peak mean ignores residual shifts; the exact value includes
/// them.
pub fn photon_stats(state: &LatticeSuperposition) -> PhotonStats {
    let sq = 0.5 * (1.0 / state.delta - state.delta);
    let n_sq = sq * sq;
    let norm = state.norm_sq_orthogonal();
    let disp: f64 = state
        .weights
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let alpha = (j as f64 + state.center_offset) * state.spacing;
            alpha * alpha * c.norm_sqr()
        })
        .sum();
    let mean = n_sq + disp / norm;
    PhotonStats {
        mean,
        overlap_correction: state.photon_mean_exact() - mean,
    }
}
