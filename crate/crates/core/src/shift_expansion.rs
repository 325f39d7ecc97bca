//! Expansion of `√δ·a` into discrete displacements.
//!
//! With `s = √(δ/2)`, `√δ·a = s·q + i·s·p`. Writing `x = arcsin(sin x)` and
//! truncating the arcsin series gives odd powers of `sin(s·q)` and
//! `sin(s·p)`, and each `sinᵏ` is a finite sum of `e^{±ijs·q}` (or `p`)
//! exponentials, i.e. displacements:
//!
//! `e^{iβq} = D(iβ/√2)`, `e^{iβp} = D(−β/√2)`.
//!
//! Every term is kept with both its step index `j` (a phase-space shift of
//! `j·s` in quadrature units) and its displacement amplitude
//! (`|α| = j·s/√2`), so the two unit systems never mix silently.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::gaussian_states::Quadrature;
use crate::special::{laguerre, ln_factorial};

/// Highest supported arcsin order.
pub const MAX_ORDER: usize = 15;

/// Largest Fock block for the matrix oracle.
pub const MAX_FOCK_NMAX: usize = 200;

/// Extra Fock levels kept beyond `n_max` to keep truncation edges away.
pub const FOCK_MARGIN: usize = 40;

/// Coefficients of `x, x³, …, x^order` in the arcsin series.
pub fn arcsin_series(order: usize) -> Result<Vec<Ratio<i64>>> {
    check_order(order)?;
    let mut out = vec![Ratio::from_integer(1)];
    for n in 0..(order - 1) / 2 {
        let n = n as i64;
        let prev = *out.last().expect("nonempty");
        out.push(prev * Ratio::new((2 * n + 1) * (2 * n + 1), (2 * n + 2) * (2 * n + 3)));
    }
    Ok(out)
}

/// `sinᵏ x = Σ_j b_j e^{ijx}` for odd `k`; returns `(j, Im b_j)` since every
/// `b_j` is purely imaginary, ordered by increasing `j`.
pub fn sine_power_coefficients(k: usize) -> Result<Vec<(i64, Ratio<i64>)>> {
    check_order(k)?;
    // (2i)^{−k} = 2^{−k}·i^{−k}, and i^{−k} = −i for k ≡ 1 (mod 4), +i for k ≡ 3
    let unit = if k % 4 == 1 { -1 } else { 1 };
    let scale = Ratio::new(unit, 1i64 << k);
    let mut binom = 1i64;
    let mut out = Vec::with_capacity(k + 1);
    for m in 0..=k as i64 {
        if m > 0 {
            binom = binom * (k as i64 - m + 1) / m;
        }
        let sign = if (k as i64 - m) % 2 == 0 { 1 } else { -1 };
        out.push((2 * m - k as i64, scale * (sign * binom)));
    }
    Ok(out)
}

fn check_order(order: usize) -> Result<()> {
    if order % 2 == 0 || order > MAX_ORDER {
        return domain(format!("order {order} must be odd and at most {MAX_ORDER}"));
    }
    Ok(())
}

/// One displacement term `coeff · e^{i·j·s·X}` with `X` the given quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerm {
    pub quadrature: Quadrature,
    pub step_index: i64,
    pub coeff: Complex64,
}

impl ExpansionTerm {
    /// Displacement amplitude α with `e^{iβX} = D(α)`, `β = j·s`.
    pub fn amplitude(&self, step: f64) -> Complex64 {
        let beta = self.step_index as f64 * step;
        match self.quadrature {
            Quadrature::Q => Complex64::new(0.0, beta / SQRT_2),
            Quadrature::P => Complex64::new(-beta / SQRT_2, 0.0),
        }
    }

    /// Size of the phase-space shift in quadrature units, `|j|·s`.
    pub fn quadrature_shift(&self, step: f64) -> f64 {
        self.step_index.unsigned_abs() as f64 * step
    }
}

/// `√δ·a ≈ Σ_t c_t D(α_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementExpansion {
    pub delta: f64,
    pub order: usize,
    /// `√(δ/2)`, the base shift in quadrature units.
    pub step: f64,
    pub terms: Vec<ExpansionTerm>,
}

impl DisplacementExpansion {
    /// Expansion with no terms, the zero operator.
    pub fn empty(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            delta,
            order: 0,
            step: (delta / 2.0).sqrt(),
            terms: Vec::new(),
        })
    }

    /// `Σ|c_t|`.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn describe_target(&self) -> &'static str {
        "sqrt(delta)*a"
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return domain(format!("δ = {delta} must be positive"));
    }
    Ok(())
}

/// Expands `√δ·a` through arcsin order `order`, merging equal shifts.
pub fn expand_annihilation(delta: f64, order: usize) -> Result<DisplacementExpansion> {
    check_delta(delta)?;
    let arcsin = arcsin_series(order)?;
    let mut terms = Vec::new();
    for quadrature in [Quadrature::Q, Quadrature::P] {
        for j in (-(order as i64)..=order as i64).filter(|j| j % 2 != 0) {
            // Im of the sinᵏ combination at step j
            let mut im = Ratio::from_integer(0i64);
            for (n, a) in arcsin.iter().enumerate() {
                for (jj, b) in sine_power_coefficients(2 * n + 1)? {
                    if jj == j {
                        im += *a * b;
                    }
                }
            }
            let im = *im.numer() as f64 / *im.denom() as f64;
            // q part enters as is, p part multiplied by i
            let coeff = match quadrature {
                Quadrature::Q => Complex64::new(0.0, im),
                Quadrature::P => Complex64::new(-im, 0.0),
            };
            terms.push(ExpansionTerm {
                quadrature,
                step_index: j,
                coeff,
            });
        }
    }
    Ok(DisplacementExpansion {
        delta,
        order,
        step: (delta / 2.0).sqrt(),
        terms,
    })
}

/// Correctable/uncorrectable split of an expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSplit {
    pub correctable: Vec<ExpansionTerm>,
    pub uncorrectable: Vec<ExpansionTerm>,
    /// Terms with `|j|·√(δ/2)` strictly below this are correctable.
    pub cutoff: f64,
    pub unit: &'static str,
}

/// Cutoff `√(π/2)` on the shift `|j|·√(δ/2)`.
pub const SPLIT_CUTOFF: f64 = 1.253_314_137_315_500_3;

/// Splits terms by shift size, `|j|·√(δ/2) < √(π/2)` being correctable.
pub fn split_correctable(exp: &DisplacementExpansion) -> ExpansionSplit {
    let (correctable, uncorrectable) = exp
        .terms
        .iter()
        .partition(|t| t.quadrature_shift(exp.step) < SPLIT_CUTOFF);
    ExpansionSplit {
        correctable,
        uncorrectable,
        cutoff: SPLIT_CUTOFF,
        unit: "quadrature shift |j|*sqrt(delta/2)",
    }
}

/// `k = ½√(π·n_max/P)` and the exponent `1 + k/2` of `P^{1+k/2}`.
pub fn uncorrectable_exponent(p: f64, n_max: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("loss probability {p} must lie in (0, 1)"));
    }
    if !(n_max > 0.0 && n_max.is_finite()) {
        return domain("n_max must be positive");
    }
    let k = 0.5 * (PI * n_max / p).sqrt();
    Ok((k, 1.0 + 0.5 * k))
}

/// `⟨m|D(α)|n⟩` from the associated-Laguerre closed form.
pub fn displacement_element(alpha: Complex64, m: usize, n: usize) -> Complex64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return Complex64::new((m == n) as u8 as f64, 0.0);
    }
    let (lo, hi, base) = if m >= n { (n, m, alpha) } else { (m, n, -alpha.conj()) };
    let d = hi - lo;
    let log_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + d as f64 * base.norm().ln() - 0.5 * x;
    let phase = Complex64::from_polar(1.0, d as f64 * base.arg());
    phase * log_mag.exp() * laguerre(lo, d as f64, x)
}

/// Dense `D(α)` on Fock levels `0..dim`.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |m, n| displacement_element(alpha, m, n))
}

fn expansion_matrix(terms: &[ExpansionTerm], step: f64, dim: usize) -> DMatrix<Complex64> {
    terms
        .par_iter()
        .map(|t| displacement_matrix(t.amplitude(step), dim) * t.coeff)
        .reduce(|| DMatrix::zeros(dim, dim), |a, b| a + b)
}

fn block_norm(mut m: DMatrix<Complex64>, n_max: usize) -> f64 {
    let dim = m.nrows();
    m = m.columns(0, (n_max + 1).min(dim)).into_owned();
    m.singular_values().max()
}

/// Spectral norm of `(expansion − √δ·a)` acting on Fock states `n ≤ n_max`.
pub fn fock_residual_norm(exp: &DisplacementExpansion, n_max: usize) -> Result<f64> {
    if n_max > MAX_FOCK_NMAX {
        return domain(format!("n_max {n_max} exceeds {MAX_FOCK_NMAX}"));
    }
    let dim = n_max + FOCK_MARGIN + 1;
    let mut m = expansion_matrix(&exp.terms, exp.step, dim);
    let root = exp.delta.sqrt();
    for n in 1..dim {
        m[(n - 1, n)] -= Complex64::new(root * (n as f64).sqrt(), 0.0);
    }
    Ok(block_norm(m, n_max))
}

/// Spectral norm of a set of terms alone on Fock states `n ≤ n_max`.
pub fn fock_terms_norm(terms: &[ExpansionTerm], step: f64, n_max: usize) -> Result<f64> {
    if n_max > MAX_FOCK_NMAX {
        return domain(format!("n_max {n_max} exceeds {MAX_FOCK_NMAX}"));
    }
    let dim = n_max + FOCK_MARGIN + 1;
    Ok(block_norm(expansion_matrix(terms, step, dim), n_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn arcsin_coefficients() {
        assert_eq!(arcsin_series(1).unwrap(), vec![r(1, 1)]);
        assert_eq!(arcsin_series(7).unwrap(), vec![r(1, 1), r(1, 6), r(3, 40), r(5, 112)]);
        assert_eq!(arcsin_series(9).unwrap()[4], r(35, 1152));
        assert!(arcsin_series(4).is_err());
        assert!(arcsin_series(17).is_err());
        // numeric check of the series against asin
        let c = arcsin_series(15).unwrap();
        let x: f64 = 0.1;
        let s: f64 = c
            .iter()
            .enumerate()
            .map(|(n, a)| *a.numer() as f64 / *a.denom() as f64 * x.powi(2 * n as i32 + 1))
            .sum();
        assert_abs_diff_eq!(s, x.asin(), epsilon = 1e-14);
    }

    #[test]
    fn sine_cubed_rewrite() {
        let c = sine_power_coefficients(3).unwrap();
        // sin³x = (3 sin x − sin 3x)/4: ±3/(8i) at ±1, ∓1/(8i) at ±3
        assert_eq!(c, vec![(-3, r(-1, 8)), (-1, r(3, 8)), (1, r(-3, 8)), (3, r(1, 8))]);
        let one = sine_power_coefficients(1).unwrap();
        assert_eq!(one, vec![(-1, r(1, 2)), (1, r(-1, 2))]);
    }

    #[test]
    fn sine_power_rewrites_are_exact() {
        for k in (1..=MAX_ORDER).step_by(2) {
            let c = sine_power_coefficients(k).unwrap();
            // |b_j| = C(k, m)/2^k, and the magnitudes sum to 1
            let total: Ratio<i64> = c.iter().map(|(_, b)| if *b < r(0, 1) { -*b } else { *b }).sum();
            assert_eq!(total, r(1, 1));
            for x in [0.3f64, 1.1, -2.0] {
                let v: Complex64 = c
                    .iter()
                    .map(|(j, b)| Complex64::new(0.0, *b.numer() as f64 / *b.denom() as f64) * Complex64::from_polar(1.0, *j as f64 * x))
                    .sum();
                assert_abs_diff_eq!(v.re, x.sin().powi(k as i32), epsilon = 1e-14);
                assert!(v.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn split_threshold() {
        // step = √(π/2)/10, i.e. δ = 2·(π/2)/100
        let delta = PI / 100.0;
        let exp = expand_annihilation(delta, 15).unwrap();
        let split = split_correctable(&exp);
        assert!(split.correctable.iter().all(|t| t.step_index.abs() <= 9));
        assert!(split.uncorrectable.iter().all(|t| t.step_index.abs() >= 11));
        assert_eq!(split.correctable.len() + split.uncorrectable.len(), exp.terms.len());
        assert_abs_diff_eq!(SPLIT_CUTOFF, (PI / 2.0).sqrt(), epsilon = 1e-15);

        let small = split_correctable(&expand_annihilation(1e-3, 1).unwrap());
        assert!(small.uncorrectable.is_empty());
    }

    #[test]
    fn l1_norm_grows() {
        let norms: Vec<f64> = [1, 3, 5, 7].iter().map(|&o| expand_annihilation(0.01, o).unwrap().l1_norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exponent_examples() {
        let (k, e) = uncorrectable_exponent(0.1, 100.0).unwrap();
        assert_abs_diff_eq!(k, 28.0249, epsilon = 1e-4);
        assert_abs_diff_eq!(e, 15.0125, epsilon = 1e-4);
        assert!(uncorrectable_exponent(1.0, 10.0).is_err());
        let (k1, _) = uncorrectable_exponent(0.1, 200.0).unwrap();
        let (k2, _) = uncorrectable_exponent(0.2, 100.0).unwrap();
        assert!(k1 > k && k2 < k);
        let (k3, e3) = uncorrectable_exponent(0.5, 10.0).unwrap();
        assert!(k3 > 2.0 && e3 > 2.0);
    }

    #[test]
    fn displacement_matrix_is_unitary_and_composes() {
        let a = Complex64::new(0.3, -0.2);
        let dim = 70;
        let d = displacement_matrix(a, dim);
        let prod = d.adjoint() * &d;
        for i in 0..30 {
            for j in 0..30 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).norm() < 1e-12);
            }
        }
        // D(α)|0⟩ is the coherent state
        for n in 0..10 {
            let coh = a.powu(n as u32) * (-0.5 * a.norm_sqr()).exp() / ln_factorial(n).exp().sqrt();
            assert!((d[(n, 0)] - coh).norm() < 1e-15);
        }
    }

    #[test]
    fn residuals() {
        let empty = DisplacementExpansion::empty(0.001).unwrap();
        assert_abs_diff_eq!(fock_residual_norm(&empty, 10).unwrap(), (0.001f64 * 10.0).sqrt(), epsilon = 1e-12);

        let r1 = fock_residual_norm(&expand_annihilation(0.001, 1).unwrap(), 10).unwrap();
        let r3 = fock_residual_norm(&expand_annihilation(0.001, 3).unwrap(), 10).unwrap();
        assert!(r3 < r1);
        let coarse = fock_residual_norm(&expand_annihilation(0.004, 3).unwrap(), 10).unwrap();
        assert!(r3 < coarse);
        assert!(fock_residual_norm(&empty, 201).is_err());
    }

    // independent route: coherent states compose in closed form,
    // D(β)|α⟩ = e^{(βα* − β*α)/2}|α + β⟩
    fn coherent(alpha: Complex64, dim: usize) -> Vec<Complex64> {
        (0..dim)
            .map(|n| alpha.powu(n as u32) * (-0.5 * alpha.norm_sqr() - 0.5 * ln_factorial(n)).exp())
            .collect()
    }

    #[test]
    fn expansion_identity_on_coherent_states() {
        let dim = 80;
        for delta in [0.003, 0.01] {
            let exp = expand_annihilation(delta, 7).unwrap();
            for alpha in [
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::from_polar(0.7, 2.1),
            ] {
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for t in &exp.terms {
                    let beta = t.amplitude(exp.step);
                    let phase = ((beta * alpha.conj() - beta.conj() * alpha) * 0.5).exp();
                    for (o, c) in out.iter_mut().zip(coherent(alpha + beta, dim)) {
                        *o += t.coeff * phase * c;
                    }
                }
                let target = coherent(alpha, dim);
                let err: f64 = out
                    .iter()
                    .zip(&target)
                    .map(|(o, c)| (o - c * alpha * delta.sqrt()).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let bound = 5.0 * (delta * (alpha.norm_sqr() + 1.0)).powf(4.5);
                assert!(err <= bound, "δ = {delta}, α = {alpha}: {err} > {bound}");
            }
        }
    }
}
