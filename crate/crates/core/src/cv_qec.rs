//! Shift-level model of Steane-style error correction for GKP codes.
//!
//! States are tracked only through their shift labels `(u, v)`, meaning the
//! operator `e^{−iu·p} e^{−iv·q}`. Linear optics acts on the stacked vector
//! `(q_1, p_1, q_2, p_2, …)` and shifts propagate through the same matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::circular::wrap_angle;
use crate::error::{domain, Result};
use crate::metrics::squeeze_db;
use crate::rng::seeded;

const SYMPLECTIC_TOL: f64 = 1e-12;

/// `√π`, the code-lattice spacing in each quadrature.
pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}

/// Per-mode `(u, v)` shifts, stored as `(u_1, v_1, u_2, v_2, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector {
    components: Vec<f64>,
}

impl ShiftVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() % 2 == 1 || components.is_empty() {
            return domain("shift vector needs a (u, v) pair per mode");
        }
        if components.iter().any(|c| !c.is_finite()) {
            return domain("shifts must be finite");
        }
        Ok(Self { components })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().flat_map(|&(u, v)| [u, v]).collect())
    }

    pub fn modes(&self) -> usize {
        self.components.len() / 2
    }

    pub fn u(&self, mode: usize) -> f64 {
        self.components[2 * mode]
    }

    pub fn v(&self, mode: usize) -> f64 {
        self.components[2 * mode + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }
}

/// `J = ⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

/// Linear quadrature map with `SᵀJS = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n % 2 == 1 || matrix.ncols() != n {
            return domain("symplectic map must be 2n × 2n");
        }
        let j = symplectic_form(n / 2);
        let err = (matrix.transpose() * &j * &matrix - &j).amax();
        if !(err <= SYMPLECTIC_TOL * matrix.amax().powi(2).max(1.0)) {
            return domain(format!("matrix is not symplectic (|SᵀJS − J| = {err:.3e})"));
        }
        Ok(Self { matrix })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SymplecticMap) -> Result<SymplecticMap> {
        if self.modes() != first.modes() {
            return domain("composed maps act on different mode counts");
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Largest `|SᵀJS − J|` entry.
    pub fn symplectic_defect(&self) -> f64 {
        let j = symplectic_form(self.modes());
        (self.matrix.transpose() * &j * &self.matrix - j).amax()
    }
}

/// CNOT on `(q_c, p_c, q_t, p_t)`: `q_t → q_c + q_t`, `p_c → p_c − p_t`.
pub fn cnot_symplectic() -> SymplecticMap {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, -1.0,
        1.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ]);
    SymplecticMap { matrix: m }
}

/// Fourier gate: `q → p`, `p → −q`.
pub fn hadamard_symplectic() -> SymplecticMap {
    SymplecticMap {
        matrix: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
    }
}

/// Phase gate `e^{iq²/2}`: `q → q`, `p → p + q`.
pub fn phase_symplectic() -> SymplecticMap {
    SymplecticMap {
        matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
    }
}

/// Single-mode squeezer `diag(e^{r}, e^{−r})`.
pub fn squeezer_symplectic(r: f64) -> SymplecticMap {
    SymplecticMap {
        matrix: DMatrix::from_row_slice(2, 2, &[r.exp(), 0.0, 0.0, (-r).exp()]),
    }
}

/// `S = O₁·diag(e^{r₁}, e^{−r₁}, …)·O₂` with passive `O₁`, `O₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochMessiah {
    pub passive_out: SymplecticMap,
    /// Squeezing parameters `r_k ≥ 0`, one per mode.
    pub squeezing: Vec<f64>,
    pub passive_in: SymplecticMap,
}

impl BlochMessiah {
    pub fn squeeze_matrix(&self) -> DMatrix<f64> {
        let n = self.squeezing.len();
        let mut d = DMatrix::zeros(2 * n, 2 * n);
        for (k, r) in self.squeezing.iter().enumerate() {
            d[(2 * k, 2 * k)] = r.exp();
            d[(2 * k + 1, 2 * k + 1)] = (-r).exp();
        }
        d
    }

    pub fn reassemble(&self) -> DMatrix<f64> {
        self.passive_out.matrix() * self.squeeze_matrix() * self.passive_in.matrix()
    }

    /// Squeezing of each mode in dB, `10·log10(cosh² r)`.
    pub fn squeezing_db(&self) -> Vec<f64> {
        self.squeezing
            .iter()
            .map(|r| squeeze_db((-r).exp()).expect("e^{−r} lies in (0, 1]"))
            .collect()
    }
}

/// Bloch–Messiah factorization through the polar decomposition `S = P·O`.
///
/// `P = (SSᵀ)^{1/2}` is symmetric positive symplectic. Each eigenvector `v`
/// of `P` with eigenvalue `e^{r} > 1` pairs with `−Jv` at `e^{−r}`; the
/// eigenvalue-1 subspace is `J`-invariant and is split into such pairs by
/// symplectic Gram–Schmidt. With `W` the resulting orthogonal symplectic
/// basis, `S = W·D·(WᵀO)`.
pub fn bloch_messiah(s: &SymplecticMap) -> Result<BlochMessiah> {
    let n = s.modes();
    let dim = 2 * n;
    let j = symplectic_form(n);
    let sst = s.matrix() * s.matrix().transpose();
    let eig = SymmetricEigen::new(sst);
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let vecs = eig.eigenvectors;

    let mut p_inv = DMatrix::zeros(dim, dim);
    for (k, &l) in lambdas.iter().enumerate() {
        let v = vecs.column(k);
        p_inv += v * v.transpose() / l;
    }
    let o = &p_inv * s.matrix();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut w = DMatrix::zeros(dim, dim);
    let mut squeezing = Vec::with_capacity(n);
    let mut unit: Vec<DVector<f64>> = Vec::new();
    for &k in &order {
        let l = lambdas[k];
        let v: DVector<f64> = vecs.column(k).into_owned();
        if l > 1.0 + 1e-9 && squeezing.len() < n {
            let col = squeezing.len();
            w.set_column(2 * col, &v);
            w.set_column(2 * col + 1, &(-(&j * &v)));
            squeezing.push(l.ln());
        } else if (l - 1.0).abs() <= 1e-9 {
            unit.push(v);
        }
    }
    // symplectic Gram–Schmidt inside the eigenvalue-1 subspace
    let mut placed: Vec<DVector<f64>> = Vec::new();
    for v in unit {
        if squeezing.len() == n {
            break;
        }
        let mut x = v.clone();
        for b in &placed {
            x -= b * b.dot(&x);
        }
        let norm = x.norm();
        if norm < 0.5 {
            continue;
        }
        x /= norm;
        let partner = -(&j * &x);
        let col = squeezing.len();
        w.set_column(2 * col, &x);
        w.set_column(2 * col + 1, &partner);
        placed.push(x);
        placed.push(partner);
        squeezing.push(0.0);
    }
    if squeezing.len() != n {
        return domain("could not build a symplectic eigenbasis");
    }
    let passive_in = SymplecticMap {
        matrix: w.transpose() * &o,
    };
    let out = BlochMessiah {
        passive_out: SymplecticMap { matrix: w },
        squeezing,
        passive_in,
    };
    let err = (out.reassemble() - s.matrix()).amax();
    if err > 1e-9 * s.matrix().amax().max(1.0) {
        return domain(format!("factorization failed to reassemble (error {err:.3e})"));
    }
    Ok(out)
}

/// `e′ = S·e`.
pub fn propagate_shifts(s: &SymplecticMap, e: &ShiftVector) -> Result<ShiftVector> {
    if s.modes() != e.modes() {
        return domain(format!("map acts on {} modes, shifts have {}", s.modes(), e.modes()));
    }
    let out = s.matrix() * DVector::from_column_slice(e.as_slice());
    ShiftVector::new(out.iter().copied().collect())
}

/// `x` minus the nearest multiple of `√π`, in `(−√π/2, √π/2]`.
pub fn mod_star(x: f64) -> f64 {
    let s = sqrt_pi();
    let mut r = x - s * (x / s).round();
    if r <= -0.5 * s {
        r += s;
    }
    if r > 0.5 * s {
        r -= s;
    }
    r
}

/// One syndrome extraction and correction of a single quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteaneOutcome {
    /// Homodyne value `u_data + u_ancilla` (modulo the code lattice).
    pub measured: f64,
    /// Applied shift, `−mod*(measured)`.
    pub correction: f64,
    /// Data shift after correction, `u_data + correction`.
    pub residual: f64,
    /// The residual is nearer an odd multiple of `√π`: a logical flip.
    pub logical_flip: bool,
}

/// Corrects the data shift with the shifted ancilla's readout.
pub fn steane_round(u_data: f64, u_ancilla: f64) -> SteaneOutcome {
    let measured = u_data + u_ancilla;
    let correction = -mod_star(measured);
    let residual = u_data + correction;
    let n = (residual / sqrt_pi()).round() as i64;
    SteaneOutcome {
        measured,
        correction,
        residual,
        logical_flip: n.rem_euclid(2) == 1,
    }
}

/// Per-round record of the alternating simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QecRoundRecord {
    pub measured_q: f64,
    pub measured_p: f64,
    pub residual_u: f64,
    pub residual_v: f64,
    pub logical_flag: bool,
    pub syndrome_flip: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QecReport {
    pub logical_errors: usize,
    /// Rounds where the syndrome wrapped and flipped the logical class
    /// although the data shift itself was below `√π/2`.
    pub syndrome_flips: usize,
    pub records: Vec<QecRoundRecord>,
}

/// Alternating q and p Steane rounds with uniform `(−b, b)` shifts.
///
/// Each round draws an in-circuit shift `(u_I, v_I)` onto the data, then
/// corrects `u` with a `|+⟩` ancilla whose `v` kicks the data's `v` through
/// the CNOT (`p_c → p_c − p_t`), then corrects `v` with a `|0⟩` ancilla whose
/// `u` kicks the data's `u` (`q_t → q_c + q_t`). Before each correction the
/// data shift is the sum of three bounded terms (in-circuit, back-action and
/// the previous ancilla's residual), so it stays below `√π/2` when
/// `b < √π/6`. A round is a logical error when a pre-correction shift
/// reaches `√π/2`. Readouts that wrap because the fresh ancilla shift pushes
/// the syndrome past `√π/2` are counted separately.
pub fn run_qec_simulation(rounds: usize, bound: f64, seed: u64) -> Result<QecReport> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return domain(format!("shift bound {bound} must be finite and non-negative"));
    }
    let mut rng = seeded(seed);
    let draw = |rng: &mut crate::rng::SimRng| {
        if bound == 0.0 {
            0.0
        } else {
            rng.random_range(-bound..bound)
        }
    };
    let half = 0.5 * sqrt_pi();
    let mut u = draw(&mut rng);
    let mut v = draw(&mut rng);
    let mut records = Vec::with_capacity(rounds);
    let mut errors = 0;
    let mut flips = 0;
    for _ in 0..rounds {
        u += draw(&mut rng);
        v += draw(&mut rng);

        let (ua, va) = (draw(&mut rng), draw(&mut rng));
        let mut flag = u.abs() >= half;
        let q = steane_round(u, ua);
        u = mod_star(q.residual);
        v -= va;

        let (ua, va) = (draw(&mut rng), draw(&mut rng));
        flag |= v.abs() >= half;
        let p = steane_round(v, va);
        v = mod_star(p.residual);
        u += ua;

        let flip = !flag && (q.logical_flip || p.logical_flip);
        errors += flag as usize;
        flips += flip as usize;
        records.push(QecRoundRecord {
            measured_q: q.measured,
            measured_p: p.measured,
            residual_u: q.residual,
            residual_v: p.residual,
            logical_flag: flag,
            syndrome_flip: flip,
        });
    }
    Ok(QecReport {
        logical_errors: errors,
        syndrome_flips: flips,
        records,
    })
}

/// Stabilizer-eigenvalue labels tracked in software.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFrame {
    pub theta_p: f64,
    pub theta_q: f64,
}

impl PhaseFrame {
    pub fn new(theta_p: f64, theta_q: f64) -> Self {
        Self {
            theta_p: wrap_angle(theta_p),
            theta_q: wrap_angle(theta_q),
        }
    }

    /// Frame displacement as a shift: `(u, v) = (θ_q, θ_p)/(2√π)`.
    pub fn shift(&self) -> (f64, f64) {
        let s = 2.0 * sqrt_pi();
        (self.theta_q / s, self.theta_p / s)
    }

    fn from_shift(u: f64, v: f64) -> Self {
        let s = 2.0 * sqrt_pi();
        Self::new(v * s, u * s)
    }
}

/// Clifford gates whose frames are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Identity,
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
}

/// Full-register map of a gate on `modes` modes.
pub fn gate_symplectic(gate: Gate, modes: usize) -> Result<SymplecticMap> {
    let mut m = DMatrix::identity(2 * modes, 2 * modes);
    let check = |k: usize| {
        if k >= modes {
            domain(format!("mode {k} out of range for {modes} modes"))
        } else {
            Ok(())
        }
    };
    let mut place = |local: &SymplecticMap, idx: &[usize]| {
        for (a, &ma) in idx.iter().enumerate() {
            for (b, &mb) in idx.iter().enumerate() {
                for i in 0..2 {
                    for k in 0..2 {
                        m[(2 * ma + i, 2 * mb + k)] = local.matrix()[(2 * a + i, 2 * b + k)];
                    }
                }
            }
        }
    };
    match gate {
        Gate::Identity => {}
        Gate::H(k) => {
            check(k)?;
            place(&hadamard_symplectic(), &[k]);
        }
        Gate::S(k) => {
            check(k)?;
            place(&phase_symplectic(), &[k]);
        }
        Gate::Cnot { control, target } => {
            check(control)?;
            check(target)?;
            if control == target {
                return domain("CNOT control and target must differ");
            }
            place(&cnot_symplectic(), &[control, target]);
        }
    }
    Ok(SymplecticMap { matrix: m })
}

/// Conjugates the frame displacements through a map.
pub fn frame_update_map(frames: &[PhaseFrame], s: &SymplecticMap) -> Result<Vec<PhaseFrame>> {
    let pairs: Vec<(f64, f64)> = frames.iter().map(|f| f.shift()).collect();
    let out = propagate_shifts(s, &ShiftVector::from_pairs(&pairs)?)?;
    Ok((0..out.modes()).map(|k| PhaseFrame::from_shift(out.u(k), out.v(k))).collect())
}

/// Frames after a gate.
pub fn frame_update(frames: &[PhaseFrame], gate: Gate) -> Result<Vec<PhaseFrame>> {
    frame_update_map(frames, &gate_symplectic(gate, frames.len())?)
}
