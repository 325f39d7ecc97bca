//! Feedback-phase optimizer and the precomputed lookup table.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circular::wrap_positive;
use crate::error::{domain, Error, Result};
use crate::phase_posterior::PhasePosterior;

const GRID: usize = 512;
const REFINE_TOL: f64 = 1e-6;
const TIE_REL: f64 = 1e-12;

/// Deepest table that is built (2^24 − 1 entries).
pub const MAX_TABLE_DEPTH: usize = 24;

// histories shorter than this are expanded serially before the subtrees are
// handed to worker threads
const PARALLEL_SPLIT: usize = 6;

/// Expected post-round `|c′_{−1}|` summed over both outcomes, as a function of φ.
fn objective(a: Complex64, c_m2: Complex64, c0: Complex64, phi: f64) -> f64 {
    let b = (Complex64::from_polar(1.0, phi) * c_m2 + Complex64::from_polar(1.0, -phi) * c0) * 0.25;
    (a + b).norm() + (a - b).norm()
}

/// φ in [0, 2π) maximizing the expected sharpness after the next unit round.
///
/// A 512-point grid picks the first point within a relative 1e−12 of the
/// maximum (so ties go to the smallest φ); golden-section search then refines
/// within one grid step to 1e−6 rad. A constant objective returns 0.
pub fn optimize_feedback_phase(post: &PhasePosterior) -> f64 {
    let a = post.coeff(-1) * 0.5;
    let c_m2 = post.coeff(-2);
    let c0 = post.coeff(0);
    let f = |phi: f64| objective(a, c_m2, c0, phi);

    let step = 2.0 * PI / GRID as f64;
    let values: Vec<f64> = (0..GRID).map(|i| f(step * i as f64)).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= TIE_REL * max.abs() {
        return 0.0;
    }
    let best = values
        .iter()
        .position(|&v| v >= max - TIE_REL * max.abs())
        .expect("grid maximum exists");
    let grid_phi = step * best as f64;

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (grid_phi - step, grid_phi + step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > REFINE_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = f(x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    // keep the exact grid point when refinement finds nothing better
    if f(refined) > values[best] * (1.0 + TIE_REL) {
        wrap_positive(refined)
    } else {
        grid_phi
    }
}

/// Optimal feedback phase for every outcome history shorter than the depth.
///
/// The history `x_1 … x_L` (first outcome most significant) is stored at
/// index `2^L − 1 + value`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTable {
    depth: usize,
    phases: Vec<f64>,
}

impl FeedbackTable {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of stored phases, `2^depth − 1`.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Phase for the round following `history`.
    pub fn phase(&self, history: &[u8]) -> Option<f64> {
        if history.len() >= self.depth {
            return None;
        }
        let value = history.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.phases.get(index(history.len(), value)).copied()
    }

    /// Writes `history_bits,phi_radians` rows, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "history_bits,phi_radians")?;
        for len in 0..self.depth {
            for value in 0..(1usize << len) {
                let bits: String = (0..len)
                    .map(|i| if (value >> (len - 1 - i)) & 1 == 1 { '1' } else { '0' })
                    .collect();
                writeln!(w, "{bits},{:.16e}", self.phases[index(len, value)])?;
            }
        }
        Ok(())
    }

    /// Reads a table written by [`Self::write_csv`]; `#` lines are skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut entries: Vec<(String, f64)> = Vec::new();
        let mut header = false;
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Domain(format!("reading table: {e}")))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header {
                if line.trim() != "history_bits,phi_radians" {
                    return domain("table header must be history_bits,phi_radians");
                }
                header = true;
                continue;
            }
            let (bits, phi) = line
                .split_once(',')
                .ok_or_else(|| Error::Domain(format!("table line {} has no comma", n + 1)))?;
            let phi: f64 = phi
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("table line {} has a bad phase", n + 1)))?;
            if !bits.chars().all(|c| c == '0' || c == '1') {
                return domain(format!("table line {} has a bad history", n + 1));
            }
            entries.push((bits.to_string(), phi));
        }
        let n = entries.len();
        let depth = (n + 1).trailing_zeros() as usize;
        if (n + 1) != 1usize << depth || depth == 0 {
            return domain(format!("table has {n} entries, not 2^M − 1"));
        }
        let mut phases = vec![f64::NAN; n];
        for (bits, phi) in entries {
            if bits.len() >= depth || !(0.0..2.0 * PI).contains(&phi) {
                return domain(format!("table entry {bits:?} is out of range"));
            }
            let value = bits.chars().fold(0usize, |acc, c| (acc << 1) | (c == '1') as usize);
            phases[index(bits.len(), value)] = phi;
        }
        if phases.iter().any(|p| p.is_nan()) {
            return domain("table has duplicate or missing histories");
        }
        Ok(Self { depth, phases })
    }
}

fn index(len: usize, value: usize) -> usize {
    (1usize << len) - 1 + value
}

/// Builds the table depth-first from the flat prior.
pub fn build_feedback_table(depth: usize) -> Result<FeedbackTable> {
    if depth == 0 {
        return domain("feedback table depth must be at least 1");
    }
    if depth > MAX_TABLE_DEPTH {
        return Err(Error::Resource(format!(
            "feedback table depth {depth} exceeds {MAX_TABLE_DEPTH}"
        )));
    }
    let mut phases = vec![0.0; (1usize << depth) - 1];

    // serial breadth-first expansion of the shallow levels
    let split = depth.min(PARALLEL_SPLIT);
    let mut frontier = vec![(0usize, PhasePosterior::flat())];
    for len in 0..split {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (value, post) in frontier {
            let phi = optimize_feedback_phase(&post);
            phases[index(len, value)] = phi;
            if len + 1 < depth {
                for x in 0..=1u8 {
                    next.push(((value << 1) | x as usize, post.update(x, phi, 1)?));
                }
            }
        }
        frontier = next;
    }

    let subtrees: Vec<Vec<(usize, f64)>> = frontier
        .into_par_iter()
        .map(|(value, post)| {
            let mut out = Vec::new();
            fill(&post, split, value, depth, &mut out);
            out
        })
        .collect();
    for (i, phi) in subtrees.into_iter().flatten() {
        phases[i] = phi;
    }
    Ok(FeedbackTable { depth, phases })
}

fn fill(post: &PhasePosterior, len: usize, value: usize, depth: usize, out: &mut Vec<(usize, f64)>) {
    if len >= depth {
        return;
    }
    let phi = optimize_feedback_phase(post);
    out.push((index(len, value), phi));
    if len + 1 < depth {
        for x in 0..=1u8 {
            let next = post.update(x, phi, 1).expect("unit multiplier and bit outcome");
            fill(&next, len + 1, (value << 1) | x as usize, depth, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn optimizer_examples() {
        assert_eq!(optimize_feedback_phase(&PhasePosterior::flat()), 0.0);
        for x in 0..=1 {
            let p = PhasePosterior::flat().update(x, 0.0, 1).unwrap();
            assert_abs_diff_eq!(optimize_feedback_phase(&p), PI / 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn optimizer_matches_brute_force() {
        let p = PhasePosterior::flat()
            .update(0, 0.0, 1)
            .unwrap()
            .update(1, 1.3, 1)
            .unwrap()
            .update(0, 2.2, 1)
            .unwrap();
        let a = p.coeff(-1) * 0.5;
        let f = |phi: f64| objective(a, p.coeff(-2), p.coeff(0), phi);
        let best = (0..200_000)
            .map(|i| 2.0 * PI * i as f64 / 200_000.0)
            .fold((0.0, f64::NEG_INFINITY), |acc, phi| if f(phi) > acc.1 { (phi, f(phi)) } else { acc });
        let phi = optimize_feedback_phase(&p);
        assert!(f(phi) >= best.1 - 1e-10);
        // objective equals the summed post-round |c'_{-1}|
        let direct: f64 = (0..=1u8).map(|x| p.update(x, phi, 1).unwrap().coeff(-1).norm()).sum();
        assert_abs_diff_eq!(f(phi), direct, epsilon = 1e-15);
    }

    #[test]
    fn small_tables() {
        let t1 = build_feedback_table(1).unwrap();
        assert_eq!(t1.phases(), &[0.0]);
        let t2 = build_feedback_table(2).unwrap();
        assert_eq!(t2.len(), 3);
        assert_eq!(t2.phase(&[]), Some(0.0));
        assert_abs_diff_eq!(t2.phase(&[0]).unwrap(), PI / 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(t2.phase(&[1]).unwrap(), PI / 2.0, epsilon = 1e-6);
        assert_eq!(t2.phase(&[0, 1]), None);
        assert!(build_feedback_table(0).is_err());
        assert!(matches!(build_feedback_table(25), Err(Error::Resource(_))));
    }

    #[test]
    fn table_is_deterministic_and_in_range() {
        let a = build_feedback_table(9).unwrap();
        let b = build_feedback_table(9).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_eq!(a.len(), 511);
        assert_eq!(a.phases()[0], 0.0);
        assert!(a.phases().iter().all(|p| (0.0..2.0 * PI).contains(p)));
        // serial reference for a subtree below the parallel split
        let hist = [1u8, 0, 0, 1, 1, 0, 1];
        let mut post = PhasePosterior::flat();
        for (i, &x) in hist.iter().enumerate() {
            post = post.update(x, a.phase(&hist[..i]).unwrap(), 1).unwrap();
        }
        assert_eq!(a.phase(&hist).unwrap(), optimize_feedback_phase(&post));
    }

    #[test]
    fn csv_round_trip() {
        let t = build_feedback_table(4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("history_bits,phi_radians\n,0.0000000000000000e0\n0,"));
        let back = FeedbackTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(FeedbackTable::read_csv("history_bits,phi_radians\n,0\n0,1\n".as_bytes()).is_err());
        assert!(FeedbackTable::read_csv("wrong\n,0\n".as_bytes()).is_err());
    }
}
