//! Shared fixtures for the benchmarks.

use gkpsim::{PhasePosterior, Protocol};

/// Posterior after `m` nonadaptive rounds with alternating outcomes.
pub fn posterior_after(m: usize) -> PhasePosterior {
    let schedule = gkpsim::protocols::nonadaptive_schedule(m).expect("even round count");
    schedule
        .iter()
        .enumerate()
        .fold(PhasePosterior::flat(), |post, (i, &(mult, phi))| {
            post.update((i % 2) as u8, phi, mult).expect("valid round")
        })
}

/// Protocols compared in enumeration benchmarks.
pub const ENUMERATED: [Protocol; 2] = [Protocol::Nonadaptive, Protocol::Adaptive];
