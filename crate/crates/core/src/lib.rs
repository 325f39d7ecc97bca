//! Simulation of GKP grid-state preparation by phase estimation, together with
//! the metrics, error-expansion, error-correction and pulse calculations used
//! to analyse the prepared states.

pub mod circular;
pub mod cv_qec;
pub mod error;
pub mod gaussian_states;
pub mod metrics;
pub mod phase_posterior;
pub mod protocols;
pub mod pulses;
pub mod quadrature;
pub mod rng;
pub mod shift_expansion;
pub mod special;
pub mod state_synthesis;

pub use error::{Error, Result};
pub use gaussian_states::{LatticeSuperposition, Quadrature, SqueezedVacuum};
pub use phase_posterior::PhasePosterior;
pub use protocols::{FeedbackTable, Protocol, RoundRecord, Trajectory};
pub use cv_qec::{PhaseFrame, ShiftVector, SymplecticMap};
pub use pulses::{DispersiveParams, PulseSpec};
