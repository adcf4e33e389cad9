//! Photon-counting quantum reading of an optical memory.
//!
//! A memory cell stores one bit as one of two transmittances `τ₀ < τ₁`. The
//! crate models how a coherent (classical) or two-mode squeezed vacuum (TMSV)
//! probe is degraded by the cell and by imperfect detection, derives the
//! Bayesian photon-counting receivers for both, and reproduces the frame-based
//! experiment end to end:
//!
//! * [`photon_stats`]: photon-number distributions, binomial loss channels and
//!   TMSV joint count statistics.
//! * [`discriminate`]: decision rules, closed-form and exhaustive error
//!   probabilities, the classical bound and information gains.
//! * [`montecarlo`]: a seeded frame generator emulating integrated CCD regions.
//! * [`calibrate`]: Klyshko-style efficiency, straylight and read-noise estimation.
//! * [`pipeline`]: empirical error probabilities, gain reports, sweeps and
//!   memory read-out round trips.

pub mod calibrate;
pub mod discriminate;
mod error;
pub mod frames;
pub mod montecarlo;
pub mod photon_stats;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Which of the two channels was (or is decided to have been) applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Transmittance τ₀ (deposition present, bit 0).
    Tau0,
    /// Transmittance τ₁ (no deposition, bit 1).
    Tau1,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::Tau0, Hypothesis::Tau1];

    pub fn index(self) -> usize {
        match self {
            Hypothesis::Tau0 => 0,
            Hypothesis::Tau1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Hypothesis::Tau0),
            1 => Some(Hypothesis::Tau1),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Hypothesis::Tau0 => Hypothesis::Tau1,
            Hypothesis::Tau1 => Hypothesis::Tau0,
        }
    }
}
