//! Two-path interferometric extraction of the Zak phase in SSH-type chains.
//!
//! Bloch eigenstates are evolved along mirror momentum–time paths; the
//! dynamical phase cancels in the cross-path comparison and what remains is
//! checked against winding-number and Wilson-loop invariants. A carrier-frequency
//! resonator model (`labframe`) validates the rotating-frame reduction.

pub mod cli;
pub mod embed;
pub mod error;
pub mod evolve;
pub mod invariants;
pub mod labframe;
pub mod model;
pub mod output;
pub mod phase;

pub use error::{Error, Result};
pub use model::{Band, BlochVector, EigenPair, KSchedule, ModelParams, PathVariant};
