//! Monte Carlo simulation of distributed cavity phase (DCP) frequency shifts
//! in laser-cooled atomic fountain clocks.
//!
//! The crate is layered bottom-up:
//!
//! * [`cavity`] synthesizes the axial microwave field `H_z` inside a TE₀₁₁
//!   clock cavity from a standing wave plus small azimuthal perturbations
//!   `g_m(ρ, z) cos(mφ)` excited by the feeds.
//! * [`dynamics`] integrates a two-level atom through the time-dependent Rabi
//!   drive of each cavity traversal and composes Ramsey sequences.
//! * [`montecarlo`] samples ballistic fountain trajectories, applies tilt,
//!   apertures and detection weighting, and aggregates transition-probability
//!   offsets with common random numbers.
//! * [`experiments`] scripts amplitude, tilt and phase-imbalance sweeps and the
//!   feed-balancing and zero-tilt procedures.
//! * [`cli`] holds the JSON configuration schema, run manifests and the
//!   CSV/JSON writers behind the `dcp-sim` binary.

pub mod cavity;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod montecarlo;

pub use error::{Error, ErrorCategory};
