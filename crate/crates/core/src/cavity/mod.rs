//! Cavity microwave fields: the TE₀₁₁ standing wave plus small azimuthal
//! perturbations synthesized for a given feed configuration,
//!
//! `H_z = H₀z + (2Δω/Γ + i) Σ_k w_k Σ_m g_m,z(ρ, z) cos(m(φ − φ_k))`.

mod field;
pub mod feeds;
pub mod field_map;
pub mod geometry;
pub mod parametric;

pub use feeds::{Feed, FeedConfig, FeedWeights};
pub use field::{CavityField, FieldSample, DEFAULT_NULL_FLOOR};
pub use field_map::{load_field_map, save_field_map, FieldMap, GComponent, Grid, Parity};
pub use geometry::{h0z_te011, CavityGeometry};
pub use parametric::ParametricModel;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("invalid cavity geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid feed configuration: {0}")]
    InvalidFeeds(String),
    #[error("invalid parametric model: {0}")]
    InvalidModel(String),
    #[error("point (ρ={rho}, z={z}) lies outside the cavity and cutoff tubes")]
    OutOfDomain { rho: f64, z: f64 },
    #[error("standing wave below the null floor at (ρ={rho}, z={z}); phase undefined")]
    NearNull { rho: f64, z: f64 },
    #[error("field map: {0}")]
    Parse(String),
    #[error("field map invariant violated for m={m} at (ρ={rho}, z={z}): {detail}")]
    InvariantViolation {
        m: u32,
        rho: f64,
        z: f64,
        detail: String,
    },
    #[error("field map does not match the cavity geometry: {0}")]
    GridMismatch(String),
    #[error("field map I/O: {0}")]
    Io(String),
}
