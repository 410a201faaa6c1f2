//! Simulator for P-systems realized as multivesicular liposomes (MVLs).
//!
//! The crate covers four layers:
//!
//! - [`model`]: domain types — species with permeability classes, mixtures,
//!   spherical compartment trees, MVLs, rewriting/kinetic rules, system state.
//! - [`population`]: stochastic generation of MVL populations matching
//!   measured physical statistics, summary statistics, and swelling-solution
//!   embedding.
//! - [`engine`]: dynamics — maximally-parallel multiset rewriting in abstract
//!   mode; Fickian diffusion, enzyme kinetics, gas-driven swelling/bursting
//!   and electrical interventions in kinetic mode; trace recording.
//! - [`speclang`]: the `.psys` scenario language — parser with positioned
//!   diagnostics, canonical serializer, and lowering onto the model.

pub mod engine;
pub mod model;
pub mod population;
pub mod speclang;

pub use model::{Error, Result};
