//! Simulation and per-trajectory verification of the N-particle branching
//! random walk with regularly varying jump tails.
//!
//! The crate simulates the process by two independent constructions, tracks
//! genealogy, evaluates the record, coalescence and spatial events used in the
//! analysis of the model, checks the deterministic implications between them
//! on every trajectory, and runs Monte-Carlo experiments at desk scale.

pub mod cli;
pub mod engine;
pub mod error;
pub mod events;
pub mod experiments;
pub mod genealogy;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod tails;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
