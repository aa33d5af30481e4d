//! Age-structured spiking network: exact particle simulation, the mean-field
//! renewal equation and a coupling harness for propagation of chaos.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chaos;
pub mod delays;
pub mod engine;
pub mod error;
pub mod intensity;
pub mod laws;
pub mod meanfield_mc;
pub mod output;
pub mod pde;
pub mod rng;
pub mod transport;

#[cfg(feature = "cli")]
pub mod cli;
#[cfg(feature = "cli")]
pub mod config;

pub use error::{Error, Result};
