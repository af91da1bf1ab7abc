//! Stationary entanglement between a suspended mirror and the light in a
//! driven optomechanical cavity, with Markovian, structural-damping and
//! interferometer-style classical noise.
//!
//! The pipeline is: [`model`] parameters and [`spectra`] feed the
//! frequency-domain [`dynamics`]; [`covariance`] turns output cross spectra
//! into a discretized covariance matrix; [`entanglement`] runs the PPT test,
//! symplectic spectrum and mode extraction. [`oracles`] holds closed-form
//! references and [`cli`] the job runner.

pub mod cli;
pub mod covariance;
pub mod dynamics;
pub mod entanglement;
pub mod error;
mod lsq;
pub mod model;
pub mod oracles;
pub mod spectra;

pub use error::{Error, Result};
