//! Simulation and estimation toolkit for masking the real ququart.
//!
//! The crate covers the masking isometry built from Hurwitz-Radon matrices,
//! the equivalent coined quantum walk, a Jones-calculus model of the optical
//! setup, finite-shot measurement simulation, and the estimators used to
//! characterize the masked states (verification-based fidelity, single-qubit
//! maximum-likelihood tomography and correlation-matrix decoding).

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod masker;
pub mod measure;
pub mod optics;
pub mod qcore;
pub mod walk;

pub use error::{Error, Result};
