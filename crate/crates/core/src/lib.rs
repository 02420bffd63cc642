//! Privacy-accuracy games between a learner and many users who can each
//! obfuscate their data with Gaussian noise.
//!
//! - [`model`]: game constants, accuracy and privacy levels, utilities.
//! - [`mfg`]: the users' mean-field game given the learner's noise.
//! - [`stackelberg`]: the learner's promise and the resulting equilibrium.
//! - [`erm`]: empirical check of how excess risk scales with injected noise.
//! - [`dp`]: Gaussian-mechanism `ε` calibration.

pub mod dp;
pub mod erm;
pub mod mfg;
pub mod model;
pub mod seed;
pub mod stackelberg;

pub use model::{
    GameParams, ModelConventions, NoiseProfile, ParamError, PrivacyExponent, PrivacyLevel,
};
