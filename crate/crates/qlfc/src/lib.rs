//! Variational quantum gain scheduling for diesel-generator frequency control.
//!
//! A 3-qubit variational circuit is trained by supervised learning on
//! expert-labeled frequency-deviation windows to select PI-controller gains
//! from a small lookup table. The crate covers the full pipeline: exact
//! statevector simulation with shot sampling ([`qsim`]), the feature map,
//! ansatz, loss, and gradients ([`vqc`]), the governor/engine/inertia plant
//! loop ([`plant`]), expert data generation ([`expert`]), supervised training
//! and shot-noise evaluation ([`trainer`]), and closed-loop deployment plus
//! the CLI pipeline ([`harness`], [`cli`]).

pub mod cli;
pub mod config;
pub mod error;
pub mod expert;
pub mod harness;
pub mod plant;
pub mod qsim;
pub mod trainer;
pub mod vqc;

pub use error::{Error, Result};
