//! Non-expansive operator toolkit for multi-agent optimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`operator`], [`iteration`], [`certify`]: generic operators, KM and
//!   Picard iterations, and sampled certificate checks.
//! - [`cost`], [`splitting`]: cost functions and the gradient, proximal,
//!   reflective, proximal-gradient and Peaceman-Rachford operators.
//! - [`graph`], [`consensus`]: topologies, Metropolis-Hastings weights,
//!   spectral certification, static and dynamic average consensus.
//! - [`algorithms`]: DGD/ATC, gradient tracking (both forms) and distributed
//!   ADMM (both forms) as agent-local protocols.
//! - [`sim`]: round-based execution with asynchrony, packet loss and
//!   quantization.
//! - [`experiment`]: configuration, reference solutions and reports used by
//!   the command-line runner.

pub mod algorithms;
pub mod certify;
pub mod consensus;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod iteration;
pub mod operator;
pub mod sim;
pub mod splitting;

pub use error::{Error, Result};
pub use operator::{Matrix, Operator, Property, Vector};
