//! Executable realization-stability analysis for discrete-time feedback
//! systems.
//!
//! A closed loop is described by its realization matrix `R` (`η = Rη + d`);
//! its internal stability matrix is `S = (I - R)^-1`, computed exactly over
//! rational functions of `z`. Additive perturbations `R + Δ` feed back around
//! the nominal `S`, which is the basis for every robust check in
//! [`param`] and the Monte-Carlo certificates in [`robust`].

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod param;
pub mod ratfun;
pub mod realization;
pub mod robust;

pub use error::{Error, Result};
pub use exec::Execution;
pub use ratfun::{QMatrix, RationalFunction, StabilityStatus, StabilityVerdict, StateSpace, TransferMatrix};
pub use realization::RealizationSystem;
