//! Exponential-weights learners for adversarial linear contextual bandits.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod benchmarks;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod learner;
pub mod mgr;
pub mod numkit;
pub mod rng;

pub use environment::{AdversaryKind, AdversarySpec, ContextDistribution, Environment, MisspecSpec};
pub use error::{Error, Result};
pub use evaluation::{Algorithm, LearnerConfig, RegretCurve, RunRecord};
pub use learner::{LearnerState, MgrMode, Policy, TunedParams};
pub use mgr::MgrConfig;
pub use numkit::{Matrix, SymMatrix, Vector};
