//! Run time assurance (RTA) for reinforcement learning at desk scale.
//!
//! The crate bundles three discrete-time plants (an inverted pendulum and
//! 2D/3D Clohessy-Wiltshire docking), their safety constraints and backup
//! controllers, four RTA filter classes (explicit/implicit simplex and
//! explicit/implicit active set-invariance filters), small from-scratch PPO
//! and SAC learners, the five training configurations that decide how an RTA
//! intervention is shown to the learner, and a seeded training/evaluation
//! harness.
//!
//! Everything here is pure computation over `alloc`; file formats, the CLI and
//! study orchestration live in the `rta-lab` crate.
#![no_std]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod rng;
pub mod rta;
pub mod safety;
pub mod trainconfig;

mod math;

pub use error::{ConfigError, LearnerError};
