//! Stein variational gradient descent with trainable step-size schedules.
//!
//! The sampler ([`engine`]) moves a [`ParticleSet`] along the kernelized
//! Stein direction of a [`ScoreModel`]. Step sizes come from a
//! [`StepSchedule`]: a constant, RMSProp, a vector of `T` trained steps
//! reused periodically, or a Chebyshev sequence driven by two trained
//! scalars. [`trainer`] learns those parameters by unfolding the sampler for
//! `T` iterations and descending a task loss with Adam.

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod kde;
pub mod kernels;
pub mod matrix;
pub mod particles;
pub mod rng;
pub mod selftest;
pub mod targets;
pub mod trainer;

pub use engine::{run, stein_direction, svgd_iterate, ChebyshevOrder, RunOptions, StepSchedule, SteinDirection};
pub use error::{Error, Result};
pub use kernels::{median_bandwidth, RbfKernel};
pub use matrix::Matrix;
pub use particles::{init_particles, ParticleSet};
pub use rng::{RngSeed, Stream};
pub use targets::ScoreModel;
