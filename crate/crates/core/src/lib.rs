//! LeNet-5 digit classifier built from scratch, a white-box targeted iterative
//! FGSM attack against it, and a rotation-sweep defense that measures how much
//! true-class confidence returns when the adversarial image is rotated.
//!
//! The pipeline is split into one module per stage:
//!
//! - [`tensor`]: dense `f64` tensors and differentiable layer primitives.
//! - [`mnist`]: IDX parsing, normalization and dataset splits.
//! - [`model`]: the LeNet-5 network, SGD training and checkpoints.
//! - [`attack`]: targeted iterative FGSM under the `[0, 1]` box constraint.
//! - [`rotation`]: bilinear rotation and the angle sweep defense.
//! - [`experiment`]: config files and the attack/defend orchestration.
//! - [`report`]: CSV, summary and image file formats.

pub mod attack;
pub mod error;
pub mod experiment;
pub mod mnist;
pub mod model;
mod par;
pub mod report;
pub mod rotation;
pub mod tensor;

pub use error::{Error, Result};

/// Number of digit classes.
pub const NUM_CLASSES: usize = 10;
