//! Surgical skill assessment from robot kinematics.
//!
//! A grouped 1-D fully convolutional network reads 76-channel kinematic
//! recordings and either classifies the operator's skill level
//! (novice / intermediate / expert) or regresses the six OSATS rating
//! components. Class activation maps localize which timestamps drove each
//! output, and the evaluation harness runs leave-one-super-trial-out
//! cross-validation with repeated seeded trainings.
//!
//! All numerics are `f64` and hand-written; there is no external tensor
//! library.

pub mod cam;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod kinematics;
pub mod matrix;
pub mod nn;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use kinematics::{
    ChannelLayout, DatasetManifest, KinematicTrial, OsatsScores, SkillLevel, StandardizationStats,
    Task,
};
pub use matrix::Matrix;
pub use nn::{FcnModel, ForwardTrace, Gradients, HeadKind, Target};
pub use training::{TrainConfig, TrainHistory};
