//! Selective multi-scale cascaded regression for 2-D landmark localization.
//!
//! The cascade crops small fixed-size patches around the current landmark
//! estimate on an image pyramid whose resolution doubles every iteration,
//! gates each patch descriptor with a local attention vector, carries a
//! recurrent hidden state between iterations and regresses both a shape
//! displacement and the expected normalized error of the result. Inference
//! stops as soon as the predicted error drops below a success threshold.
//!
//! Module map:
//!
//! - [`numerics`]: dense kernels with explicit backward passes and multiply-add accounting.
//! - [`geometry`]: shapes, pyramids, patch cropping, Procrustes alignment, NME.
//! - [`model`]: the per-iteration stage, the selective cascade and attention analysis.
//! - [`training`]: losses, augmentation, data balancing and the training loop.
//! - [`policy`]: early-exit threshold sweeps, random baselines and oracle curves.
//! - [`synthdata`]: deterministic synthetic faces plus `.pts`/PGM dataset I/O.

pub mod error;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod policy;
pub mod synthdata;
pub mod training;

pub use error::{Error, Result};
