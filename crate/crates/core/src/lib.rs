//! Canonical-view reprojection toolkit.
//!
//! Observations captured from an unseen camera are lifted with depth, moved
//! into the fixed training camera, splatted with a z-buffer and hole-filled,
//! so an imitation policy trained on a single viewpoint keeps seeing inputs
//! from that viewpoint. Around that pipeline sit a deterministic tabletop
//! simulator, a nearest-neighbour chunked policy with a closed-loop rollout
//! driver, and the evaluation metrics (success tables, view generalization
//! score, masked PSNR/SSIM and a PCA feature scatter).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod geometry;
pub mod policy;
pub mod rng;
pub mod scene;
pub mod synthesis;

pub use error::{Error, Result};
