//! Uncertainty-aware decoding of touch input into text.
//!
//! Touch observations arrive as bivariate Gaussians over the keyboard plane.
//! Each is fused in closed form with per-key touch distributions and combined
//! with character- and word-level n-gram priors, either greedily per
//! character or with a trie-constrained beam search.

pub mod decoder;
pub mod experiment;
pub mod error;
pub mod finger;
pub mod gaussian;
pub mod keyboard;
pub mod lexicon;
pub mod lm;
pub mod losses;
pub mod metrics;
pub mod numeric;
pub mod phrases;
pub mod simulator;

pub use error::{Error, Result};
pub use finger::{Finger, FrameDistribution};
pub use gaussian::{fuse, fit_gaussian, log_pdf, FusionResult, Gaussian2, Mat2, Vec2};
