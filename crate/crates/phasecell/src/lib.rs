//! Cell segmentation for phase contrast microscopy sequences.
//!
//! The pipeline has two stages. Background subtraction decomposes the stack
//! of frames into a low-rank background and a structured-sparse foreground
//! (nuclear norm + generalized fused lasso, solved by augmented Lagrange
//! multipliers). Restoration then deconvolves each foreground frame with a
//! bank of regularized inverse diffraction patterns, fuses the responses
//! into a score map, thresholds, and labels connected components.
//!
//! Entry points:
//!
//! - [`synth`]: forward-model synthetic sequences with exact ground truth.
//! - [`lowrank::decompose`]: background/foreground separation.
//! - [`optics`]: PSF bank and frequency-domain (de)convolution.
//! - [`segment::run_pipeline`]: the full stack-to-masks pipeline.
//! - [`eval`]: pixel-accuracy scoring, Otsu baseline, stage timing.
//!
//! The `examples/` directory walks through each capability; the `phasecell`
//! binary exposes the same steps as batch subcommands.

pub mod config;
pub mod error;
pub mod eval;
pub mod gfl;
pub mod image;
pub mod lowrank;
pub mod optics;
pub mod segment;
pub mod synth;

pub mod cli;

pub use error::{Error, Result};
