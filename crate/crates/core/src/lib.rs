//! Desk-scale multimodal decoding with image-attention temperature
//! interventions, plus the tools to measure where the attention goes.
//!
//! * [`engine`]: decoder-only attention stack, greedy decoding with a hook on
//!   the final row's image logits, AIW1 weights and AIT1 traces, and a
//!   scripted referee model.
//! * [`intervention`]: ScalingVis, AdaptVis, the additive baseline and
//!   coefficient tuning.
//! * [`analysis`]: attention mass, patch maps, bbox overlap, AUROC, entropy,
//!   skewness and heatmaps.
//! * [`bench`]: synthetic spatial scenes, dataset ingestion and scoring.
//! * [`harness`]: the `run` / `tune` experiment driver.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bench;
pub mod engine;
pub mod error;
pub mod harness;
pub mod intervention;
pub mod relation;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use relation::Relation;
