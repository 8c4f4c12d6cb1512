//! ScalingVis, AdaptVis and the additive baseline.

pub mod decode;
pub mod spec;
pub mod transform;
pub mod tune;

pub use decode::{
    adaptvis_decode, adaptvis_decode_with, confidence_of_generation, decode_with_spec, gate_alpha,
    scalingvis_decode, AdaptiveDecode, ConfidenceMode, MethodDecode,
};
pub use spec::{InterventionSpec, Method};
pub use transform::{add_constant, scale_image_logits, AdditiveHook, ScalingHook};
pub use tune::{beta_range, tune_hyperparameters, HyperGrid, ItemOutcome, TuneMode, TuneResult};
