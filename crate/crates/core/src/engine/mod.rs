//! Decoder-only attention stack, greedy decoding with an image-logit hook,
//! and the binary weight and trace formats.

mod binio;
pub mod config;
pub mod decode;
pub mod referee;
pub mod sequence;
pub mod trace;
pub mod transformer;
pub mod vocab;
pub mod weights;

pub use config::ModelConfig;
pub use decode::{decode_greedy, AttentionHook, DecodeResult, DecoderModel, ForwardPass, HookContext, NoHook};
pub use referee::{RefereeParams, ScriptedReferee};
pub use sequence::{ImageSpan, TokenSequence};
pub use trace::{AttentionTrace, TraceLayout};
pub use transformer::Transformer;
pub use weights::{load_weights, seeded_weights, WeightSet};
