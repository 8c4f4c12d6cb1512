//! Synthetic spatial benchmark, external dataset ingestion and scoring.

pub mod dataset;
pub mod encode;
pub mod metrics;
pub mod phrases;
pub mod scene;

pub use dataset::{generate_controlled_set, load_vsr_json, load_whatsup_json, make_question, EvalItem, Question};
pub use encode::{build_prompt, encode_scene};
pub use metrics::{label_distribution, score, EvalReport, Prediction};
pub use phrases::count_relation_phrases;
pub use scene::{ControlledMode, SceneSpec};
