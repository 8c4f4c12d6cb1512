//! Attention interpretability: mass accounting, patch maps, bbox overlap,
//! AUROC, entropy and skewness, heatmaps.

pub mod dump;
pub mod heatmap;
pub mod mass;
pub mod patch;
pub mod stats;

pub use dump::{layer_metrics, write_csv, LayerMetrics};
pub use heatmap::{export_heatmap, heatmap_ppm, ColorRamp};
pub use mass::{head_mean_image_probs, image_attention_share, layer_variance};
pub use patch::{
    bbox_overlap_cosine, map_to_patch_grid, parse_bbox_file, patch_cell, BBoxMask, BBoxRecord, HeadSelect,
    MapSource, PatchAttentionMap,
};
pub use stats::{attention_entropy, attention_skewness, auroc, ScoredSample};

use crate::engine::config::ModelConfig;

/// Mid-stack layer used for overlap analysis: `⌊L·17/32⌋`.
pub fn default_analysis_layer(config: &ModelConfig) -> usize {
    (config.layers * 17 / 32).min(config.layers.saturating_sub(1))
}
