//! Per-(item, layer) metric rows and CSV output.

use std::path::Path;

use serde::Serialize;

use crate::analysis::mass::{head_mean_image_probs, image_attention_share};
use crate::analysis::patch::{bbox_overlap_cosine, BBoxMask, PatchAttentionMap};
use crate::analysis::stats::{attention_entropy, attention_skewness};
use crate::engine::trace::AttentionTrace;
use crate::error::{Error, Result};
use crate::tensor::variance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerMetrics {
    pub item_id: String,
    pub layer: usize,
    pub image_share: f64,
    pub variance: f64,
    pub entropy: f64,
    /// Empty when the image distribution has no spread.
    pub skewness: Option<f64>,
    pub bbox_cosine: Option<f64>,
}

/// Metrics of the final row of `trace` for every layer, on head-mean image probabilities.
pub fn layer_metrics(item_id: &str, trace: &AttentionTrace, mask: Option<&BBoxMask>) -> Result<Vec<LayerMetrics>> {
    let row = trace.last_row();
    let shares = image_attention_share(trace, row)?;
    let side = trace.config().patch_side;
    head_mean_image_probs(trace, row)?
        .into_iter()
        .enumerate()
        .map(|(layer, probs)| {
            let bbox_cosine = match mask {
                Some(m) if probs.len() == side * side => {
                    let map = PatchAttentionMap::from_values(side, probs.clone())?;
                    Some(bbox_overlap_cosine(&map, m)?)
                }
                _ => None,
            };
            Ok(LayerMetrics {
                item_id: item_id.to_string(),
                layer,
                image_share: shares[layer],
                variance: variance(&probs)?,
                entropy: attention_entropy(&probs)?,
                skewness: attention_skewness(&probs).ok(),
                bbox_cosine,
            })
        })
        .collect()
}

/// Header row plus one record per element.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::contract(format!("csv serialisation failed: {other:?}")),
    }
}
