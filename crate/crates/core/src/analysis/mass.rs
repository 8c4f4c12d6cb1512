//! Attention-mass accounting over the image span.

use crate::engine::trace::AttentionTrace;
use crate::error::Result;
use crate::tensor::variance;

/// Per layer, the head-mean probability mass that `row` puts on image tokens.
/// The text share is one minus this.
pub fn image_attention_share(trace: &AttentionTrace, row: usize) -> Result<Vec<f64>> {
    let c = trace.config();
    let span = trace.image_span();
    (0..c.layers)
        .map(|l| {
            let mut total = 0.0;
            for h in 0..c.heads {
                let p = trace.row_probs(l, h, row)?;
                total += p[span.range()].iter().sum::<f64>();
            }
            Ok(total / c.heads as f64)
        })
        .collect()
}

/// Head-mean probability of each image token, one vector per layer.
pub fn head_mean_image_probs(trace: &AttentionTrace, row: usize) -> Result<Vec<Vec<f64>>> {
    let c = trace.config();
    let span = trace.image_span();
    (0..c.layers)
        .map(|l| {
            let mut acc = vec![0.0; span.len];
            for h in 0..c.heads {
                let p = trace.row_probs(l, h, row)?;
                for (a, v) in acc.iter_mut().zip(&p[span.range()]) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= c.heads as f64);
            Ok(acc)
        })
        .collect()
}

/// Per layer, the population variance of the head-mean image-token probabilities.
pub fn layer_variance(trace: &AttentionTrace, row: usize) -> Result<Vec<f64>> {
    head_mean_image_probs(trace, row)?
        .iter()
        .map(|v| variance(v))
        .collect()
}
