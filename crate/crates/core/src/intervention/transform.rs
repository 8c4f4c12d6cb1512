//! Image-block row transforms and the hooks that apply them inside the engine.

use crate::engine::decode::{AttentionHook, HookContext};
use crate::engine::sequence::ImageSpan;
use crate::error::{Error, Result};

/// `α·A[j]` on the image span, everything else copied.
pub fn scale_image_logits(row: &[f64], span: ImageSpan, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::contract(format!("alpha must be positive, got {alpha}")));
    }
    span.check_within(row.len())?;
    let mut out = row.to_vec();
    for v in &mut out[span.range()] {
        *v *= alpha;
    }
    Ok(out)
}

/// `A[j] + c` on the image span.
pub fn add_constant(row: &[f64], span: ImageSpan, c: f64) -> Result<Vec<f64>> {
    if !c.is_finite() {
        return Err(Error::contract("constant must be finite"));
    }
    span.check_within(row.len())?;
    let mut out = row.to_vec();
    for v in &mut out[span.range()] {
        *v += c;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingHook {
    pub alpha: f64,
}

impl AttentionHook for ScalingHook {
    fn apply(&self, _ctx: HookContext, image_logits: &mut [f64]) {
        for v in image_logits {
            *v *= self.alpha;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveHook {
    pub constant: f64,
}

impl AttentionHook for AdditiveHook {
    fn apply(&self, _ctx: HookContext, image_logits: &mut [f64]) {
        for v in image_logits {
            *v += self.constant;
        }
    }
}
