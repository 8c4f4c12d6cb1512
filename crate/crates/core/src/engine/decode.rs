use crate::engine::config::ModelConfig;
use crate::engine::sequence::TokenSequence;
use crate::engine::trace::AttentionTrace;
use crate::engine::vocab;
use crate::error::{Error, Result};
use crate::tensor::{argmax, softmax};

/// Where a hook invocation sits inside a decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HookContext {
    pub step: usize,
    pub layer: usize,
    pub head: usize,
}

/// Transformation of the final query row's image-token logits, applied after
/// the scaled dot product and before masking and softmax.
///
/// The engine hands the hook only the image-span slice of the final row, so
/// text columns and earlier rows cannot be touched.
pub trait AttentionHook: Sync {
    fn apply(&self, ctx: HookContext, image_logits: &mut [f64]);
}

/// Identity hook.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHook;

impl AttentionHook for NoHook {
    fn apply(&self, _ctx: HookContext, _image_logits: &mut [f64]) {}
}

impl<F> AttentionHook for F
where
    F: Fn(HookContext, &mut [f64]) + Sync,
{
    fn apply(&self, ctx: HookContext, image_logits: &mut [f64]) {
        self(ctx, image_logits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub next_token_logits: Vec<f64>,
    pub trace: AttentionTrace,
}

/// Anything that maps a sequence (plus a hook) to next-token logits and an attention trace.
pub trait DecoderModel {
    fn config(&self) -> &ModelConfig;

    fn forward(&self, seq: &TokenSequence, hook: &dyn AttentionHook, step: usize) -> Result<ForwardPass>;
}

impl<M: DecoderModel + ?Sized> DecoderModel for &M {
    fn config(&self) -> &ModelConfig {
        (**self).config()
    }

    fn forward(&self, seq: &TokenSequence, hook: &dyn AttentionHook, step: usize) -> Result<ForwardPass> {
        (**self).forward(seq, hook, step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub generated_ids: Vec<u32>,
    /// Probability of each emitted token under its step's softmax.
    pub step_probs: Vec<f64>,
    /// Trace of the last forward pass.
    pub trace: AttentionTrace,
    /// Probability of the first generated non-EOS token.
    pub answer_confidence: f64,
}

impl DecodeResult {
    /// First generated token that is not end-of-answer.
    pub fn answer_token(&self) -> Option<u32> {
        self.generated_ids.iter().copied().find(|t| *t != vocab::EOS)
    }

    pub fn answer_text(&self) -> &'static str {
        self.answer_token().map_or("", vocab::word)
    }

    /// Bitwise equality, including every trace logit.
    pub fn bit_identical(&self, other: &DecodeResult) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.generated_ids == other.generated_ids
            && bits(&self.step_probs) == bits(&other.step_probs)
            && self.answer_confidence.to_bits() == other.answer_confidence.to_bits()
            && bits(self.trace.raw_logits()) == bits(other.trace.raw_logits())
    }
}

/// Greedy decoding. Ties go to the lower token id; stops after `max_new`
/// tokens or when end-of-answer is emitted. The hook runs on the then-current
/// final row at every step.
pub fn decode_greedy<M: DecoderModel + ?Sized>(
    model: &M,
    seq: &TokenSequence,
    hook: &dyn AttentionHook,
    max_new: usize,
) -> Result<DecodeResult> {
    if max_new == 0 {
        return Err(Error::contract("max_new must be at least 1"));
    }
    let mut current = seq.clone();
    let mut generated = Vec::with_capacity(max_new);
    let mut step_probs = Vec::with_capacity(max_new);
    let mut last_trace = None;
    for step in 0..max_new {
        let pass = model.forward(&current, hook, step)?;
        let token = argmax(&pass.next_token_logits)
            .ok_or_else(|| Error::contract("model produced empty logits"))? as u32;
        let probs = softmax(&pass.next_token_logits);
        step_probs.push(probs[token as usize]);
        generated.push(token);
        last_trace = Some(pass.trace);
        if token == vocab::EOS {
            break;
        }
        if step + 1 < max_new {
            current = current.extended(token);
        }
    }
    let answer_confidence = generated
        .iter()
        .position(|t| *t != vocab::EOS)
        .map_or(step_probs[0], |i| step_probs[i]);
    Ok(DecodeResult {
        generated_ids: generated,
        step_probs,
        trace: last_trace.expect("at least one step ran"),
        answer_confidence,
    })
}
