//! Confidence gate and the ScalingVis / AdaptVis decoding procedures.

use serde::{Deserialize, Serialize};

use crate::engine::decode::{decode_greedy, DecodeResult, DecoderModel, NoHook};
use crate::engine::sequence::TokenSequence;
use crate::engine::vocab;
use crate::error::{Error, Result};
use crate::intervention::spec::InterventionSpec;
use crate::intervention::transform::{AdditiveHook, ScalingHook};

/// How generation confidence is read off a decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    /// Probability of the first generated non-EOS token.
    #[default]
    FirstToken,
    /// Geometric mean of the probabilities of all generated non-EOS tokens.
    GeometricMean,
}

pub fn confidence_of_generation(result: &DecodeResult, mode: ConfidenceMode) -> f64 {
    match mode {
        ConfidenceMode::FirstToken => result.answer_confidence,
        ConfidenceMode::GeometricMean => {
            let logs: Vec<f64> = result
                .generated_ids
                .iter()
                .zip(&result.step_probs)
                .filter(|(t, _)| **t != vocab::EOS)
                .map(|(_, p)| p.ln())
                .collect();
            if logs.is_empty() {
                result.answer_confidence
            } else {
                (logs.iter().sum::<f64>() / logs.len() as f64).exp()
            }
        }
    }
}

/// `α1` when `confidence < β`, otherwise `α2` (equality takes `α2`).
pub fn gate_alpha(confidence: f64, spec: &InterventionSpec) -> Result<f64> {
    let InterventionSpec::AdaptVis { alpha1, alpha2, beta } = *spec else {
        return Err(Error::contract(format!("gate_alpha needs an adapt_vis spec, got {spec}")));
    };
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::contract(format!("confidence {confidence} outside [0, 1]")));
    }
    Ok(if confidence < beta { alpha1 } else { alpha2 })
}

/// Single greedy pass with every image logit of the final row scaled by `alpha`.
pub fn scalingvis_decode<M: DecoderModel + ?Sized>(
    model: &M,
    seq: &TokenSequence,
    alpha: f64,
    max_new: usize,
) -> Result<DecodeResult> {
    if !(alpha > 0.0) {
        return Err(Error::contract(format!("alpha must be positive, got {alpha}")));
    }
    decode_greedy(model, seq, &ScalingHook { alpha }, max_new)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveDecode {
    pub result: DecodeResult,
    /// The unintervened measuring pass.
    pub pass1: DecodeResult,
    pub confidence: f64,
    pub chosen_alpha: f64,
}

pub fn adaptvis_decode<M: DecoderModel + ?Sized>(
    model: &M,
    seq: &TokenSequence,
    spec: &InterventionSpec,
    max_new: usize,
) -> Result<AdaptiveDecode> {
    adaptvis_decode_with(model, seq, spec, ConfidenceMode::FirstToken, max_new)
}

/// Pass 1 is plain greedy decoding and yields the confidence; pass 2 is
/// [`scalingvis_decode`] with the gated coefficient.
pub fn adaptvis_decode_with<M: DecoderModel + ?Sized>(
    model: &M,
    seq: &TokenSequence,
    spec: &InterventionSpec,
    mode: ConfidenceMode,
    max_new: usize,
) -> Result<AdaptiveDecode> {
    spec.validate()?;
    if !matches!(spec, InterventionSpec::AdaptVis { .. }) {
        return Err(Error::contract(format!("adaptvis_decode needs an adapt_vis spec, got {spec}")));
    }
    let pass1 = decode_greedy(model, seq, &NoHook, max_new)?;
    let confidence = confidence_of_generation(&pass1, mode);
    let chosen_alpha = gate_alpha(confidence, spec)?;
    let result = scalingvis_decode(model, seq, chosen_alpha, max_new)?;
    Ok(AdaptiveDecode {
        result,
        pass1,
        confidence,
        chosen_alpha,
    })
}

/// Result of decoding one item under any method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecode {
    pub result: DecodeResult,
    /// Confidence of the unintervened pass for adapt_vis, else of `result`.
    pub gate_confidence: f64,
    /// Coefficient actually applied (1 for baseline and additive).
    pub alpha: f64,
}

pub fn decode_with_spec<M: DecoderModel + ?Sized>(
    model: &M,
    seq: &TokenSequence,
    spec: &InterventionSpec,
    max_new: usize,
) -> Result<MethodDecode> {
    spec.validate()?;
    let plain = |result: DecodeResult, alpha| MethodDecode {
        gate_confidence: result.answer_confidence,
        result,
        alpha,
    };
    match *spec {
        InterventionSpec::Baseline => Ok(plain(decode_greedy(model, seq, &NoHook, max_new)?, 1.0)),
        InterventionSpec::ScalingVis { alpha } => Ok(plain(scalingvis_decode(model, seq, alpha, max_new)?, alpha)),
        InterventionSpec::Additive { constant } => {
            Ok(plain(decode_greedy(model, seq, &AdditiveHook { constant }, max_new)?, 1.0))
        }
        InterventionSpec::AdaptVis { .. } => {
            let a = adaptvis_decode(model, seq, spec, max_new)?;
            Ok(MethodDecode {
                result: a.result,
                gate_confidence: a.confidence,
                alpha: a.chosen_alpha,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_follows_threshold() {
        let spec = InterventionSpec::adapt_vis(0.5, 2.0, 0.3).unwrap();
        assert_eq!(gate_alpha(0.2, &spec).unwrap(), 0.5);
        assert_eq!(gate_alpha(0.9, &spec).unwrap(), 2.0);
        assert_eq!(gate_alpha(0.3, &spec).unwrap(), 2.0);
        assert!(gate_alpha(1.2, &spec).is_err());
        assert!(gate_alpha(0.5, &InterventionSpec::Baseline).is_err());
    }

    #[test]
    fn zero_threshold_always_sharpens() {
        let spec = InterventionSpec::adapt_vis(0.5, 2.0, 0.0).unwrap();
        for c in [1e-9, 0.1, 0.5, 1.0] {
            assert_eq!(gate_alpha(c, &spec).unwrap(), 2.0);
        }
    }
}
