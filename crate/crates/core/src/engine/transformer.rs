//! Decoder-only attention stack.
//!
//! Per layer: RMS-normalised input, per-head `A = QKᵀ/√d_h`, hook on the
//! final row's image columns, causal softmax, `PV`, output projection with a
//! residual, then a single `tanh(x·W_ff)` residual block. The final position
//! is RMS-normalised and projected onto the vocabulary.

use crate::engine::config::ModelConfig;
use crate::engine::decode::{AttentionHook, DecoderModel, ForwardPass, HookContext};
use crate::engine::sequence::TokenSequence;
use crate::engine::trace::{AttentionTrace, TraceLayout};
use crate::engine::weights::WeightSet;
use crate::error::{Error, Result};
use crate::tensor::{matmul, softmax_row, MaskedRow, Matrix};

const RMS_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Transformer {
    weights: WeightSet,
}

impl Transformer {
    pub fn new(weights: WeightSet) -> Result<Self> {
        weights.validate()?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    fn embed(&self, seq: &TokenSequence) -> Result<Matrix> {
        let c = &self.weights.config;
        let d = c.model_dim;
        let mut x = Matrix::zeros(seq.len(), d);
        for (i, tok) in seq.token_ids.iter().enumerate() {
            let row = x.row_mut(i);
            let src = match (&seq.patch_embeddings, seq.image_span.contains(i)) {
                (Some(p), true) => p.row(i - seq.image_span.offset),
                _ => {
                    if *tok as usize >= c.vocab_size {
                        return Err(Error::Config(format!(
                            "token id {tok} outside vocabulary of {}",
                            c.vocab_size
                        )));
                    }
                    self.weights.token_embedding.row(*tok as usize)
                }
            };
            if src.len() != d {
                return Err(Error::Shape(format!("embedding width {} != model_dim {d}", src.len())));
            }
            let pos = self.weights.position_embedding.row(i);
            for ((o, s), p) in row.iter_mut().zip(src).zip(pos) {
                *o = s + p;
            }
        }
        Ok(x)
    }
}

fn rms_norm_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let ms = row.iter().fold(0.0, |a, v| a + v * v) / row.len() as f64;
        let inv = 1.0 / (ms + RMS_EPS).sqrt();
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
    out
}

impl DecoderModel for Transformer {
    fn config(&self) -> &ModelConfig {
        &self.weights.config
    }

    fn forward(&self, seq: &TokenSequence, hook: &dyn AttentionHook, step: usize) -> Result<ForwardPass> {
        let c = self.weights.config;
        let n = seq.len();
        if n == 0 {
            return Err(Error::contract("empty sequence"));
        }
        if n > c.max_seq {
            return Err(Error::Capacity { len: n, max: c.max_seq });
        }
        seq.image_span.check_within(n)?;
        let dh = c.head_dim;
        let scale = 1.0 / (dh as f64).sqrt();
        let span = seq.image_span;
        let last = n - 1;

        let mut x = self.embed(seq)?;
        let mut trace = vec![f64::NEG_INFINITY; c.layers * c.heads * n * n];
        let mut pre_hook = vec![f64::NEG_INFINITY; c.layers * c.heads * n];

        for (l, lw) in self.weights.layers.iter().enumerate() {
            let h = rms_norm_rows(&x);
            let q = matmul(&h, &lw.wq)?;
            let k = matmul(&h, &lw.wk)?;
            let v = matmul(&h, &lw.wv)?;
            let mut concat = Matrix::zeros(n, c.model_dim);
            for head in 0..c.heads {
                let qh = q.column_block(head * dh, dh);
                let kh = k.column_block(head * dh, dh);
                let vh = v.column_block(head * dh, dh);
                let base = (l * c.heads + head) * n * n;
                let mut probs = Matrix::zeros(n, n);
                for i in 0..n {
                    let mut row = vec![f64::NEG_INFINITY; n];
                    let qi = qh.row(i);
                    for (j, slot) in row.iter_mut().enumerate().take(i + 1) {
                        let kj = kh.row(j);
                        let dot = qi.iter().zip(kj).fold(0.0, |a, (x, y)| a + x * y);
                        *slot = dot * scale;
                    }
                    if i == last {
                        let pre = (l * c.heads + head) * n;
                        pre_hook[pre..pre + n].copy_from_slice(&row);
                        let ctx = HookContext { step, layer: l, head };
                        let end = span.end().min(i + 1);
                        if span.offset < end {
                            hook.apply(ctx, &mut row[span.offset..end]);
                        }
                    }
                    trace[base + i * n..base + (i + 1) * n].copy_from_slice(&row);
                    let p = softmax_row(&MaskedRow::causal(row, i)?);
                    probs.row_mut(i).copy_from_slice(&p);
                }
                let out = matmul(&probs, &vh)?;
                for i in 0..n {
                    concat.row_mut(i)[head * dh..(head + 1) * dh].copy_from_slice(out.row(i));
                }
            }
            let attn = matmul(&concat, &lw.wo)?;
            for (xv, av) in x.data_mut().iter_mut().zip(attn.data()) {
                *xv += av;
            }
            let ff = matmul(&rms_norm_rows(&x), &lw.ff)?;
            for (xv, fv) in x.data_mut().iter_mut().zip(ff.data()) {
                *xv += fv.tanh();
            }
        }

        let final_row = Matrix::from_vec(1, c.model_dim, x.row(last).to_vec())?;
        let logits = matmul(&rms_norm_rows(&final_row), &self.weights.unembed)?.into_vec();
        let trace = AttentionTrace::new(c, span, n, TraceLayout::Full, trace)?.with_pre_hook(pre_hook)?;
        Ok(ForwardPass {
            next_token_logits: logits,
            trace,
        })
    }
}
