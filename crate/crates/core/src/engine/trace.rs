//! Captured attention logits and the AIT1 trace file format.
//!
//! ```text
//! magic      "AIT1" (full)  or  "AITR" (final row only)
//! header     7 x u32 LE: layers, heads, model_dim, head_dim, vocab, patch_side, max_seq
//! n          u32 LE
//! span       u32 LE offset, u32 LE length
//! payload    f64 LE, [L][H][n][n] for AIT1, [L][H][n] for AITR
//! ```
//!
//! Entries with column > row are stored as `-inf`.

use std::path::Path;

use crate::engine::binio::{put_f64, put_u32, Reader};
use crate::engine::config::ModelConfig;
use crate::engine::sequence::ImageSpan;
use crate::error::{Error, Result};
use crate::tensor::{softmax_row, MaskedRow};

pub const TRACE_MAGIC: &[u8; 4] = b"AIT1";
pub const ROW_TRACE_MAGIC: &[u8; 4] = b"AITR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLayout {
    /// Every query row of every layer and head.
    Full,
    /// Only the final query row of each layer and head.
    LastRow,
}

/// Pre-softmax attention logits for one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    config: ModelConfig,
    image_span: ImageSpan,
    seq_len: usize,
    layout: TraceLayout,
    logits: Vec<f64>,
    pre_hook: Option<Vec<f64>>,
}

impl AttentionTrace {
    /// `logits` is `[L][H][n][n]` (full) or `[L][H][n]` (last row), row-major.
    pub fn new(
        config: ModelConfig,
        image_span: ImageSpan,
        seq_len: usize,
        layout: TraceLayout,
        logits: Vec<f64>,
    ) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::contract("trace needs at least one position"));
        }
        image_span.check_within(seq_len)?;
        let rows = match layout {
            TraceLayout::Full => seq_len,
            TraceLayout::LastRow => 1,
        };
        let expected = config.layers * config.heads * rows * seq_len;
        if logits.len() != expected {
            return Err(Error::Shape(format!(
                "trace holds {} logits, expected {expected}",
                logits.len()
            )));
        }
        Ok(Self {
            config,
            image_span,
            seq_len,
            layout,
            logits,
            pre_hook: None,
        })
    }

    /// Attach the final-row logits as they were before the hook ran, `[L][H][n]`.
    pub fn with_pre_hook(mut self, rows: Vec<f64>) -> Result<Self> {
        let expected = self.config.layers * self.config.heads * self.seq_len;
        if rows.len() != expected {
            return Err(Error::Shape(format!(
                "pre-hook rows hold {}, expected {expected}",
                rows.len()
            )));
        }
        self.pre_hook = Some(rows);
        Ok(self)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn image_span(&self) -> ImageSpan {
        self.image_span
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn layout(&self) -> TraceLayout {
        self.layout
    }

    pub fn last_row(&self) -> usize {
        self.seq_len - 1
    }

    pub fn raw_logits(&self) -> &[f64] {
        &self.logits
    }

    fn check_lh(&self, layer: usize, head: usize) -> Result<()> {
        if layer >= self.config.layers || head >= self.config.heads {
            return Err(Error::contract(format!(
                "layer {layer} / head {head} outside {}x{}",
                self.config.layers, self.config.heads
            )));
        }
        Ok(())
    }

    /// Post-hook logits of one query row; length `n`, columns past `row` are `-inf`.
    pub fn logits_row(&self, layer: usize, head: usize, row: usize) -> Result<&[f64]> {
        self.check_lh(layer, head)?;
        let n = self.seq_len;
        if row >= n {
            return Err(Error::contract(format!("row {row} outside sequence of {n}")));
        }
        let start = match self.layout {
            TraceLayout::Full => ((layer * self.config.heads + head) * n + row) * n,
            TraceLayout::LastRow => {
                if row != n - 1 {
                    return Err(Error::contract(format!(
                        "row-only trace has no row {row} (only {})",
                        n - 1
                    )));
                }
                (layer * self.config.heads + head) * n
            }
        };
        Ok(&self.logits[start..start + n])
    }

    /// Final-row logits before the hook ran, when captured and in range.
    pub fn pre_hook_row(&self, layer: usize, head: usize) -> Option<&[f64]> {
        if layer >= self.config.layers || head >= self.config.heads {
            return None;
        }
        let n = self.seq_len;
        let start = (layer * self.config.heads + head) * n;
        self.pre_hook.as_ref().map(|r| &r[start..start + n])
    }

    /// Causal softmax of one row. `-inf` entries are excluded like masked ones.
    pub fn row_probs(&self, layer: usize, head: usize, row: usize) -> Result<Vec<f64>> {
        let logits = self.logits_row(layer, head, row)?;
        let mask = logits
            .iter()
            .enumerate()
            .map(|(j, v)| j <= row && *v != f64::NEG_INFINITY)
            .collect();
        let masked = MaskedRow::new(logits.to_vec(), mask)?;
        Ok(softmax_row(&masked))
    }

    /// Copy holding only the final row of each layer and head.
    pub fn to_last_row(&self) -> Result<AttentionTrace> {
        let last = self.last_row();
        let mut rows = Vec::with_capacity(self.config.layers * self.config.heads * self.seq_len);
        for l in 0..self.config.layers {
            for h in 0..self.config.heads {
                rows.extend_from_slice(self.logits_row(l, h, last)?);
            }
        }
        let mut t = AttentionTrace::new(
            self.config,
            self.image_span,
            self.seq_len,
            TraceLayout::LastRow,
            rows,
        )?;
        t.pre_hook = self.pre_hook.clone();
        Ok(t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.logits.len() * 8);
        out.extend_from_slice(match self.layout {
            TraceLayout::Full => TRACE_MAGIC,
            TraceLayout::LastRow => ROW_TRACE_MAGIC,
        });
        for v in self.config.header() {
            put_u32(&mut out, v);
        }
        put_u32(&mut out, self.seq_len as u32);
        put_u32(&mut out, self.image_span.offset as u32);
        put_u32(&mut out, self.image_span.len as u32);
        let n = self.seq_len;
        let rows = match self.layout {
            TraceLayout::Full => n,
            TraceLayout::LastRow => 1,
        };
        for (i, v) in self.logits.iter().enumerate() {
            let col = i % n;
            let row = match self.layout {
                TraceLayout::Full => (i / n) % rows,
                TraceLayout::LastRow => n - 1,
            };
            put_f64(&mut out, if col > row { f64::NEG_INFINITY } else { *v });
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4, "magic")?;
        let layout = if magic == TRACE_MAGIC {
            TraceLayout::Full
        } else if magic == ROW_TRACE_MAGIC {
            TraceLayout::LastRow
        } else {
            return Err(Error::parse(0, format!("bad magic {magic:?}, expected \"AIT1\"")));
        };
        let header_at = r.offset();
        let config = ModelConfig::from_header(r.header()?);
        if config.layers == 0 || config.heads == 0 {
            return Err(Error::parse(header_at, "layers and heads must be positive"));
        }
        let n_at = r.offset();
        let n = r.u32("sequence length")? as usize;
        if n == 0 {
            return Err(Error::parse(n_at, "sequence length is zero"));
        }
        let span_at = r.offset();
        let span = ImageSpan::new(r.u32("image span offset")? as usize, r.u32("image span length")? as usize);
        if span.end() > n {
            return Err(Error::parse(
                span_at,
                format!("image span {}..{} outside sequence of {n}", span.offset, span.end()),
            ));
        }
        let rows = match layout {
            TraceLayout::Full => n,
            TraceLayout::LastRow => 1,
        };
        let count = config.layers * config.heads * rows * n;
        if r.remaining() < count * 8 {
            return Err(Error::parse(
                r.offset(),
                format!(
                    "truncated logits payload: need {} bytes, {} available",
                    count * 8,
                    r.remaining()
                ),
            ));
        }
        let mut logits = Vec::with_capacity(count);
        for i in 0..count {
            let at = r.offset();
            let v = r.f64("logit")?;
            let col = i % n;
            let row = match layout {
                TraceLayout::Full => (i / n) % rows,
                TraceLayout::LastRow => n - 1,
            };
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::parse(at, format!("non-finite logit {v} at row {row} col {col}")));
            }
            if col > row && v != f64::NEG_INFINITY {
                return Err(Error::parse(
                    at,
                    format!("causal entry row {row} col {col} must be -inf, found {v}"),
                ));
            }
            logits.push(v);
        }
        if r.remaining() != 0 {
            return Err(Error::parse(r.offset(), format!("{} trailing bytes", r.remaining())));
        }
        AttentionTrace::new(config, span, n, layout, logits)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
