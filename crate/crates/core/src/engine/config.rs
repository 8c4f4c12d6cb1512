use serde::{Deserialize, Serialize};

use crate::engine::vocab;
use crate::error::{Error, Result};

/// Shape of a decoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub head_dim: usize,
    pub vocab_size: usize,
    /// Side of the square image-patch grid; the image span holds `patch_side²` tokens.
    pub patch_side: usize,
    pub max_seq: usize,
}

impl Default for ModelConfig {
    /// Small desk-scale stack: 2 layers, 2 heads, 12×12 patch grid.
    fn default() -> Self {
        Self {
            layers: 2,
            heads: 2,
            model_dim: 16,
            head_dim: 8,
            vocab_size: 64,
            patch_side: 12,
            max_seq: 256,
        }
    }
}

impl ModelConfig {
    /// The 24×24 (576 image token) layout of the reference vision-language models.
    pub fn paper_grid() -> Self {
        Self {
            layers: 4,
            heads: 4,
            model_dim: 32,
            head_dim: 8,
            vocab_size: 64,
            patch_side: 24,
            max_seq: 640,
        }
    }

    pub fn image_tokens(&self) -> usize {
        self.patch_side * self.patch_side
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.layers == 0 || self.heads == 0 || self.head_dim == 0 {
            return fail("layers, heads and head_dim must be positive".into());
        }
        if self.model_dim != self.heads * self.head_dim {
            return fail(format!(
                "model_dim {} != heads {} * head_dim {}",
                self.model_dim, self.heads, self.head_dim
            ));
        }
        if self.patch_side == 0 {
            return fail("patch_side must be at least 1".into());
        }
        if self.vocab_size < vocab::len() {
            return fail(format!(
                "vocab_size {} smaller than the fixed vocabulary ({})",
                self.vocab_size,
                vocab::len()
            ));
        }
        if self.max_seq == 0 {
            return fail("max_seq must be positive".into());
        }
        Ok(())
    }

    /// The 7-field header shared by the weight and trace file formats.
    pub fn header(&self) -> [u32; 7] {
        [
            self.layers as u32,
            self.heads as u32,
            self.model_dim as u32,
            self.head_dim as u32,
            self.vocab_size as u32,
            self.patch_side as u32,
            self.max_seq as u32,
        ]
    }

    pub fn from_header(h: [u32; 7]) -> Self {
        Self {
            layers: h[0] as usize,
            heads: h[1] as usize,
            model_dim: h[2] as usize,
            head_dim: h[3] as usize,
            vocab_size: h[4] as usize,
            patch_side: h[5] as usize,
            max_seq: h[6] as usize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelConfig::default().validate().unwrap();
        let p = ModelConfig::paper_grid();
        p.validate().unwrap();
        assert_eq!(p.image_tokens(), 576);
    }

    #[test]
    fn rejects_inconsistent_head_dim() {
        let c = ModelConfig {
            head_dim: 5,
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_small_vocab() {
        let c = ModelConfig {
            vocab_size: 4,
            ..ModelConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
