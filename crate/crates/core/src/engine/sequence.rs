use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Contiguous range of image-token positions, the index set the interventions act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageSpan {
    pub offset: usize,
    pub len: usize,
}

impl ImageSpan {
    pub fn new(offset: usize, len: usize) -> Self {
        Self { offset, len }
    }

    pub fn end(&self) -> usize {
        self.offset + self.len
    }

    pub fn contains(&self, pos: usize) -> bool {
        pos >= self.offset && pos < self.end()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.end()
    }

    /// Fails unless the span fits inside a row of `width` entries.
    pub fn check_within(&self, width: usize) -> Result<()> {
        if self.end() > width {
            Err(Error::contract(format!(
                "image span {}..{} outside row of length {width}",
                self.offset,
                self.end()
            )))
        } else {
            Ok(())
        }
    }
}

/// Token ids plus the image span and the patch embeddings that fill it.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub token_ids: Vec<u32>,
    pub image_span: ImageSpan,
    /// One row per image token, `model_dim` columns. `None` for text-only use.
    pub patch_embeddings: Option<Matrix>,
}

impl TokenSequence {
    pub fn new(token_ids: Vec<u32>, image_span: ImageSpan, patch_embeddings: Option<Matrix>) -> Result<Self> {
        image_span.check_within(token_ids.len())?;
        if let Some(p) = &patch_embeddings {
            if p.rows() != image_span.len {
                return Err(Error::Shape(format!(
                    "{} patch embeddings for an image span of {}",
                    p.rows(),
                    image_span.len
                )));
            }
        }
        Ok(Self {
            token_ids,
            image_span,
            patch_embeddings,
        })
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn last_token(&self) -> Option<u32> {
        self.token_ids.last().copied()
    }

    /// Copy with `token` appended after the current last position.
    pub fn extended(&self, token: u32) -> Self {
        let mut next = self.clone();
        next.token_ids.push(token);
        next
    }
}
