//! Fixed word-level vocabulary. There is no natural-language tokenizer: prompt
//! text is split on whitespace and punctuation and each word is looked up here,
//! falling back to `<unk>`.

use crate::relation::Relation;

pub const BOS: u32 = 0;
/// End-of-answer token; decoding stops once it is emitted.
pub const EOS: u32 = 1;
/// Placeholder id for positions inside the image span.
pub const IMAGE: u32 = 2;
pub const UNK: u32 = 3;

pub const WORDS: &[&str] = &[
    "<bos>", "<eos>", "<image>", "<unk>", // specials
    "left", "right", "on", "under", "behind", "front", // relations
    "true", "false", // binary answers
    "user:", "assistant:", "where", "is", "the", "in", "relation", "to", "?", "answer",
    "with", "one", "of", ",", ".", "a", "an", "image", "caption", "statement", "this",
    // object names used by the synthetic scenes
    "mug", "table", "plate", "book", "bowl", "cup", "chair", "box", "lamp", "vase", "knife",
    "pot", "bottle", "sofa", "shelf", "desk",
];

pub const OBJECT_NAMES: &[&str] = &[
    "mug", "table", "plate", "book", "bowl", "cup", "chair", "box", "lamp", "vase", "knife",
    "pot", "bottle", "sofa", "shelf", "desk",
];

pub fn len() -> usize {
    WORDS.len()
}

pub fn token_id(word: &str) -> u32 {
    let lower = word.to_ascii_lowercase();
    WORDS
        .iter()
        .position(|w| *w == lower)
        .map_or(UNK, |i| i as u32)
}

pub fn word(id: u32) -> &'static str {
    WORDS.get(id as usize).copied().unwrap_or("<unk>")
}

pub fn relation_token(r: Relation) -> u32 {
    token_id(r.as_str())
}

pub fn token_relation(id: u32) -> Option<Relation> {
    Relation::ALL.into_iter().find(|r| relation_token(*r) == id)
}

/// Split text into vocabulary ids. Punctuation `?`, `,` and `.` become
/// separate tokens.
pub fn tokenize(text: &str) -> Vec<u32> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for ch in text.chars() {
        if matches!(ch, '?' | ',' | '.') {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        } else {
            spaced.push(ch);
        }
    }
    spaced.split_whitespace().map(token_id).collect()
}
