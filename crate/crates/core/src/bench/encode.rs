//! Scene to token sequence: deterministic patch embeddings wrapped in the
//! chat-style prompt `<bos> user: <image>… question assistant:`.

use crate::bench::scene::SceneSpec;
use crate::engine::config::ModelConfig;
use crate::engine::sequence::{ImageSpan, TokenSequence};
use crate::engine::vocab;
use crate::error::{Error, Result};
use crate::rng::{hash_str, SplitMix64};
use crate::tensor::Matrix;

const BACKGROUND_TAG: u64 = 0xB6;
const DEPTH_TAG: u64 = 0xD7;

fn seeded_vector(seed: u64, tag: u64, d: usize) -> Vec<f64> {
    let mut rng = SplitMix64::derive(seed, tag);
    (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

/// Sinusoidal code for a cell offset inside an object's footprint: the first
/// half of the dimensions encode the row, the second half the column.
fn positional_code(r: usize, c: usize, d: usize) -> Vec<f64> {
    let half = d / 2;
    (0..d)
        .map(|k| {
            let (pos, j, width) = if k < half { (r, k, half) } else { (c, k - half, d - half) };
            let freq = 1.0 / 100f64.powf((j / 2 * 2) as f64 / width.max(1) as f64);
            let a = pos as f64 * freq;
            if j % 2 == 0 {
                a.sin()
            } else {
                a.cos()
            }
        })
        .collect()
}

/// One `model_dim`-wide embedding per patch, row-major over the grid.
///
/// Object cells get the object's label embedding, a positional code for the
/// cell's offset within the object, and a depth component. Absolute position
/// is left to the model's position embeddings, so moving an object moves its
/// patch vectors unchanged. Every background cell gets the same vector.
pub fn encode_scene(scene: &SceneSpec, config: &ModelConfig) -> Result<Matrix> {
    scene.validate()?;
    let p = scene.grid_side;
    if p != config.patch_side {
        return Err(Error::contract(format!(
            "scene grid {p} does not match patch_side {}",
            config.patch_side
        )));
    }
    let d = config.model_dim;
    let background = seeded_vector(0, BACKGROUND_TAG, d);
    let depth_axis = seeded_vector(0, DEPTH_TAG, d);
    let mut out = Matrix::zeros(p * p, d);
    for r in 0..p {
        for c in 0..p {
            let row = out.row_mut(r * p + c);
            match scene.object_at(r, c) {
                Some(o) => {
                    let label = seeded_vector(hash_str(&o.label), 1, d);
                    let pos = positional_code(r - o.row, c - o.col, d);
                    for k in 0..d {
                        row[k] = label[k] + pos[k] + o.depth * depth_axis[k];
                    }
                }
                None => row.copy_from_slice(&background),
            }
        }
    }
    Ok(out)
}

/// `<bos> user: <image>×P² question assistant:` with the image span filled by `patches`.
pub fn build_prompt(question: &str, patches: Option<Matrix>, config: &ModelConfig) -> Result<TokenSequence> {
    let image_len = config.image_tokens();
    let mut ids = vec![vocab::BOS, vocab::token_id("user:")];
    let offset = ids.len();
    ids.extend(std::iter::repeat_n(vocab::IMAGE, image_len));
    ids.extend(vocab::tokenize(question));
    ids.push(vocab::token_id("assistant:"));
    if ids.len() > config.max_seq {
        return Err(Error::Capacity {
            len: ids.len(),
            max: config.max_seq,
        });
    }
    TokenSequence::new(ids, ImageSpan::new(offset, image_len), patches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::scene::place_scene;
    use crate::relation::Relation;

    fn scene() -> SceneSpec {
        place_scene(12, "mug", "table", Relation::Left, &mut SplitMix64::new(4)).unwrap()
    }

    #[test]
    fn deterministic() {
        let c = ModelConfig::default();
        assert_eq!(encode_scene(&scene(), &c).unwrap(), encode_scene(&scene(), &c).unwrap());
    }

    #[test]
    fn background_cells_share_one_embedding() {
        let c = ModelConfig::default();
        let s = scene();
        let m = encode_scene(&s, &c).unwrap();
        let bg: Vec<_> = (0..144).filter(|k| s.object_at(k / 12, k % 12).is_none()).collect();
        for k in &bg {
            assert_eq!(m.row(*k), m.row(bg[0]));
        }
    }

    #[test]
    fn swapping_positions_permutes_patches() {
        let obj = |label: &str, col| crate::bench::scene::PlacedObject {
            label: label.into(),
            row: 5,
            col,
            height: 2,
            width: 2,
            depth: 1.0,
        };
        let a = SceneSpec {
            grid_side: 12,
            object_a: obj("mug", 2),
            object_b: obj("bowl", 7),
            relation: Relation::Left,
            seed: 1,
        };
        let b = SceneSpec {
            object_a: obj("mug", 7),
            object_b: obj("bowl", 2),
            relation: Relation::Right,
            ..a.clone()
        };
        let c = ModelConfig::default();
        let (ea, eb) = (encode_scene(&a, &c).unwrap(), encode_scene(&b, &c).unwrap());
        for r in 0..12 {
            for col in 0..12 {
                let k = r * 12 + col;
                let moved = match col {
                    2 | 3 if (5..7).contains(&r) => k + 5,
                    7 | 8 if (5..7).contains(&r) => k - 5,
                    _ => k,
                };
                assert_eq!(ea.row(k), eb.row(moved));
            }
        }
    }

    #[test]
    fn prompt_layout() {
        let c = ModelConfig::default();
        let seq = build_prompt("Where is the mug?", None, &c).unwrap();
        assert_eq!(seq.image_span, ImageSpan::new(2, 144));
        assert_eq!(seq.token_ids[0], vocab::BOS);
        assert_eq!(seq.last_token(), Some(vocab::token_id("assistant:")));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let c = ModelConfig {
            patch_side: 8,
            ..ModelConfig::default()
        };
        assert!(encode_scene(&scene(), &c).is_err());
    }
}
