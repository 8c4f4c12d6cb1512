//! Weight storage and the AIW1 weight file format.
//!
//! ```text
//! magic     "AIW1"
//! header    7 x u32 LE: layers, heads, model_dim, head_dim, vocab, patch_side, max_seq
//! sections  until EOF, each:
//!             u16 LE name length, name bytes (UTF-8),
//!             u32 LE rows, u32 LE cols,
//!             rows*cols f64 LE, row-major
//! ```
//!
//! Required sections: `token_embedding` [vocab x d], `position_embedding`
//! [max_seq x d], per layer `layer{l}.wq|wk|wv|wo|ff` [d x d], `unembed` [d x vocab].

use std::collections::BTreeMap;
use std::path::Path;

use crate::engine::binio::{put_f64, put_u16, put_u32, Reader};
use crate::engine::config::ModelConfig;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Matrix;

pub const WEIGHT_MAGIC: &[u8; 4] = b"AIW1";

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
    pub ff: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub config: ModelConfig,
    pub token_embedding: Matrix,
    pub position_embedding: Matrix,
    pub layers: Vec<LayerWeights>,
    pub unembed: Matrix,
}

fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-scale, scale)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// Weights drawn from SplitMix64 in a fixed order: token embedding, position
/// embedding, then per layer wq, wk, wv, wo, ff, then the unembedding.
/// Embeddings are uniform in [-1, 1), projections in [-1/sqrt(d), 1/sqrt(d)).
pub fn seeded_weights(config: &ModelConfig, seed: u64) -> Result<WeightSet> {
    config.validate()?;
    let d = config.model_dim;
    let proj = 1.0 / (d as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    let token_embedding = random_matrix(&mut rng, config.vocab_size, d, 1.0);
    let position_embedding = random_matrix(&mut rng, config.max_seq, d, 1.0);
    let layers = (0..config.layers)
        .map(|_| LayerWeights {
            wq: random_matrix(&mut rng, d, d, proj),
            wk: random_matrix(&mut rng, d, d, proj),
            wv: random_matrix(&mut rng, d, d, proj),
            wo: random_matrix(&mut rng, d, d, proj),
            ff: random_matrix(&mut rng, d, d, proj),
        })
        .collect();
    let unembed = random_matrix(&mut rng, d, config.vocab_size, proj);
    Ok(WeightSet {
        config: *config,
        token_embedding,
        position_embedding,
        layers,
        unembed,
    })
}

impl WeightSet {
    fn sections(&self) -> Vec<(String, &Matrix)> {
        let mut s = vec![
            ("token_embedding".to_string(), &self.token_embedding),
            ("position_embedding".to_string(), &self.position_embedding),
        ];
        for (l, lw) in self.layers.iter().enumerate() {
            s.push((format!("layer{l}.wq"), &lw.wq));
            s.push((format!("layer{l}.wk"), &lw.wk));
            s.push((format!("layer{l}.wv"), &lw.wv));
            s.push((format!("layer{l}.wo"), &lw.wo));
            s.push((format!("layer{l}.ff"), &lw.ff));
        }
        s.push(("unembed".to_string(), &self.unembed));
        s
    }

    /// Check every matrix against the config.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let d = self.config.model_dim;
        if self.layers.len() != self.config.layers {
            return Err(Error::Config(format!(
                "{} layer weight sets for {} layers",
                self.layers.len(),
                self.config.layers
            )));
        }
        for (name, m) in self.sections() {
            let want = expected_shape(&self.config, &name).unwrap_or((d, d));
            if (m.rows(), m.cols()) != want {
                return Err(Error::Config(format!(
                    "section {name} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    want.0,
                    want.1
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHT_MAGIC);
        for v in self.config.header() {
            put_u32(&mut out, v);
        }
        for (name, m) in self.sections() {
            put_u16(&mut out, name.len() as u16);
            out.extend_from_slice(name.as_bytes());
            put_u32(&mut out, m.rows() as u32);
            put_u32(&mut out, m.cols() as u32);
            for v in m.data() {
                put_f64(&mut out, *v);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4, "magic")?;
        if magic != WEIGHT_MAGIC {
            return Err(Error::parse(0, format!("bad magic {magic:?}, expected \"AIW1\"")));
        }
        let config = ModelConfig::from_header(r.header()?);
        config
            .validate()
            .map_err(|e| Error::parse(4, format!("invalid config header: {e}")))?;

        let mut found: BTreeMap<String, Matrix> = BTreeMap::new();
        while r.remaining() > 0 {
            let start = r.offset();
            let len = r.u16("section name length")? as usize;
            let raw = r.take(len, "section name")?;
            let name = std::str::from_utf8(raw)
                .map_err(|_| Error::parse(start + 2, "section name is not UTF-8"))?
                .to_string();
            let ctx = format!("section {name}");
            let shape_at = r.offset();
            let rows = r.u32(&format!("{ctx} rows"))? as usize;
            let cols = r.u32(&format!("{ctx} cols"))? as usize;
            match expected_shape(&config, &name) {
                Some(want) if want != (rows, cols) => {
                    return Err(Error::parse(
                        shape_at,
                        format!("{ctx} is {rows}x{cols}, expected {}x{}", want.0, want.1),
                    ))
                }
                None => return Err(Error::parse(start, format!("unknown {ctx}"))),
                _ => {}
            }
            if r.remaining() < rows * cols * 8 {
                return Err(Error::parse(
                    r.offset(),
                    format!(
                        "truncated {ctx}: need {} bytes, {} available",
                        rows * cols * 8,
                        r.remaining()
                    ),
                ));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let at = r.offset();
                let v = r.f64(&ctx)?;
                if !v.is_finite() {
                    return Err(Error::parse(at, format!("non-finite value in {ctx}")));
                }
                data.push(v);
            }
            if found.insert(name.clone(), Matrix::from_vec(rows, cols, data)?).is_some() {
                return Err(Error::parse(start, format!("duplicate {ctx}")));
            }
        }

        let end = r.offset();
        let mut take = |name: String| {
            found
                .remove(&name)
                .ok_or_else(|| Error::parse(end, format!("missing section {name}")))
        };
        let token_embedding = take("token_embedding".into())?;
        let position_embedding = take("position_embedding".into())?;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            layers.push(LayerWeights {
                wq: take(format!("layer{l}.wq"))?,
                wk: take(format!("layer{l}.wk"))?,
                wv: take(format!("layer{l}.wv"))?,
                wo: take(format!("layer{l}.wo"))?,
                ff: take(format!("layer{l}.ff"))?,
            });
        }
        let unembed = take("unembed".into())?;
        Ok(WeightSet {
            config,
            token_embedding,
            position_embedding,
            layers,
            unembed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn expected_shape(config: &ModelConfig, name: &str) -> Option<(usize, usize)> {
    let d = config.model_dim;
    match name {
        "token_embedding" => Some((config.vocab_size, d)),
        "position_embedding" => Some((config.max_seq, d)),
        "unembed" => Some((d, config.vocab_size)),
        _ => {
            let rest = name.strip_prefix("layer")?;
            let (idx, kind) = rest.split_once('.')?;
            let l: usize = idx.parse().ok()?;
            (l < config.layers && matches!(kind, "wq" | "wk" | "wv" | "wo" | "ff")).then_some((d, d))
        }
    }
}

pub fn load_weights(path: &Path) -> Result<WeightSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    WeightSet::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            layers: 1,
            heads: 2,
            model_dim: 4,
            head_dim: 2,
            vocab_size: 64,
            patch_side: 2,
            max_seq: 16,
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let a = seeded_weights(&small(), 9).unwrap();
        let b = seeded_weights(&small(), 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, seeded_weights(&small(), 10).unwrap());
        a.validate().unwrap();
    }

    #[test]
    fn save_load_bit_identical() {
        let w = seeded_weights(&small(), 3).unwrap();
        let back = WeightSet::from_bytes(&w.to_bytes()).unwrap();
        assert_eq!(back.to_bytes(), w.to_bytes());
        assert_eq!(back, w);
    }

    #[test]
    fn truncated_file_names_missing_section() {
        let bytes = seeded_weights(&small(), 3).unwrap().to_bytes();
        // drop the whole unembed section: 2 + 7 + 8 + 4*64*8 bytes
        let cut = bytes.len() - (2 + 7 + 8 + 4 * 64 * 8);
        let err = WeightSet::from_bytes(&bytes[..cut]).unwrap_err();
        match err {
            Error::Parse { message, offset } => {
                assert!(message.contains("missing section unembed"), "{message}");
                assert_eq!(offset, cut);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_mid_section_reports_offset() {
        let bytes = seeded_weights(&small(), 3).unwrap().to_bytes();
        let err = WeightSet::from_bytes(&bytes[..bytes.len() - 5]).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("unembed"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = seeded_weights(&small(), 3).unwrap().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(WeightSet::from_bytes(&bytes), Err(Error::Parse { offset: 0, .. })));
    }
}
