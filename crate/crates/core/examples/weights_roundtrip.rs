//! Write seeded weights to disk, load them back, and check the decode is unchanged.

use spatial_attn::bench::build_prompt;
use spatial_attn::engine::{decode_greedy, load_weights, seeded_weights, ModelConfig, NoHook, Transformer};

fn main() -> spatial_attn::Result<()> {
    let config = ModelConfig {
        patch_side: 4,
        max_seq: 64,
        ..ModelConfig::default()
    };
    let weights = seeded_weights(&config, 9)?;
    let path = std::env::temp_dir().join("spatial-attn-weights.aiw");
    weights.save(&path)?;
    let loaded = load_weights(&path)?;
    println!("{} bytes written to {}", std::fs::metadata(&path).map_or(0, |m| m.len()), path.display());

    let seq = build_prompt("Where is the mug in relation to the plate?", None, &config)?;
    let a = decode_greedy(&Transformer::new(weights)?, &seq, &NoHook, 2)?;
    let b = decode_greedy(&Transformer::new(loaded)?, &seq, &NoHook, 2)?;
    println!("decodes identical after reload: {}", a.bit_identical(&b));
    Ok(())
}
