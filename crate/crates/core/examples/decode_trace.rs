//! Greedy decoding with a seeded transformer, then a trace round trip through the binary format.

use spatial_attn::bench::{build_prompt, encode_scene, generate_controlled_set, ControlledMode};
use spatial_attn::engine::{decode_greedy, seeded_weights, AttentionTrace, ModelConfig, NoHook, Transformer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig {
        patch_side: 8,
        max_seq: 128,
        ..ModelConfig::default()
    };
    let model = Transformer::new(seeded_weights(&config, 42)?)?;

    let item = &generate_controlled_set(1, ControlledMode::A, 8, 1)?[0];
    let patches = encode_scene(item.scene.as_ref().expect("generated items carry scenes"), &config)?;
    let seq = build_prompt(&item.question, Some(patches), &config)?;
    println!("prompt: {} tokens, image span {:?}", seq.len(), seq.image_span);

    let out = decode_greedy(&model, &seq, &NoHook, 3)?;
    println!("generated {:?} ({:?}), confidence {:.4}", out.generated_ids, out.answer_text(), out.answer_confidence);

    let dir = std::env::temp_dir().join("spatial-attn-decode");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("trace.ait");
    out.trace.save(&path)?;
    let back = AttentionTrace::load(&path)?;
    println!(
        "trace {}: {} layers x {} heads x {} positions, layout {:?}",
        path.display(),
        back.config().layers,
        back.config().heads,
        back.seq_len(),
        back.layout()
    );
    let last = back.seq_len() - 1;
    let p = back.row_probs(0, 0, last)?;
    println!("layer 0 head 0 final row sums to {:.12}", p.iter().sum::<f64>());
    Ok(())
}
