//! Patch maps, box overlap, entropy and a heatmap for one scripted decode.

use spatial_attn::analysis::{
    attention_entropy, attention_skewness, bbox_overlap_cosine, export_heatmap, image_attention_share,
    layer_variance, map_to_patch_grid, BBoxMask, ColorRamp, HeadSelect, MapSource,
};
use spatial_attn::bench::{generate_controlled_set, ControlledMode};
use spatial_attn::harness::{Evaluator, ModelSource};
use spatial_attn::intervention::InterventionSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ev = Evaluator::new(&ModelSource::Scripted, 12, Default::default(), 2)?;
    let item = &generate_controlled_set(1, ControlledMode::A, 12, 8)?[0];
    let scene = item.scene.as_ref().expect("generated items carry scenes");
    let out_dir = std::env::temp_dir().join("spatial-attn-maps");
    std::fs::create_dir_all(&out_dir)?;

    for alpha in [0.5, 1.0, 2.0] {
        let d = ev.decode(item, &InterventionSpec::scaling_vis(alpha)?)?;
        let trace = &d.result.trace;
        let row = trace.last_row();
        println!("alpha {alpha}: answer {}", d.result.answer_text());
        println!("  image share per layer {:?}", image_attention_share(trace, row)?);
        println!("  image-prob variance per layer {:?}", layer_variance(trace, row)?);
        for (h, obj) in [&scene.object_a, &scene.object_b].into_iter().enumerate() {
            let map = map_to_patch_grid(trace, row, 0, HeadSelect::Head(h), MapSource::Probabilities, true)?;
            let cells: Vec<_> = obj.cells().collect();
            let mask = BBoxMask::from_cells(map.side, &cells)?;
            println!(
                "  head {h} on {}: overlap {:.3}, entropy {:.3}, skewness {:.3}, peak {:?}",
                obj.label,
                bbox_overlap_cosine(&map, &mask)?,
                attention_entropy(&map.values)?,
                attention_skewness(&map.values)?,
                map.argmax_cell()
            );
        }
        let mean = map_to_patch_grid(trace, row, 0, HeadSelect::Mean, MapSource::Probabilities, true)?;
        let path = out_dir.join(format!("alpha_{alpha}.ppm"));
        export_heatmap(&mean, &path, 16, ColorRamp::Heat)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
