//! Baseline, ScalingVis, AdaptVis and the additive control on one scripted item.

use spatial_attn::bench::{generate_controlled_set, ControlledMode};
use spatial_attn::engine::RefereeParams;
use spatial_attn::harness::{Evaluator, ModelSource};
use spatial_attn::intervention::InterventionSpec;

fn main() -> spatial_attn::Result<()> {
    let referee = RefereeParams {
        misplacement_prob: 0.5,
        ..RefereeParams::default()
    };
    let ev = Evaluator::new(&ModelSource::Scripted, 12, referee, 2)?;
    let items = generate_controlled_set(2, ControlledMode::A, 12, 5)?;
    let specs = [
        InterventionSpec::Baseline,
        InterventionSpec::scaling_vis(0.5)?,
        InterventionSpec::scaling_vis(2.0)?,
        InterventionSpec::adapt_vis(0.5, 1.5, 0.6)?,
        InterventionSpec::additive(2.0)?,
    ];
    for item in &items {
        let misplaced = ev.referee(item)?.is_some_and(|r| r.misplaced());
        println!("{} (gold {}, misplaced focus: {misplaced})", item.item_id, item.gold_text());
        for spec in &specs {
            let d = ev.decode(item, spec)?;
            println!(
                "  {:<48} -> {:<6} p={:.3} gate={:.3} alpha={}",
                spec.to_string(),
                d.result.answer_text(),
                d.result.answer_confidence,
                d.gate_confidence,
                d.alpha
            );
        }
    }
    Ok(())
}
