//! Generate a controlled set, decode it, and score it; then count label and phrase frequencies.

use std::io::Cursor;

use spatial_attn::bench::{
    count_relation_phrases, generate_controlled_set, label_distribution, score, ControlledMode, Prediction,
};
use spatial_attn::harness::{format_report, Evaluator, ModelSource};
use spatial_attn::intervention::InterventionSpec;

fn main() -> spatial_attn::Result<()> {
    let items = generate_controlled_set(25, ControlledMode::B, 12, 3)?;
    println!("gold labels: {:?}", label_distribution(&items));

    let ev = Evaluator::new(&ModelSource::Scripted, 12, Default::default(), 2)?;
    for spec in [InterventionSpec::Baseline, InterventionSpec::adapt_vis(0.5, 1.5, 0.6)?] {
        let preds = items
            .iter()
            .map(|item| {
                let d = ev.decode(item, &spec)?;
                Ok(Prediction {
                    item_id: item.item_id.clone(),
                    answer: d.result.answer_text().to_string(),
                    confidence: d.result.answer_confidence,
                })
            })
            .collect::<spatial_attn::Result<Vec<_>>>()?;
        let report = score(&items, &preds)?;
        println!("{}", format_report(&spec.to_string(), &report));
        for (label, s) in &report.per_label {
            println!("    {label:<7} {:>3}/{:<3} mean confidence {:.3}", s.correct, s.count, s.mean_confidence);
        }
    }

    let corpus = "A lamp on the left side of the desk.\nThe cat is on the mat.\nThe dog is beneath the table.\n\
                  The car is in front of the house.\nA chair to the right of the bed.\n";
    println!("phrase counts: {:?}", count_relation_phrases(Cursor::new(corpus))?);
    Ok(())
}
