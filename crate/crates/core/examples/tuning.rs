//! Tune AdaptVis coefficients on a validation split and compare against fixed coefficients.

use spatial_attn::bench::ControlledMode;
use spatial_attn::harness::{format_report, tune, DatasetSource, RunConfig, TuneConfig};
use spatial_attn::intervention::{HyperGrid, InterventionSpec, TuneMode};

fn main() -> spatial_attn::Result<()> {
    let out = std::env::temp_dir().join("spatial-attn-tune");
    let mut run = RunConfig::new(
        DatasetSource::Controlled {
            mode: ControlledMode::A,
            reversed: false,
        },
        InterventionSpec::Baseline,
        &out,
    );
    run.n_pairs = 50;
    run.referee.misplacement_prob = 0.3;

    for mode in [TuneMode::Scaling, TuneMode::Adaptive] {
        let t = tune(&TuneConfig {
            run: run.clone(),
            grid: HyperGrid::default(),
            val_fraction: 0.2,
            mode,
            compare: true,
        })?;
        println!(
            "{mode:?}: chose {} (validation {:.2}% on {} items)",
            t.spec,
            100.0 * t.validation_accuracy,
            t.n_validation
        );
        println!("{}", format_report(&t.spec.to_string(), &t.test));
        if mode == TuneMode::Adaptive {
            for (label, r) in &t.comparisons {
                println!("{}", format_report(label, r));
            }
        }
    }
    println!("tuned spec and report in {}", out.display());
    Ok(())
}
