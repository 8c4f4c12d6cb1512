use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spatial_attn::engine::referee::RefereeParams;
use spatial_attn::harness::{self, format_report, DatasetSource, ModelSource, RunConfig, RunFile, TuneConfig};
use spatial_attn::intervention::{beta_range, HyperGrid, InterventionSpec, Method, TuneMode};
use spatial_attn::{Error, Result};

#[derive(Parser)]
#[command(name = "spatial-attn", version, about = "Image-attention intervention experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a dataset under one method and write reports.
    Run(RunArgs),
    /// Grid-search coefficients on a validation split and evaluate on the rest.
    Tune(TuneArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML run file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// controlled_a, controlled_b (optionally _reversed), whatsup:<path> or vsr:<path>
    #[arg(long)]
    dataset: Option<String>,
    /// scripted, seed:<n> or a weight file path
    #[arg(long)]
    model_name: Option<String>,
    /// baseline, scaling_vis, adapt_vis or additive
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    weight1: Option<f64>,
    #[arg(long)]
    weight2: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Object pairs in a generated set (four items each).
    #[arg(long)]
    n_pairs: Option<usize>,
    #[arg(long)]
    grid_side: Option<usize>,
    /// Probability that the scripted model misplaces its focus.
    #[arg(long)]
    misplacement_prob: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    emit_heatmaps: bool,
    #[arg(long)]
    emit_traces: bool,
    /// Skip the in-run baseline timing pass.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Comma-separated coefficients.
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
    /// Set the threshold to the mean of per-label average confidences instead of searching it.
    #[arg(long)]
    label_mean_threshold: bool,
}

fn base_config(c: &CommonArgs, file: &RunFile, method_required: bool) -> Result<RunConfig> {
    let dataset: DatasetSource = c
        .dataset
        .clone()
        .or_else(|| file.dataset.clone())
        .ok_or_else(|| Error::Usage("missing --dataset".into()))?
        .parse()?;
    let method = match c.method.as_deref() {
        Some(m) => Some(m.parse::<Method>()?),
        None => file.method,
    };
    let method = match (method, method_required) {
        (Some(m), _) => m,
        (None, false) => Method::AdaptVis,
        (None, true) => return Err(Error::Usage("missing --method".into())),
    };
    let spec = if method_required {
        InterventionSpec::from_fields(
            method,
            c.weight1.or(file.weight1),
            c.weight2.or(file.weight2),
            c.threshold.or(file.threshold),
            c.constant.or(file.constant),
        )?
    } else {
        InterventionSpec::Baseline
    };
    let output_dir = c
        .output_dir
        .clone()
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut rc = RunConfig::new(dataset, spec, output_dir);
    if let Some(m) = c.model_name.clone().or_else(|| file.model_name.clone()) {
        rc.model = m.parse::<ModelSource>()?;
    }
    rc.template = file.template.clone();
    rc.seed = c.seed.or(file.seed).unwrap_or(rc.seed);
    rc.n_pairs = c.n_pairs.or(file.n_pairs).unwrap_or(rc.n_pairs);
    rc.grid_side = c.grid_side.or(file.grid_side).unwrap_or(rc.grid_side);
    if let Some(p) = c.misplacement_prob.or(file.misplacement_prob) {
        rc.referee = RefereeParams {
            misplacement_prob: p,
            ..rc.referee
        };
    }
    Ok(rc)
}

fn load_file(path: &Option<PathBuf>) -> Result<RunFile> {
    path.as_deref().map_or(Ok(RunFile::default()), RunFile::load)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let file = load_file(&a.common.config)?;
    let mut rc = base_config(&a.common, &file, true)?;
    rc.emit_heatmaps = a.emit_heatmaps || file.emit_heatmaps.unwrap_or(false);
    rc.emit_traces = a.emit_traces || file.emit_traces.unwrap_or(false);
    rc.timing = !a.no_timing && rc.spec.method() != Method::Baseline;
    for w in rc.spec.warnings() {
        eprintln!("warning: {w}");
    }
    let out = harness::run(&rc)?;
    println!("{}", format_report(&rc.spec.to_string(), &out.report));
    if let Some(r) = out.baseline_ratio {
        println!("wall-clock ratio vs baseline: {r:.2}x");
    }
    println!("wrote {}", rc.output_dir.display());
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let file = load_file(&a.common.config)?;
    let rc = base_config(&a.common, &file, false)?;
    let method = match a.common.method.as_deref() {
        Some(m) => m.parse::<Method>()?,
        None => file.method.unwrap_or(Method::AdaptVis),
    };
    let mode = match (method, a.label_mean_threshold) {
        (Method::ScalingVis, _) => TuneMode::Scaling,
        (Method::AdaptVis, false) => TuneMode::Adaptive,
        (Method::AdaptVis, true) => TuneMode::AdaptiveLabelMean,
        (m, _) => return Err(Error::Usage(format!("cannot tune method {m}"))),
    };
    let defaults = HyperGrid::default();
    let alpha_grid = a.alpha_grid.or(file.alpha_grid.clone()).unwrap_or(defaults.alpha_grid);
    let beta_grid = match (
        a.beta_min.or(file.beta_min),
        a.beta_max.or(file.beta_max),
        a.beta_step.or(file.beta_step),
    ) {
        (None, None, None) => defaults.beta_grid,
        (lo, hi, step) => beta_range(lo.unwrap_or(0.3), hi.unwrap_or(0.65), step.unwrap_or(0.05))?,
    };
    let grid = HyperGrid::new(alpha_grid, beta_grid).map_err(|e| Error::Usage(e.to_string()))?;
    let tc = TuneConfig {
        run: rc,
        grid,
        val_fraction: a.val_fraction.or(file.val_fraction).unwrap_or(0.2),
        mode,
        compare: true,
    };
    let out = harness::tune(&tc)?;
    println!(
        "chosen {} (validation accuracy {:.2} on {} items)",
        out.spec,
        100.0 * out.validation_accuracy,
        out.n_validation
    );
    println!("{}", format_report(&out.spec.to_string(), &out.test));
    for (label, r) in &out.comparisons {
        println!("{}", format_report(label, r));
    }
    println!("wrote {}", tc.run.output_dir.join("tuned_spec.toml").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Tune(a) => cmd_tune(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
