//! Experiment driver behind the `run` and `tune` subcommands.
//!
//! Output files (all under `output_dir`):
//!
//! * `report.csv`: `dataset,model,method,weight1,weight2,threshold,constant,n,accuracy,pair_accuracy,set_accuracy,f1`
//! * `per_label.csv`: `label,count,correct,accuracy,mean_confidence`
//! * `predictions.csv`: `item_id,gold,answer,correct,confidence,gate_confidence,alpha`, sorted by item id
//! * `heatmaps/<item>_L<layer>.ppm` and `traces/<item>.ait` when requested
//! * `tuned_spec.toml` and `tune_report.csv` from `tune`
//!
//! Wall-clock ratios are printed, never written, so reruns stay byte-identical.

pub mod config;

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{default_analysis_layer, export_heatmap, map_to_patch_grid, write_csv, ColorRamp, HeadSelect, MapSource};
use crate::bench::dataset::{generate_controlled_set, load_vsr_json, load_whatsup_json, EvalItem};
use crate::bench::encode::{build_prompt, encode_scene};
use crate::bench::metrics::{score, EvalReport, Prediction};
use crate::engine::config::ModelConfig;
use crate::engine::referee::{RefereeParams, ScriptedReferee};
use crate::engine::sequence::TokenSequence;
use crate::engine::transformer::Transformer;
use crate::engine::weights::{load_weights, seeded_weights};
use crate::error::{Error, Result};
use crate::intervention::decode::{decode_with_spec, MethodDecode};
use crate::intervention::spec::InterventionSpec;
use crate::intervention::tune::{tune_hyperparameters, HyperGrid, ItemOutcome, TuneMode};
use crate::rng::SplitMix64;

pub use config::{DatasetSource, ModelSource, RunConfig, RunFile};

const HEATMAP_BLOCK: usize = 8;

pub fn load_items(config: &RunConfig) -> Result<Vec<EvalItem>> {
    match &config.dataset {
        DatasetSource::Controlled { mode, reversed } => {
            let mut items = generate_controlled_set(config.n_pairs, *mode, config.grid_side, config.seed)?;
            if *reversed {
                items = items.iter().map(EvalItem::reversed_item).collect::<Result<_>>()?;
            }
            if let Some(t) = &config.template {
                items = items.iter().map(|i| i.with_template(t)).collect::<Result<_>>()?;
            }
            Ok(items)
        }
        DatasetSource::WhatsUp(p) => load_whatsup_json(p),
        DatasetSource::Vsr(p) => load_vsr_json(p),
    }
}

enum Backend {
    Scripted(RefereeParams),
    Transformer(Transformer),
}

/// Decodes evaluation items under any intervention with one model source.
pub struct Evaluator {
    backend: Backend,
    config: ModelConfig,
    max_new: usize,
}

impl Evaluator {
    pub fn new(source: &ModelSource, grid_side: usize, referee: RefereeParams, max_new: usize) -> Result<Self> {
        let sized = ModelConfig {
            patch_side: grid_side,
            max_seq: grid_side * grid_side + 64,
            ..ModelConfig::default()
        };
        let (backend, config) = match source {
            ModelSource::Scripted => (Backend::Scripted(referee), sized),
            ModelSource::Seeded(seed) => {
                let w = seeded_weights(&sized, *seed)?;
                (Backend::Transformer(Transformer::new(w)?), sized)
            }
            ModelSource::WeightFile(path) => {
                let w = load_weights(path)?;
                let c = w.config;
                (Backend::Transformer(Transformer::new(w)?), c)
            }
        };
        config.validate()?;
        Ok(Self { backend, config, max_new })
    }

    pub fn from_run_config(rc: &RunConfig) -> Result<Self> {
        Self::new(&rc.model, rc.grid_side, rc.referee.clone(), rc.max_new)
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn sequence(&self, item: &EvalItem) -> Result<TokenSequence> {
        let patches = match &item.scene {
            Some(s) => Some(encode_scene(s, &self.config)?),
            None => None,
        };
        build_prompt(&item.question, patches, &self.config)
    }

    pub fn referee(&self, item: &EvalItem) -> Result<Option<ScriptedReferee>> {
        let Backend::Scripted(params) = &self.backend else {
            return Ok(None);
        };
        let scene = item.scene.as_ref().ok_or_else(|| {
            Error::Usage(format!("item {} has no scene; the scripted model needs generated scenes", item.item_id))
        })?;
        let options = item
            .relation_options()
            .ok_or_else(|| Error::Usage(format!("item {} has non-spatial options", item.item_id)))?;
        ScriptedReferee::new(scene, item.reversed, &options, &self.config, params).map(Some)
    }

    pub fn decode(&self, item: &EvalItem, spec: &InterventionSpec) -> Result<MethodDecode> {
        let seq = self.sequence(item)?;
        match &self.backend {
            Backend::Scripted(_) => {
                let model = self.referee(item)?.expect("scripted backend");
                decode_with_spec(&model, &seq, spec, self.max_new)
            }
            Backend::Transformer(t) => decode_with_spec(t, &seq, spec, self.max_new),
        }
    }
}

fn answer_matches(answer: &str, item: &EvalItem) -> bool {
    answer.trim().eq_ignore_ascii_case(item.gold_text())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub item_id: String,
    pub gold: String,
    pub answer: String,
    pub correct: bool,
    pub confidence: f64,
    pub gate_confidence: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportRow<'a> {
    dataset: String,
    model: String,
    method: &'a str,
    weight1: Option<f64>,
    weight2: Option<f64>,
    threshold: Option<f64>,
    constant: Option<f64>,
    n: usize,
    accuracy: f64,
    pair_accuracy: Option<f64>,
    set_accuracy: Option<f64>,
    f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LabelRow<'a> {
    label: &'a str,
    count: usize,
    correct: usize,
    accuracy: f64,
    mean_confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub predictions: Vec<PredictionRow>,
    pub seconds: f64,
    /// Method wall time over an in-run baseline pass, when timing was requested.
    pub baseline_ratio: Option<f64>,
}

/// Decode every item under `spec`, returning the rows and the wall time.
pub fn evaluate(evaluator: &Evaluator, items: &[EvalItem], spec: &InterventionSpec) -> Result<(Vec<PredictionRow>, Vec<MethodDecode>, f64)> {
    let start = Instant::now();
    let mut decodes = Vec::with_capacity(items.len());
    for item in items {
        decodes.push(evaluator.decode(item, spec)?);
    }
    let seconds = start.elapsed().as_secs_f64();
    let rows = items
        .iter()
        .zip(&decodes)
        .map(|(item, d)| {
            let answer = d.result.answer_text().to_string();
            PredictionRow {
                item_id: item.item_id.clone(),
                gold: item.gold_text().to_string(),
                correct: answer_matches(&answer, item),
                answer,
                confidence: d.result.answer_confidence,
                gate_confidence: d.gate_confidence,
                alpha: d.alpha,
            }
        })
        .collect();
    Ok((rows, decodes, seconds))
}

fn score_rows(items: &[EvalItem], rows: &[PredictionRow]) -> Result<EvalReport> {
    let preds: Vec<Prediction> = rows
        .iter()
        .map(|r| Prediction {
            item_id: r.item_id.clone(),
            answer: r.answer.clone(),
            confidence: r.confidence,
        })
        .collect();
    score(items, &preds)
}

/// Filesystem-safe form of an item id.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn model_name(m: &ModelSource) -> String {
    match m {
        ModelSource::Scripted => "scripted".into(),
        ModelSource::Seeded(s) => format!("seed:{s}"),
        ModelSource::WeightFile(p) => p.display().to_string(),
    }
}

fn report_row<'a>(rc: &RunConfig, spec: &'a InterventionSpec, r: &EvalReport) -> ReportRow<'a> {
    let f = spec.to_file();
    ReportRow {
        dataset: rc.dataset.to_string(),
        model: model_name(&rc.model),
        method: spec.method().as_str(),
        weight1: f.weight1,
        weight2: f.weight2,
        threshold: f.threshold,
        constant: f.constant,
        n: r.n,
        accuracy: r.accuracy,
        pair_accuracy: r.pair_accuracy,
        set_accuracy: r.set_accuracy,
        f1: r.f1,
    }
}

fn write_outputs(
    rc: &RunConfig,
    items: &[EvalItem],
    report: &EvalReport,
    rows: &[PredictionRow],
    decodes: &[MethodDecode],
    model: &ModelConfig,
) -> Result<()> {
    let dir = &rc.output_dir;
    create_dir(dir)?;
    write_csv(&dir.join("report.csv"), &[report_row(rc, &rc.spec, report)])?;
    let labels: Vec<LabelRow> = report
        .per_label
        .iter()
        .map(|(label, s)| LabelRow {
            label,
            count: s.count,
            correct: s.correct,
            accuracy: s.accuracy,
            mean_confidence: s.mean_confidence,
        })
        .collect();
    write_csv(&dir.join("per_label.csv"), &labels)?;
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    write_csv(&dir.join("predictions.csv"), &sorted)?;

    if rc.emit_heatmaps {
        let hdir = dir.join("heatmaps");
        create_dir(&hdir)?;
        let layer = default_analysis_layer(model);
        for (item, d) in items.iter().zip(decodes) {
            let t = &d.result.trace;
            if t.image_span().len != model.patch_side * model.patch_side {
                continue;
            }
            let map = map_to_patch_grid(t, t.last_row(), layer, HeadSelect::Mean, MapSource::Probabilities, false)?;
            let path = hdir.join(format!("{}_L{layer}.ppm", file_stem(&item.item_id)));
            export_heatmap(&map, &path, HEATMAP_BLOCK, ColorRamp::Heat)?;
        }
    }
    if rc.emit_traces {
        let tdir = dir.join("traces");
        create_dir(&tdir)?;
        for (item, d) in items.iter().zip(decodes) {
            d.result.trace.save(&tdir.join(format!("{}.ait", file_stem(&item.item_id))))?;
        }
    }
    Ok(())
}

pub fn run(rc: &RunConfig) -> Result<RunOutcome> {
    rc.spec.validate()?;
    let items = load_items(rc)?;
    if items.is_empty() {
        return Err(Error::Usage(format!("dataset {} has no items", rc.dataset)));
    }
    let evaluator = Evaluator::from_run_config(rc)?;
    let (rows, decodes, seconds) = evaluate(&evaluator, &items, &rc.spec)?;
    let report = score_rows(&items, &rows)?;
    let baseline_ratio = if rc.timing {
        let base = time_method(&evaluator, &items, &InterventionSpec::Baseline, 1)?;
        Some(seconds / base)
    } else {
        None
    };
    write_outputs(rc, &items, &report, &rows, &decodes, evaluator.model_config())?;
    Ok(RunOutcome {
        report,
        predictions: rows,
        seconds,
        baseline_ratio,
    })
}

/// Fastest of `reps` full passes over `items`, in seconds.
pub fn time_method(evaluator: &Evaluator, items: &[EvalItem], spec: &InterventionSpec, reps: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        for item in items {
            std::hint::black_box(evaluator.decode(item, spec)?);
        }
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Grouping key for splits: set, else pair, else the item itself.
fn group_key(item: &EvalItem) -> &str {
    item.set_id
        .as_deref()
        .or(item.pair_id.as_deref())
        .unwrap_or(&item.item_id)
}

/// Seeded validation/test split that keeps each set (or pair) on one side.
/// The validation side gets `round(fraction · groups)` groups.
pub fn split_validation(items: &[EvalItem], fraction: f64, seed: u64) -> Result<(Vec<EvalItem>, Vec<EvalItem>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Usage(format!("--val-fraction must lie in (0, 1), got {fraction}")));
    }
    let mut groups: Vec<&str> = items.iter().map(group_key).collect();
    groups.sort_unstable();
    groups.dedup();
    let n_val = (fraction * groups.len() as f64).round() as usize;
    if n_val == 0 || n_val == groups.len() {
        return Err(Error::Usage(format!(
            "validation fraction {fraction} leaves an empty split over {} groups",
            groups.len()
        )));
    }
    SplitMix64::derive(seed, 0x5917).shuffle(&mut groups);
    let val_groups: std::collections::BTreeSet<&str> = groups[..n_val].iter().copied().collect();
    let (val, test): (Vec<_>, Vec<_>) = items.iter().cloned().partition(|i| val_groups.contains(group_key(i)));
    Ok((val, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub run: RunConfig,
    pub grid: HyperGrid,
    pub val_fraction: f64,
    pub mode: TuneMode,
    /// Also score the baseline and every single coefficient on the test split.
    pub compare: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub spec: InterventionSpec,
    pub validation_accuracy: f64,
    pub n_validation: usize,
    pub test: EvalReport,
    /// `(label, test report)` for the baseline and each grid coefficient.
    pub comparisons: Vec<(String, EvalReport)>,
}

impl TuneOutcome {
    /// Best test accuracy among the single-coefficient comparisons.
    pub fn best_single_alpha(&self) -> Option<(&str, f64)> {
        self.comparisons
            .iter()
            .filter(|(l, _)| l.starts_with("scaling_vis"))
            .map(|(l, r)| (l.as_str(), r.accuracy))
            .fold(None, |best, c| match best {
                Some((_, a)) if a >= c.1 => best,
                _ => Some(c),
            })
    }

    pub fn baseline_accuracy(&self) -> Option<f64> {
        self.comparisons.iter().find(|(l, _)| l == "baseline").map(|(_, r)| r.accuracy)
    }
}

#[derive(Serialize)]
struct TuneRow<'a> {
    split: &'a str,
    method: String,
    n: usize,
    accuracy: f64,
    pair_accuracy: Option<f64>,
    set_accuracy: Option<f64>,
    f1: Option<f64>,
}

pub fn tune(tc: &TuneConfig) -> Result<TuneOutcome> {
    let rc = &tc.run;
    let items = load_items(rc)?;
    let (val, test) = split_validation(&items, tc.val_fraction, rc.seed)?;
    let evaluator = Evaluator::from_run_config(rc)?;
    let tuned = tune_hyperparameters(&val, &tc.grid, tc.mode, |item, alpha| {
        let d = evaluator.decode(item, &InterventionSpec::ScalingVis { alpha })?;
        Ok(ItemOutcome {
            correct: answer_matches(d.result.answer_text(), item),
            confidence: d.result.answer_confidence,
        })
    })?;
    let eval_test = |spec: &InterventionSpec| -> Result<EvalReport> {
        let (rows, _, _) = evaluate(&evaluator, &test, spec)?;
        score_rows(&test, &rows)
    };
    let test_report = eval_test(&tuned.spec)?;
    let mut comparisons = Vec::new();
    if tc.compare {
        comparisons.push(("baseline".to_string(), eval_test(&InterventionSpec::Baseline)?));
        for &a in &tc.grid.alpha_grid {
            let spec = InterventionSpec::ScalingVis { alpha: a };
            comparisons.push((spec.to_string(), eval_test(&spec)?));
        }
    }

    create_dir(&rc.output_dir)?;
    tuned.spec.save(&rc.output_dir.join("tuned_spec.toml"))?;
    let row = |split, method: String, r: &EvalReport| TuneRow {
        split,
        method,
        n: r.n,
        accuracy: r.accuracy,
        pair_accuracy: r.pair_accuracy,
        set_accuracy: r.set_accuracy,
        f1: r.f1,
    };
    let mut rows = vec![row("test", tuned.spec.to_string(), &test_report)];
    rows.extend(comparisons.iter().map(|(l, r)| row("test", l.clone(), r)));
    write_csv(&rc.output_dir.join("tune_report.csv"), &rows)?;

    Ok(TuneOutcome {
        spec: tuned.spec,
        validation_accuracy: tuned.validation_accuracy,
        n_validation: val.len(),
        test: test_report,
        comparisons,
    })
}

/// Plain-text summary table for a report.
pub fn format_report(label: &str, r: &EvalReport) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.2}", 100.0 * x));
    format!(
        "{label:<44} n={:<5} acc={:>6.2} pair={:>6} set={:>6} f1={:>6}",
        r.n,
        100.0 * r.accuracy,
        opt(r.pair_accuracy),
        opt(r.set_accuracy),
        opt(r.f1)
    )
}
