//! Run configuration, resolvable from flags or a flat TOML file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::bench::scene::ControlledMode;
use crate::engine::referee::RefereeParams;
use crate::error::{Error, Result};
use crate::intervention::spec::{InterventionSpec, Method};

/// Where evaluation items come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Generated controlled set; `reversed` swaps the entities of every question.
    Controlled { mode: ControlledMode, reversed: bool },
    WhatsUp(PathBuf),
    Vsr(PathBuf),
}

impl FromStr for DatasetSource {
    type Err = Error;

    /// `controlled_a`, `controlled_b` (optionally suffixed `_reversed`),
    /// `whatsup:<path>` or `vsr:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("whatsup:") {
            return Ok(DatasetSource::WhatsUp(p.into()));
        }
        if let Some(p) = s.strip_prefix("vsr:") {
            return Ok(DatasetSource::Vsr(p.into()));
        }
        let lower = s.to_ascii_lowercase();
        let (base, reversed) = match lower.strip_suffix("_reversed") {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        let mode = match base {
            "controlled_a" | "cont_a" => ControlledMode::A,
            "controlled_b" | "cont_b" => ControlledMode::B,
            _ => {
                return Err(Error::Usage(format!(
                    "unknown dataset '{s}' (expected controlled_a, controlled_b, whatsup:<path> or vsr:<path>)"
                )))
            }
        };
        Ok(DatasetSource::Controlled { mode, reversed })
    }
}

impl std::fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetSource::Controlled { mode, reversed } => {
                write!(f, "controlled_{}", mode.tag().to_ascii_lowercase())?;
                if *reversed {
                    write!(f, "_reversed")?;
                }
                Ok(())
            }
            DatasetSource::WhatsUp(p) => write!(f, "whatsup:{}", p.display()),
            DatasetSource::Vsr(p) => write!(f, "vsr:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    /// Weights-free referee reading answers off its image attention.
    Scripted,
    /// Transformer with seeded random weights.
    Seeded(u64),
    /// Transformer loaded from an AIW1 file.
    WeightFile(PathBuf),
}

impl FromStr for ModelSource {
    type Err = Error;

    /// `scripted`, `seed:<u64>` or a path to a weight file.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("scripted") {
            return Ok(ModelSource::Scripted);
        }
        if let Some(n) = s.strip_prefix("seed:") {
            return n
                .parse()
                .map(ModelSource::Seeded)
                .map_err(|_| Error::Usage(format!("bad model seed '{n}'")));
        }
        Ok(ModelSource::WeightFile(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub model: ModelSource,
    pub spec: InterventionSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Object pairs in a generated controlled set (four items each).
    pub n_pairs: usize,
    pub grid_side: usize,
    pub max_new: usize,
    pub emit_heatmaps: bool,
    pub emit_traces: bool,
    /// Also time an in-run baseline pass and report the wall-clock ratio.
    pub timing: bool,
    pub referee: RefereeParams,
    /// Question template for generated sets, with `{subject}`, `{reference}` and `{options}`.
    pub template: Option<String>,
}

impl RunConfig {
    pub fn new(dataset: DatasetSource, spec: InterventionSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset,
            model: ModelSource::Scripted,
            spec,
            output_dir: output_dir.into(),
            seed: 0,
            n_pairs: 50,
            grid_side: 12,
            max_new: 2,
            emit_heatmaps: false,
            emit_traces: false,
            timing: false,
            referee: RefereeParams::default(),
            template: None,
        }
    }
}

/// Flat run file. Every key is optional; command-line flags take precedence.
///
/// ```toml
/// dataset = "controlled_a"
/// model_name = "scripted"
/// method = "scaling_vis"
/// weight1 = 0.8
/// output_dir = "out"
/// seed = 0
/// template = "Where is the {subject} relative to the {reference}?"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub dataset: Option<String>,
    pub model_name: Option<String>,
    pub method: Option<Method>,
    pub weight1: Option<f64>,
    pub weight2: Option<f64>,
    pub threshold: Option<f64>,
    pub constant: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_pairs: Option<usize>,
    pub grid_side: Option<usize>,
    pub emit_heatmaps: Option<bool>,
    pub emit_traces: Option<bool>,
    pub misplacement_prob: Option<f64>,
    pub val_fraction: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub beta_step: Option<f64>,
    pub template: Option<String>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
