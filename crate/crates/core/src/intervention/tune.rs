//! Exhaustive grid search over intervention coefficients on a validation set.

use std::collections::BTreeMap;

use crate::bench::dataset::EvalItem;
use crate::error::{Error, Result};
use crate::intervention::spec::InterventionSpec;

pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.5, 0.8, 1.2, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
}

fn strictly_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::contract(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

/// Inclusive `lo, lo+step, …, hi`, with each value rounded to 1e-9 so that
/// decimal steps do not drift.
pub fn beta_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::contract(format!("bad threshold range [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

impl HyperGrid {
    pub fn new(alpha_grid: Vec<f64>, beta_grid: Vec<f64>) -> Result<Self> {
        let g = Self { alpha_grid, beta_grid };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        strictly_increasing("alpha grid", &self.alpha_grid)?;
        strictly_increasing("threshold grid", &self.beta_grid)?;
        if self.alpha_grid[0] <= 0.0 {
            return Err(Error::contract("alpha grid values must be positive"));
        }
        Ok(())
    }

    /// Smoothing candidates: grid values ≤ 1, or the whole grid if there are none.
    pub fn alpha1_candidates(&self) -> Vec<f64> {
        let v: Vec<f64> = self.alpha_grid.iter().copied().filter(|a| *a <= 1.0).collect();
        if v.is_empty() {
            self.alpha_grid.clone()
        } else {
            v
        }
    }

    /// Sharpening candidates: grid values ≥ 1, or the whole grid if there are none.
    pub fn alpha2_candidates(&self) -> Vec<f64> {
        let v: Vec<f64> = self.alpha_grid.iter().copied().filter(|a| *a >= 1.0).collect();
        if v.is_empty() {
            self.alpha_grid.clone()
        } else {
            v
        }
    }
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            beta_grid: beta_range(0.3, 0.65, 0.05).expect("valid default range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMode {
    /// Best single coefficient.
    Scaling,
    /// Best `(α1, α2, β)`.
    Adaptive,
    /// Best `(α1, α2)` with `β` fixed to the mean of the per-label average
    /// baseline confidences.
    AdaptiveLabelMean,
}

/// Outcome of decoding one validation item at one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemOutcome {
    pub correct: bool,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub spec: InterventionSpec,
    pub validation_accuracy: f64,
    /// Number of distinct (item, α) decodes performed.
    pub evaluations: usize,
}

/// `β` as the mean over gold labels of the average confidence per label.
pub fn label_mean_threshold(labels: &[&str], confidences: &[f64]) -> Result<f64> {
    if labels.is_empty() || labels.len() != confidences.len() {
        return Err(Error::contract("need one confidence per labelled item"));
    }
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (l, c) in labels.iter().zip(confidences) {
        let e = sums.entry(l).or_default();
        e.0 += c;
        e.1 += 1;
    }
    Ok(sums.values().map(|(s, n)| s / *n as f64).sum::<f64>() / sums.len() as f64)
}

/// Grid search maximising validation accuracy. `eval(item, α)` decodes one
/// item with ScalingVis at `α` (`α = 1` is the unintervened pass whose
/// confidence feeds the gate); each pair is evaluated at most once.
///
/// Ties keep the earliest candidate in ascending order of `α` (scaling) or
/// `(α1, α2, β)` (adaptive).
pub fn tune_hyperparameters<F>(items: &[EvalItem], grid: &HyperGrid, mode: TuneMode, mut eval: F) -> Result<TuneResult>
where
    F: FnMut(&EvalItem, f64) -> Result<ItemOutcome>,
{
    if items.is_empty() {
        return Err(Error::contract("validation set is empty"));
    }
    grid.validate()?;
    let n = items.len() as f64;
    let mut cache: BTreeMap<(usize, u64), ItemOutcome> = BTreeMap::new();
    let mut outcome = |i: usize, alpha: f64| -> Result<ItemOutcome> {
        let key = (i, alpha.to_bits());
        if let Some(o) = cache.get(&key) {
            return Ok(*o);
        }
        let o = eval(&items[i], alpha)?;
        cache.insert(key, o);
        Ok(o)
    };

    let (spec, correct) = match mode {
        TuneMode::Scaling => {
            let mut best: Option<(f64, usize)> = None;
            for &a in &grid.alpha_grid {
                let mut c = 0;
                for i in 0..items.len() {
                    c += outcome(i, a)?.correct as usize;
                }
                if best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((a, c));
                }
            }
            let (a, c) = best.expect("non-empty grid");
            (InterventionSpec::ScalingVis { alpha: a }, c)
        }
        TuneMode::Adaptive | TuneMode::AdaptiveLabelMean => {
            let mut confidence = Vec::with_capacity(items.len());
            for i in 0..items.len() {
                confidence.push(outcome(i, 1.0)?.confidence);
            }
            let betas = if mode == TuneMode::AdaptiveLabelMean {
                let labels: Vec<&str> = items.iter().map(EvalItem::gold_text).collect();
                vec![label_mean_threshold(&labels, &confidence)?]
            } else {
                grid.beta_grid.clone()
            };
            let a1s = grid.alpha1_candidates();
            let a2s = grid.alpha2_candidates();
            let mut correct_at: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
            for &a in a1s.iter().chain(&a2s) {
                let mut v = Vec::with_capacity(items.len());
                for i in 0..items.len() {
                    v.push(outcome(i, a)?.correct);
                }
                correct_at.insert(a.to_bits(), v);
            }
            let mut best: Option<((f64, f64, f64), usize)> = None;
            for &a1 in &a1s {
                for &a2 in &a2s {
                    let (c1, c2) = (&correct_at[&a1.to_bits()], &correct_at[&a2.to_bits()]);
                    for &b in &betas {
                        let c = (0..items.len())
                            .filter(|&i| if confidence[i] < b { c1[i] } else { c2[i] })
                            .count();
                        if best.is_none_or(|(_, bc)| c > bc) {
                            best = Some(((a1, a2, b), c));
                        }
                    }
                }
            }
            let ((alpha1, alpha2, beta), c) = best.expect("non-empty grid");
            (InterventionSpec::AdaptVis { alpha1, alpha2, beta }, c)
        }
    };
    Ok(TuneResult {
        spec,
        validation_accuracy: correct as f64 / n,
        evaluations: cache.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_beta_range() {
        let b = beta_range(0.2, 0.55, 0.05).unwrap();
        assert_eq!(b.len(), 8);
        assert_eq!(b[0], 0.2);
        assert_eq!(b[7], 0.55);
        assert_eq!(beta_range(0.3, 0.65, 0.05).unwrap().len(), 8);
    }

    #[test]
    fn grids_must_increase() {
        assert!(HyperGrid::new(vec![], vec![0.3]).is_err());
        assert!(HyperGrid::new(vec![1.0, 0.5], vec![0.3]).is_err());
        assert!(HyperGrid::new(vec![0.5], vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn label_mean() {
        let b = label_mean_threshold(&["true", "false", "true"], &[0.3, 0.6, 0.5]).unwrap();
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn candidate_split() {
        let g = HyperGrid::default();
        assert_eq!(g.alpha1_candidates(), vec![0.5, 0.8]);
        assert_eq!(g.alpha2_candidates(), vec![1.2, 1.5, 2.0]);
        let only_big = HyperGrid::new(vec![1.5, 2.0], vec![0.3]).unwrap();
        assert_eq!(only_big.alpha1_candidates(), vec![1.5, 2.0]);
    }
}
