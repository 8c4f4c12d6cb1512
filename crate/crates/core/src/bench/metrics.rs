//! Exact-match scoring with pair/set grouping, binary F1 and per-label tables.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bench::dataset::EvalItem;
use crate::error::{Error, Result};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub item_id: String,
    pub answer: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LabelStats {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub mean_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// `None` when no item carries a pair id.
    pub pair_accuracy: Option<f64>,
    pub set_accuracy: Option<f64>,
    /// Only for all-binary item lists, with "true" as the positive class.
    pub f1: Option<f64>,
    /// Keyed by gold option text.
    pub per_label: BTreeMap<String, LabelStats>,
    pub label_counts: BTreeMap<String, usize>,
}

fn matches(answer: &str, gold: &str) -> bool {
    answer.trim().eq_ignore_ascii_case(gold.trim())
}

fn group_accuracy<'a>(groups: impl Iterator<Item = (&'a str, bool)>) -> Option<f64> {
    let mut all_correct: BTreeMap<&str, bool> = BTreeMap::new();
    for (g, ok) in groups {
        *all_correct.entry(g).or_insert(true) &= ok;
    }
    if all_correct.is_empty() {
        return None;
    }
    Some(all_correct.values().filter(|v| **v).count() as f64 / all_correct.len() as f64)
}

/// `predictions[i]` answers `items[i]`.
pub fn score(items: &[EvalItem], predictions: &[Prediction]) -> Result<EvalReport> {
    if items.len() != predictions.len() {
        return Err(Error::contract(format!(
            "{} items but {} predictions",
            items.len(),
            predictions.len()
        )));
    }
    if items.is_empty() {
        return Err(Error::contract("cannot score an empty item list"));
    }
    let correct: Vec<bool> = items
        .iter()
        .zip(predictions)
        .map(|(it, p)| matches(&p.answer, it.gold_text()))
        .collect();
    let n = items.len();
    let accuracy = correct.iter().filter(|c| **c).count() as f64 / n as f64;
    let pair_accuracy = group_accuracy(
        items
            .iter()
            .zip(&correct)
            .filter_map(|(it, ok)| it.pair_id.as_deref().map(|g| (g, *ok))),
    );
    let set_accuracy = group_accuracy(
        items
            .iter()
            .zip(&correct)
            .filter_map(|(it, ok)| it.set_id.as_deref().map(|g| (g, *ok))),
    );

    let f1 = items.iter().all(EvalItem::is_binary).then(|| {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (it, p) in items.iter().zip(predictions) {
            let gold = it.gold_text() == "true";
            let pred = matches(&p.answer, "true");
            match (pred, gold) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    });

    let mut per_label: BTreeMap<String, LabelStats> = BTreeMap::new();
    let mut conf_sums: BTreeMap<String, f64> = BTreeMap::new();
    for ((it, p), ok) in items.iter().zip(predictions).zip(&correct) {
        let key = it.gold_text().to_string();
        let s = per_label.entry(key.clone()).or_default();
        s.count += 1;
        s.correct += *ok as usize;
        *conf_sums.entry(key).or_default() += p.confidence;
    }
    for (k, s) in per_label.iter_mut() {
        s.accuracy = s.correct as f64 / s.count as f64;
        s.mean_confidence = conf_sums[k] / s.count as f64;
    }
    let label_counts = per_label.iter().map(|(k, s)| (k.clone(), s.count)).collect();
    Ok(EvalReport {
        n,
        accuracy,
        pair_accuracy,
        set_accuracy,
        f1,
        per_label,
        label_counts,
    })
}

/// Gold-answer counts for all six relations; non-spatial items are skipped.
pub fn label_distribution(items: &[EvalItem]) -> BTreeMap<Relation, usize> {
    let mut counts: BTreeMap<Relation, usize> = Relation::ALL.into_iter().map(|r| (r, 0)).collect();
    for r in items.iter().filter_map(EvalItem::gold_relation) {
        *counts.get_mut(&r).expect("all relations present") += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn item(id: &str, options: &[&str], gold: usize, pair: Option<&str>, set: Option<&str>) -> EvalItem {
        EvalItem {
            item_id: id.into(),
            image_path: None,
            question: String::new(),
            options: options.iter().map(|s| s.to_string()).collect(),
            gold,
            pair_id: pair.map(Into::into),
            set_id: set.map(Into::into),
            reversed: false,
            scene: None,
        }
    }

    fn pred(answer: &str) -> Prediction {
        Prediction {
            item_id: String::new(),
            answer: answer.into(),
            confidence: 0.5,
        }
    }

    const OPTS: [&str; 4] = ["left", "right", "on", "under"];

    fn one_set() -> Vec<EvalItem> {
        (0..4)
            .map(|g| {
                let pair = (g < 2).then_some("p0");
                item(&format!("i{g}"), &OPTS, g, pair, Some("s0"))
            })
            .collect()
    }

    #[test]
    fn all_correct() {
        let items = one_set();
        let preds: Vec<_> = OPTS.iter().map(|o| pred(o)).collect();
        let r = score(&items, &preds).unwrap();
        assert_eq!((r.accuracy, r.pair_accuracy, r.set_accuracy), (1.0, Some(1.0), Some(1.0)));
        assert_eq!(r.f1, None);
    }

    #[test]
    fn three_of_four_fails_the_set() {
        let items = one_set();
        let preds = vec![pred("LEFT"), pred("right"), pred("on"), pred("on")];
        let r = score(&items, &preds).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.set_accuracy, Some(0.0));
        assert_eq!(r.pair_accuracy, Some(1.0));
        assert_eq!(r.per_label["under"].accuracy, 0.0);
    }

    #[test]
    fn binary_f1() {
        let tf = ["true", "false"];
        // gold: T T T F F ; pred: T T F T F  -> TP=2 FN=1 FP=1
        let golds = [0, 0, 0, 1, 1];
        let answers = ["true", "true", "false", "true", "false"];
        let items: Vec<_> = golds.iter().enumerate().map(|(i, g)| item(&i.to_string(), &tf, *g, None, None)).collect();
        let preds: Vec<_> = answers.iter().map(|a| pred(a)).collect();
        let r = score(&items, &preds).unwrap();
        assert!((r.f1.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.pair_accuracy, None);
    }

    #[test]
    fn length_mismatch() {
        assert!(score(&one_set(), &[pred("left")]).is_err());
    }

    #[test]
    fn empty_distribution_is_zero() {
        assert!(label_distribution(&[]).values().all(|c| *c == 0));
        assert_eq!(label_distribution(&[]).len(), 6);
    }
}
