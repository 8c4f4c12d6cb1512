//! Evaluation items: controlled-set generation, question templating with
//! reversal, and JSON ingestion/export.
//!
//! Benchmark JSON is an array of records with fields `item_id`, `image_path`,
//! `question`, `options`, `gold`, `pair_id`, `set_id` (plus the optional
//! `reversed` and `scene` written by [`export_json`]). VSR JSON is an array of
//! `{"image", "caption", "label"}` records where `label` is a boolean or 0/1.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::scene::{pick_objects, place_scene, ControlledMode, SceneSpec};
use crate::error::{Error, Result};
use crate::relation::Relation;
use crate::rng::SplitMix64;

pub const DEFAULT_TEMPLATE: &str =
    "Where is the {subject} in relation to the {reference}? Answer with one of {options}.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    #[serde(default)]
    pub image_path: Option<String>,
    pub question: String,
    pub options: Vec<String>,
    pub gold: usize,
    #[serde(default)]
    pub pair_id: Option<String>,
    #[serde(default)]
    pub set_id: Option<String>,
    #[serde(default)]
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub text: String,
    pub options: Vec<Relation>,
    pub gold: usize,
}

/// Fill `{subject}`, `{reference}` and `{options}` in `template`.
pub fn render_template(template: &str, subject: &str, reference: &str, options: &[Relation]) -> String {
    let opts: Vec<&str> = options.iter().map(|r| r.as_str()).collect();
    template
        .replace("{subject}", subject)
        .replace("{reference}", reference)
        .replace("{options}", &opts.join(", "))
}

pub fn make_question(scene: &SceneSpec, options: &[Relation], reversed: bool) -> Result<Question> {
    make_question_with(DEFAULT_TEMPLATE, scene, options, reversed)
}

/// With `reversed`, the two objects trade roles and the gold relation is inverted.
pub fn make_question_with(
    template: &str,
    scene: &SceneSpec,
    options: &[Relation],
    reversed: bool,
) -> Result<Question> {
    let (subject, reference, relation) = if reversed {
        (&scene.object_b.label, &scene.object_a.label, scene.relation.inverse())
    } else {
        (&scene.object_a.label, &scene.object_b.label, scene.relation)
    };
    let gold = options
        .iter()
        .position(|r| *r == relation)
        .ok_or_else(|| Error::contract(format!("relation {relation} is not among the options")))?;
    Ok(Question {
        text: render_template(template, subject, reference, options),
        options: options.to_vec(),
        gold,
    })
}

impl EvalItem {
    pub fn gold_text(&self) -> &str {
        &self.options[self.gold]
    }

    /// Options parsed as relations; `None` for non-spatial (e.g. true/false) items.
    pub fn relation_options(&self) -> Option<Vec<Relation>> {
        self.options.iter().map(|o| o.parse().ok()).collect()
    }

    pub fn gold_relation(&self) -> Option<Relation> {
        self.gold_text().parse().ok()
    }

    /// Binary true/false item.
    pub fn is_binary(&self) -> bool {
        self.options.len() == 2 && self.options.iter().all(|o| o == "true" || o == "false")
    }

    /// Question text re-rendered from the scene with another template.
    pub fn with_template(&self, template: &str) -> Result<EvalItem> {
        if !(template.contains("{subject}") && template.contains("{reference}")) {
            return Err(Error::Usage(format!(
                "question template must name {{subject}} and {{reference}}: {template:?}"
            )));
        }
        let scene = self
            .scene
            .as_ref()
            .ok_or_else(|| Error::contract(format!("item {} has no scene to re-render", self.item_id)))?;
        let options = self
            .relation_options()
            .ok_or_else(|| Error::contract(format!("item {} has non-relation options", self.item_id)))?;
        let q = make_question_with(template, scene, &options, self.reversed)?;
        Ok(EvalItem {
            question: q.text,
            ..self.clone()
        })
    }

    /// Same scene with the question's entities swapped. Applying it twice
    /// returns the original item.
    pub fn reversed_item(&self) -> Result<EvalItem> {
        let scene = self
            .scene
            .as_ref()
            .ok_or_else(|| Error::contract(format!("item {} has no scene to reverse", self.item_id)))?;
        let options = self
            .relation_options()
            .ok_or_else(|| Error::contract(format!("item {} has non-relation options", self.item_id)))?;
        let q = make_question(scene, &options, !self.reversed)?;
        let item_id = match self.item_id.strip_suffix("-rev") {
            Some(base) => base.to_string(),
            None => format!("{}-rev", self.item_id),
        };
        Ok(EvalItem {
            item_id,
            question: q.text,
            gold: q.gold,
            reversed: !self.reversed,
            ..self.clone()
        })
    }
}

/// `n_object_pairs` sets of four scenes, one per relation of `mode`, on a
/// `grid_side` grid. Each set shares a `set_id`; its left/right items also
/// share a `pair_id`.
pub fn generate_controlled_set(
    n_object_pairs: usize,
    mode: ControlledMode,
    grid_side: usize,
    seed: u64,
) -> Result<Vec<EvalItem>> {
    if n_object_pairs == 0 {
        return Err(Error::contract("need at least one object pair"));
    }
    let options = mode.relations();
    let tag = mode.tag();
    let mut items = Vec::with_capacity(4 * n_object_pairs);
    for i in 0..n_object_pairs {
        let mut rng = SplitMix64::derive(seed, i as u64);
        let (a, b) = pick_objects(&mut rng);
        for rel in options {
            let scene = place_scene(grid_side, a, b, rel, &mut rng)?;
            let q = make_question(&scene, &options, false)?;
            items.push(EvalItem {
                item_id: format!("cont{tag}-{i:04}-{rel}"),
                image_path: None,
                question: q.text,
                options: options.iter().map(|r| r.as_str().to_string()).collect(),
                gold: q.gold,
                pair_id: matches!(rel, Relation::Left | Relation::Right).then(|| format!("cont{tag}-pair{i:04}")),
                set_id: Some(format!("cont{tag}-set{i:04}")),
                reversed: false,
                scene: Some(scene),
            });
        }
    }
    Ok(items)
}

fn read_records(path: &Path) -> Result<Vec<serde_json::Value>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(0, format!("invalid JSON: {e}")))?;
    match value {
        serde_json::Value::Array(records) => Ok(records),
        _ => Err(Error::parse(0, "expected a JSON array of records")),
    }
}

fn check_item(item: &EvalItem, index: usize) -> Result<()> {
    if item.gold >= item.options.len() {
        return Err(Error::parse(
            index,
            format!("record {index}: gold {} out of range for {} options", item.gold, item.options.len()),
        ));
    }
    Ok(())
}

/// Benchmark JSON. Errors carry the failing record index as the offset.
pub fn load_whatsup_json(path: &Path) -> Result<Vec<EvalItem>> {
    read_records(path)?
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let item: EvalItem =
                serde_json::from_value(rec).map_err(|e| Error::parse(i, format!("record {i}: {e}")))?;
            check_item(&item, i)?;
            Ok(item)
        })
        .collect()
}

#[derive(Deserialize)]
struct VsrRecord {
    #[serde(default)]
    item_id: Option<String>,
    #[serde(alias = "image_path")]
    image: String,
    caption: String,
    label: serde_json::Value,
}

/// VSR-style caption verification: each record becomes a true/false question
/// with "true" as the positive class.
pub fn load_vsr_json(path: &Path) -> Result<Vec<EvalItem>> {
    read_records(path)?
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let r: VsrRecord =
                serde_json::from_value(rec).map_err(|e| Error::parse(i, format!("record {i}: {e}")))?;
            let label = match &r.label {
                serde_json::Value::Bool(b) => *b,
                serde_json::Value::Number(n) if n.as_u64() == Some(1) => true,
                serde_json::Value::Number(n) if n.as_u64() == Some(0) => false,
                other => {
                    return Err(Error::parse(i, format!("record {i}: field `label` must be boolean, got {other}")))
                }
            };
            Ok(EvalItem {
                item_id: r.item_id.unwrap_or_else(|| format!("vsr-{i:05}")),
                image_path: Some(r.image),
                question: r.caption,
                options: vec!["true".into(), "false".into()],
                gold: if label { 0 } else { 1 },
                pair_id: None,
                set_id: None,
                reversed: false,
                scene: None,
            })
        })
        .collect()
}

pub fn export_json(items: &[EvalItem], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(items).map_err(|e| Error::contract(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn one_set_is_balanced() {
        let items = generate_controlled_set(1, ControlledMode::A, 12, 7).unwrap();
        assert_eq!(items.len(), 4);
        let golds: BTreeSet<_> = items.iter().map(|i| i.gold_text().to_string()).collect();
        assert_eq!(golds.len(), 4);
        let sets: BTreeSet<_> = items.iter().map(|i| i.set_id.clone()).collect();
        assert_eq!(sets.len(), 1);
    }

    #[test]
    fn group_counts() {
        let items = generate_controlled_set(3, ControlledMode::B, 12, 1).unwrap();
        assert_eq!(items.len(), 12);
        let sets: BTreeSet<_> = items.iter().filter_map(|i| i.set_id.clone()).collect();
        let pairs: BTreeSet<_> = items.iter().filter_map(|i| i.pair_id.clone()).collect();
        assert_eq!((sets.len(), pairs.len()), (3, 3));
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_controlled_set(5, ControlledMode::A, 12, 42).unwrap();
        assert_eq!(a, generate_controlled_set(5, ControlledMode::A, 12, 42).unwrap());
        assert_ne!(a, generate_controlled_set(5, ControlledMode::A, 12, 43).unwrap());
    }

    #[test]
    fn reversal_inverts_gold() {
        let items = generate_controlled_set(1, ControlledMode::A, 12, 3).unwrap();
        for item in &items {
            let rev = item.reversed_item().unwrap();
            assert_eq!(rev.gold_relation(), item.gold_relation().map(Relation::inverse));
            assert_eq!(rev.reversed_item().unwrap(), *item);
        }
        let left = items.iter().find(|i| i.gold_text() == "left").unwrap();
        assert_eq!(left.reversed_item().unwrap().gold_text(), "right");
        let on = items.iter().find(|i| i.gold_text() == "on").unwrap();
        assert_eq!(on.reversed_item().unwrap().gold_text(), "under");
    }

    #[test]
    fn custom_template_keeps_gold() {
        let item = &generate_controlled_set(1, ControlledMode::B, 12, 3).unwrap()[2];
        let t = item.with_template("Is the {subject} left, right, behind or in front of the {reference}?").unwrap();
        let scene = item.scene.as_ref().unwrap();
        assert_eq!(
            t.question,
            format!("Is the {} left, right, behind or in front of the {}?", scene.object_a.label, scene.object_b.label)
        );
        assert_eq!((t.gold, &t.item_id), (item.gold, &item.item_id));
        assert!(matches!(item.with_template("Where is it?"), Err(Error::Usage(_))));
    }

    #[test]
    fn template_mentions_both_objects() {
        let items = generate_controlled_set(1, ControlledMode::A, 12, 3).unwrap();
        let s = items[0].scene.as_ref().unwrap();
        let q = &items[0].question;
        assert!(q.starts_with(&format!("Where is the {} in relation to the {}?", s.object_a.label, s.object_b.label)));
    }
}
