//! Relation-phrase counting over a caption corpus, one record per line.
//!
//! A record increments a relation's counter at most once, when any of that
//! relation's phrases occurs in it (case-insensitive). "on" phrases are not
//! counted in records that also contain "on the left" or "on the right".

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::relation::Relation;

pub const PHRASES: &[(Relation, &[&str])] = &[
    (Relation::Left, &["left side", "left of", "to the left", "on the left"]),
    (Relation::Right, &["right side", "right of", "to the right", "on the right"]),
    (Relation::On, &["are on the", "is on the", "located on"]),
    (Relation::Under, &["under the", "beneath the", "below the"]),
    (Relation::Behind, &["behind the"]),
    (Relation::Front, &["are in front of", "is in front of", "locate in front of"]),
];

/// Relations mentioned by a single record.
pub fn record_relations(record: &str) -> Vec<Relation> {
    let text = record.to_lowercase();
    let lateral_on = text.contains("on the left") || text.contains("on the right");
    PHRASES
        .iter()
        .filter(|(rel, phrases)| {
            !(*rel == Relation::On && lateral_on) && phrases.iter().any(|p| text.contains(p))
        })
        .map(|(rel, _)| *rel)
        .collect()
}

pub fn count_relation_phrases<R: BufRead>(reader: R) -> Result<BTreeMap<Relation, usize>> {
    let mut counts: BTreeMap<Relation, usize> = Relation::ALL.into_iter().map(|r| (r, 0)).collect();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(i, format!("record {i}: {e}")))?;
        for rel in record_relations(&line) {
            *counts.get_mut(&rel).expect("all relations present") += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(text: &str) -> BTreeMap<Relation, usize> {
        count_relation_phrases(text.as_bytes()).unwrap()
    }

    #[test]
    fn left_phrase() {
        let c = count("to the left of the cup");
        assert_eq!(c[&Relation::Left], 1);
        assert_eq!(c.values().sum::<usize>(), 1);
    }

    #[test]
    fn lateral_on_is_not_on() {
        let c = count("the mug is on the left");
        assert_eq!((c[&Relation::Left], c[&Relation::On]), (1, 0));
        assert_eq!(count("the mug is on the table")[&Relation::On], 1);
    }

    #[test]
    fn empty_stream() {
        assert!(count("").values().all(|v| *v == 0));
    }

    #[test]
    fn records_count_separately() {
        let c = count("A dog is behind the sofa.\nA CAT IS BEHIND THE CHAIR\nnothing here");
        assert_eq!(c[&Relation::Behind], 2);
    }
}
