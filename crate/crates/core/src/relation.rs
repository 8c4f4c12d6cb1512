use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Spatial relation of the queried object with respect to the reference object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Left,
    Right,
    On,
    Under,
    Behind,
    Front,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Left,
        Relation::Right,
        Relation::On,
        Relation::Under,
        Relation::Behind,
        Relation::Front,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Left => "left",
            Relation::Right => "right",
            Relation::On => "on",
            Relation::Under => "under",
            Relation::Behind => "behind",
            Relation::Front => "front",
        }
    }

    /// The relation that holds when the two objects swap roles.
    pub fn inverse(self) -> Relation {
        match self {
            Relation::Left => Relation::Right,
            Relation::Right => Relation::Left,
            Relation::On => Relation::Under,
            Relation::Under => Relation::On,
            Relation::Behind => Relation::Front,
            Relation::Front => Relation::Behind,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == lower)
            .ok_or_else(|| Error::contract(format!("unknown relation {s:?}")))
    }
}
