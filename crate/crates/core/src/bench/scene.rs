//! Synthetic two-object scenes on the patch grid.

use serde::{Deserialize, Serialize};

use crate::engine::vocab::OBJECT_NAMES;
use crate::error::{Error, Result};
use crate::relation::Relation;
use crate::rng::SplitMix64;

/// Axis-aligned object footprint on the patch grid, plus a depth used for behind/front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub label: String,
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    /// Larger is farther from the camera.
    pub depth: f64,
}

impl PlacedObject {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row..self.row + self.height)
            .flat_map(move |r| (self.col..self.col + self.width).map(move |c| (r, c)))
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.height && c >= self.col && c < self.col + self.width
    }

    /// Geometric centre in (row, col) patch units, cell centres at integer coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.row as f64 + (self.height as f64 - 1.0) / 2.0,
            self.col as f64 + (self.width as f64 - 1.0) / 2.0,
        )
    }

    fn overlaps(&self, other: &PlacedObject) -> bool {
        self.row < other.row + other.height
            && other.row < self.row + self.height
            && self.col < other.col + other.width
            && other.col < self.col + self.width
    }

    fn cols_overlap(&self, other: &PlacedObject) -> bool {
        self.col < other.col + other.width && other.col < self.col + self.width
    }
}

/// Two objects and the relation of `object_a` relative to `object_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub grid_side: usize,
    pub object_a: PlacedObject,
    pub object_b: PlacedObject,
    pub relation: Relation,
    pub seed: u64,
}

impl SceneSpec {
    /// Bounds, non-overlap and geometric consistency of the relation.
    pub fn validate(&self) -> Result<()> {
        let p = self.grid_side;
        for o in [&self.object_a, &self.object_b] {
            if o.height == 0 || o.width == 0 || o.row + o.height > p || o.col + o.width > p {
                return Err(Error::contract(format!("object {} outside the {p}x{p} grid", o.label)));
            }
        }
        let (a, b) = (&self.object_a, &self.object_b);
        if a.overlaps(b) {
            return Err(Error::contract(format!("objects {} and {} overlap", a.label, b.label)));
        }
        let ok = match self.relation {
            Relation::Left => a.col + a.width <= b.col,
            Relation::Right => a.col >= b.col + b.width,
            Relation::On => a.row + a.height <= b.row && a.cols_overlap(b),
            Relation::Under => a.row >= b.row + b.height && a.cols_overlap(b),
            Relation::Behind => a.depth > b.depth,
            Relation::Front => a.depth < b.depth,
        };
        if !ok {
            return Err(Error::contract(format!(
                "placement of {} is inconsistent with relation {}",
                a.label, self.relation
            )));
        }
        Ok(())
    }

    /// Object occupying a cell, if any.
    pub fn object_at(&self, r: usize, c: usize) -> Option<&PlacedObject> {
        [&self.object_a, &self.object_b]
            .into_iter()
            .find(|o| o.contains(r, c))
    }
}

/// Which four relations a controlled set covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlledMode {
    /// left, right, on, under
    A,
    /// left, right, behind, front
    B,
}

impl ControlledMode {
    pub fn relations(self) -> [Relation; 4] {
        match self {
            ControlledMode::A => [Relation::Left, Relation::Right, Relation::On, Relation::Under],
            ControlledMode::B => [Relation::Left, Relation::Right, Relation::Behind, Relation::Front],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ControlledMode::A => "A",
            ControlledMode::B => "B",
        }
    }
}

/// Smallest grid the placement rules fit on.
pub const MIN_GRID_SIDE: usize = 8;

/// Place object `a` relative to a centred reference object `b`.
///
/// Sizes scale with the grid: the reference is `P/3` wide and `P/6` tall, the
/// queried object is a `P/6` square, and gaps are 1–2 units of `P/12`.
pub fn place_scene(
    grid_side: usize,
    label_a: &str,
    label_b: &str,
    relation: Relation,
    rng: &mut SplitMix64,
) -> Result<SceneSpec> {
    let p = grid_side;
    if p < MIN_GRID_SIDE {
        return Err(Error::contract(format!("grid side {p} below minimum {MIN_GRID_SIDE}")));
    }
    let unit = (p / 12).max(1);
    let (wb, hb, sa) = ((p / 3).max(2), (p / 6).max(2), (p / 6).max(1));
    let b = PlacedObject {
        label: label_b.to_string(),
        row: (p - hb) / 2,
        col: (p - wb) / 2,
        height: hb,
        width: wb,
        depth: 1.0,
    };
    let gap = unit * (1 + rng.below(2) as usize);
    let vertical_jitter = rng.below(3) as isize - 1;
    let slide = rng.below((wb - sa + 1) as u64) as usize;
    let stack_gap = unit * rng.below(2) as usize;
    let aligned_row = (b.row as isize + (hb as isize - sa as isize) / 2 + vertical_jitter * unit as isize)
        .clamp(0, (p - sa) as isize) as usize;

    let (row, col, depth) = match relation {
        Relation::Left => (aligned_row, b.col.saturating_sub(gap + sa), 1.0),
        Relation::Right => (aligned_row, (b.col + wb + gap).min(p - sa), 1.0),
        Relation::On | Relation::Behind => (
            b.row.saturating_sub(sa + stack_gap),
            b.col + slide,
            if relation == Relation::Behind { 2.0 } else { 1.0 },
        ),
        Relation::Under | Relation::Front => (
            (b.row + hb + stack_gap).min(p - sa),
            b.col + slide,
            if relation == Relation::Front { 0.5 } else { 1.0 },
        ),
    };
    let scene = SceneSpec {
        grid_side: p,
        object_a: PlacedObject {
            label: label_a.to_string(),
            row,
            col,
            height: sa,
            width: sa,
            depth,
        },
        object_b: b,
        relation,
        seed: rng.next_u64(),
    };
    scene.validate()?;
    Ok(scene)
}

/// Draw two distinct object names.
pub fn pick_objects(rng: &mut SplitMix64) -> (&'static str, &'static str) {
    let n = OBJECT_NAMES.len() as u64;
    let a = rng.below(n) as usize;
    let mut b = rng.below(n - 1) as usize;
    if b >= a {
        b += 1;
    }
    (OBJECT_NAMES[a], OBJECT_NAMES[b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placements_are_consistent_for_all_relations_and_sizes() {
        let mut rng = SplitMix64::new(5);
        for p in [8, 12, 16, 24] {
            for rel in Relation::ALL {
                for _ in 0..30 {
                    let s = place_scene(p, "mug", "table", rel, &mut rng).unwrap();
                    s.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn small_grid_rejected() {
        let mut rng = SplitMix64::new(1);
        assert!(place_scene(6, "mug", "table", Relation::Left, &mut rng).is_err());
    }

    #[test]
    fn inconsistent_relation_rejected() {
        let mut rng = SplitMix64::new(2);
        let mut s = place_scene(12, "mug", "table", Relation::Left, &mut rng).unwrap();
        s.relation = Relation::Right;
        assert!(s.validate().is_err());
    }

    #[test]
    fn distinct_objects() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let (a, b) = pick_objects(&mut rng);
            assert_ne!(a, b);
        }
    }
}
