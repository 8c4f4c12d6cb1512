//! Patch-grid attention maps, rasterised bounding boxes and their overlap.

use std::str::FromStr;

use crate::engine::trace::AttentionTrace;
use crate::error::{Error, Result};

/// Which heads a map is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadSelect {
    Head(usize),
    Mean,
    /// Element-wise maximum over heads.
    Max,
}

/// What the map cells hold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MapSource {
    /// Causal softmax probabilities of the full row, restricted to the image span.
    #[default]
    Probabilities,
    /// Post-hook image logits shifted so their minimum is zero.
    Logits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchAttentionMap {
    pub side: usize,
    /// Row-major, `side * side` non-negative values.
    pub values: Vec<f64>,
    pub layer: usize,
    pub head: HeadSelect,
    pub normalized: bool,
}

/// Grid cell of the `k`-th image token.
pub fn patch_cell(k: usize, side: usize) -> (usize, usize) {
    (k / side, k % side)
}

impl PatchAttentionMap {
    pub fn from_values(side: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != side * side {
            return Err(Error::Shape(format!("{} values for a {side}x{side} grid", values.len())));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::contract("map values must be finite and non-negative"));
        }
        Ok(Self {
            side,
            values,
            layer: 0,
            head: HeadSelect::Mean,
            normalized: false,
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.side + c]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Copy scaled to sum to one.
    pub fn normalize(&self) -> Result<Self> {
        let t = self.total();
        if !(t > 0.0) {
            return Err(Error::contract("cannot normalise an all-zero map"));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / t).collect(),
            normalized: true,
            ..self.clone()
        })
    }

    /// Cell holding the most mass, earliest on ties.
    pub fn argmax_cell(&self) -> (usize, usize) {
        let k = crate::tensor::argmax(&self.values).unwrap_or(0);
        patch_cell(k, self.side)
    }
}

/// Lay the image-span attention of one trace row out on the `P x P` grid.
pub fn map_to_patch_grid(
    trace: &AttentionTrace,
    row: usize,
    layer: usize,
    head: HeadSelect,
    source: MapSource,
    normalize: bool,
) -> Result<PatchAttentionMap> {
    let c = trace.config();
    let span = trace.image_span();
    let side = c.patch_side;
    if span.len != side * side {
        return Err(Error::contract(format!(
            "image span of {} tokens is not a {side}x{side} grid",
            span.len
        )));
    }
    let head_values = |h: usize| -> Result<Vec<f64>> {
        match source {
            MapSource::Probabilities => Ok(trace.row_probs(layer, h, row)?[span.range()].to_vec()),
            MapSource::Logits => {
                let l = &trace.logits_row(layer, h, row)?[span.range()];
                let finite: Vec<f64> = l.iter().map(|v| if v.is_finite() { *v } else { f64::NAN }).collect();
                let min = finite.iter().copied().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
                Ok(finite.iter().map(|v| if v.is_nan() { 0.0 } else { v - min }).collect())
            }
        }
    };
    let values = match head {
        HeadSelect::Head(h) => head_values(h)?,
        HeadSelect::Mean | HeadSelect::Max => {
            let mut acc = head_values(0)?;
            for h in 1..c.heads {
                for (a, v) in acc.iter_mut().zip(head_values(h)?) {
                    *a = if head == HeadSelect::Mean { *a + v } else { a.max(v) };
                }
            }
            if head == HeadSelect::Mean {
                acc.iter_mut().for_each(|a| *a /= c.heads as f64);
            }
            acc
        }
    };
    let map = PatchAttentionMap {
        side,
        values,
        layer,
        head,
        normalized: false,
    };
    if normalize {
        map.normalize()
    } else {
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BBoxMask {
    pub side: usize,
    pub bits: Vec<bool>,
}

impl BBoxMask {
    pub fn from_bits(side: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != side * side {
            return Err(Error::Shape(format!("{} bits for a {side}x{side} grid", bits.len())));
        }
        if !bits.iter().any(|b| *b) {
            return Err(Error::contract("mask has no cells"));
        }
        Ok(Self { side, bits })
    }

    pub fn from_cells(side: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut bits = vec![false; side * side];
        for &(r, c) in cells {
            if r >= side || c >= side {
                return Err(Error::contract(format!("cell ({r}, {c}) outside {side}x{side} grid")));
            }
            bits[r * side + c] = true;
        }
        Self::from_bits(side, bits)
    }

    /// Mark every cell whose centre lies inside the pixel box (edges inclusive).
    pub fn rasterize(b: &BBoxRecord, side: usize) -> Result<Self> {
        let (cw, ch) = (b.img_w / side as f64, b.img_h / side as f64);
        let bits = (0..side * side)
            .map(|k| {
                let (r, c) = patch_cell(k, side);
                let (x, y) = ((c as f64 + 0.5) * cw, (r as f64 + 0.5) * ch);
                x >= b.x_min && x <= b.x_max && y >= b.y_min && y <= b.y_max
            })
            .collect();
        Self::from_bits(side, bits).map_err(|_| {
            Error::contract(format!("box for {} / {} covers no patch centre", b.item_id, b.label))
        })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// One line of a bounding-box annotation file:
/// `item_id object_label x_min y_min x_max y_max img_w img_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BBoxRecord {
    pub item_id: String,
    pub label: String,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub img_w: f64,
    pub img_h: f64,
}

/// Blank lines and `#` comments are skipped; errors carry the line index.
pub fn parse_bbox_file(text: &str) -> Result<Vec<BBoxRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 8 {
            return Err(Error::parse(i, format!("line {i}: expected 8 fields, found {}", f.len())));
        }
        let mut nums = [0.0; 6];
        for (j, s) in f[2..].iter().enumerate() {
            nums[j] = f64::from_str(s).map_err(|_| Error::parse(i, format!("line {i}: bad number '{s}'")))?;
        }
        let [x_min, y_min, x_max, y_max, img_w, img_h] = nums;
        if !(x_min <= x_max && y_min <= y_max && img_w > 0.0 && img_h > 0.0) {
            return Err(Error::parse(i, format!("line {i}: degenerate box or image size")));
        }
        out.push(BBoxRecord {
            item_id: f[0].to_string(),
            label: f[1].to_string(),
            x_min,
            y_min,
            x_max,
            y_max,
            img_w,
            img_h,
        });
    }
    Ok(out)
}

/// Cosine similarity between the flattened map and the 0/1 mask.
pub fn bbox_overlap_cosine(map: &PatchAttentionMap, mask: &BBoxMask) -> Result<f64> {
    if map.side != mask.side {
        return Err(Error::Shape(format!("map side {} vs mask side {}", map.side, mask.side)));
    }
    let norm = map.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::contract("attention map has zero norm"));
    }
    let k = mask.count();
    if k == 0 {
        return Err(Error::contract("mask has no cells"));
    }
    let dot: f64 = map.values.iter().zip(&mask.bits).filter(|(_, b)| **b).map(|(v, _)| v).sum();
    Ok(dot / (norm * (k as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_arithmetic() {
        assert_eq!(patch_cell(0, 24), (0, 0));
        assert_eq!(patch_cell(25, 24), (1, 1));
        assert_eq!(patch_cell(575, 24), (23, 23));
    }

    #[test]
    fn cosine_fixtures() {
        let mask = BBoxMask::from_cells(2, &[(0, 0), (0, 1)]).unwrap();
        let inside = PatchAttentionMap::from_values(2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((bbox_overlap_cosine(&inside, &mask).unwrap() - 1.0).abs() < 1e-12);
        let outside = PatchAttentionMap::from_values(2, vec![0.0, 0.0, 0.3, 0.7]).unwrap();
        assert_eq!(bbox_overlap_cosine(&outside, &mask).unwrap(), 0.0);
        let mixed = PatchAttentionMap::from_values(2, vec![0.6, 0.2, 0.2, 0.0]).unwrap();
        assert!((bbox_overlap_cosine(&mixed, &mask).unwrap() - 0.8528).abs() < 1e-4);
        let zero = PatchAttentionMap::from_values(2, vec![0.0; 4]).unwrap();
        assert!(bbox_overlap_cosine(&zero, &mask).is_err());
    }

    #[test]
    fn rasterize_by_cell_centre() {
        let rec = &parse_bbox_file("# header\nimg1 mug 0 0 50 50 100 100\n").unwrap()[0];
        let m = BBoxMask::rasterize(rec, 4).unwrap();
        // cell centres at 12.5 and 37.5 px fall inside, 62.5 does not
        assert_eq!(m.count(), 4);
        assert!(m.bits[0] && m.bits[1] && m.bits[4] && m.bits[5]);
    }

    #[test]
    fn bbox_parse_errors_name_line() {
        match parse_bbox_file("a b 1 2 3 4 5 6\na b 1 2 3\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{other:?}"),
        }
        assert!(parse_bbox_file("a b 1 2 x 4 5 6").is_err());
    }
}
