//! Binary PPM (P6) rendering of patch maps.

use std::path::Path;

use crate::analysis::patch::PatchAttentionMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ColorRamp {
    Grayscale,
    /// Black, red, yellow, white.
    #[default]
    Heat,
}

fn ramp(t: f64, kind: ColorRamp) -> [u8; 3] {
    let byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match kind {
        ColorRamp::Grayscale => [byte(t); 3],
        ColorRamp::Heat => [byte(3.0 * t), byte(3.0 * t - 1.0), byte(3.0 * t - 2.0)],
    }
}

/// Min-max normalised image with a `block x block` pixel square per patch.
/// A constant map renders as the bottom colour of the ramp.
pub fn heatmap_ppm(map: &PatchAttentionMap, block: usize, kind: ColorRamp) -> Vec<u8> {
    let side = map.side;
    let px = side * block;
    let min = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let colors: Vec<[u8; 3]> = map
        .values
        .iter()
        .map(|v| ramp(if range > 0.0 { (v - min) / range } else { 0.0 }, kind))
        .collect();
    let mut out = format!("P6\n{px} {px}\n255\n").into_bytes();
    out.reserve(px * px * 3);
    for y in 0..px {
        for x in 0..px {
            out.extend_from_slice(&colors[(y / block) * side + x / block]);
        }
    }
    out
}

pub fn export_heatmap(map: &PatchAttentionMap, path: &Path, block: usize, kind: ColorRamp) -> Result<()> {
    if block == 0 {
        return Err(Error::contract("heatmap block size must be at least 1"));
    }
    std::fs::write(path, heatmap_ppm(map, block, kind)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels(bytes: &[u8]) -> &[u8] {
        // header is three newline-terminated lines
        let mut nl = 0;
        let start = bytes
            .iter()
            .position(|b| {
                nl += (*b == b'\n') as usize;
                nl == 3
            })
            .unwrap();
        &bytes[start + 1..]
    }

    #[test]
    fn constant_map_is_uniform() {
        let map = PatchAttentionMap::from_values(3, vec![0.2; 9]).unwrap();
        let img = heatmap_ppm(&map, 2, ColorRamp::Heat);
        assert!(img.starts_with(b"P6\n6 6\n255\n"));
        let px = pixels(&img);
        assert_eq!(px.len(), 6 * 6 * 3);
        assert!(px.chunks(3).all(|c| c == &px[..3]));
    }

    #[test]
    fn one_hot_has_one_bright_cell() {
        let mut v = vec![0.0; 4];
        v[3] = 1.0;
        let map = PatchAttentionMap::from_values(2, v).unwrap();
        let img = heatmap_ppm(&map, 1, ColorRamp::Grayscale);
        assert_eq!(pixels(&img), &[0, 0, 0, 0, 0, 0, 0, 0, 0, 255, 255, 255]);
    }
}
