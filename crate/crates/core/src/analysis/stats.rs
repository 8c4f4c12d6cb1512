//! Ranking and distribution-shape statistics for attention scores.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    /// `true` for the positive class (e.g. a correct answer).
    pub label: bool,
}

/// Area under the ROC curve from the Mann–Whitney rank sum, ties counted as ½.
pub fn auroc(samples: &[ScoredSample]) -> Result<f64> {
    if samples.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::contract("AUROC scores must be finite"));
    }
    let n_pos = samples.iter().filter(|s| s.label).count();
    let n_neg = samples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::contract("AUROC needs at least one positive and one negative sample"));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].score.total_cmp(&samples[b].score));
    // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so it stays integral.
    let mut rank_sum_x2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && samples[order[j + 1]].score == samples[order[i]].score {
            j += 1;
        }
        let avg_x2 = (i + 1 + j + 1) as u64;
        let pos = order[i..=j].iter().filter(|&&k| samples[k].label).count() as u64;
        rank_sum_x2 += avg_x2 * pos;
        i = j + 1;
    }
    let (np, nn) = (n_pos as u64, n_neg as u64);
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Ok(u_x2 as f64 / (2 * np * nn) as f64)
}

fn renormalized(p: &[f64]) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::contract("empty distribution"));
    }
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::contract("distribution entries must be finite and non-negative"));
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(Error::contract("distribution has zero mass"));
    }
    Ok(p.iter().map(|v| v / total).collect())
}

/// Shannon entropy in nats of `p` after renormalising; `0·ln 0 = 0`.
pub fn attention_entropy(p: &[f64]) -> Result<f64> {
    Ok(renormalized(p)?
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| -v * v.ln())
        .sum())
}

/// Third standardised moment of the position index under `p`.
pub fn attention_skewness(p: &[f64]) -> Result<f64> {
    let p = renormalized(p)?;
    let mu: f64 = p.iter().enumerate().map(|(j, v)| j as f64 * v).sum();
    let var: f64 = p.iter().enumerate().map(|(j, v)| (j as f64 - mu).powi(2) * v).sum();
    if !(var > 0.0) {
        return Err(Error::contract("undefined skewness: distribution has zero spread"));
    }
    let m3: f64 = p.iter().enumerate().map(|(j, v)| (j as f64 - mu).powi(3) * v).sum();
    Ok(m3 / var.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(scores: &[f64], labels: &[u8]) -> Vec<ScoredSample> {
        scores
            .iter()
            .zip(labels)
            .map(|(s, l)| ScoredSample { score: *s, label: *l == 1 })
            .collect()
    }

    #[test]
    fn auroc_fixtures() {
        assert_eq!(auroc(&samples(&[0.9, 0.8, 0.1], &[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(auroc(&samples(&[0.4; 4], &[1, 0, 1, 0])).unwrap(), 0.5);
        assert_eq!(auroc(&samples(&[0.9, 0.4, 0.6, 0.2], &[1, 0, 0, 1])).unwrap(), 0.5);
        assert!(auroc(&samples(&[0.1, 0.2], &[1, 1])).is_err());
    }

    #[test]
    fn entropy_fixtures() {
        assert!((attention_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(attention_entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!((attention_entropy(&[0.5, 0.25, 0.25]).unwrap() - 1.039721).abs() < 1e-6);
        assert!(attention_entropy(&[0.5, -0.1]).is_err());
    }

    #[test]
    fn skewness_fixtures() {
        assert!(attention_skewness(&[0.2, 0.3, 0.3, 0.2]).unwrap().abs() < 1e-12);
        // moments for positions 0,1,2 with p = 0.7, 0.2, 0.1
        let mu = 0.4;
        let var = 0.7 * 0.16 + 0.2 * 0.36 + 0.1 * 2.56;
        let m3 = 0.7 * (-0.064) + 0.2 * 0.216 + 0.1 * 4.096;
        let s = attention_skewness(&[0.7, 0.2, 0.1]).unwrap();
        assert!((s - m3 / f64::powf(var, 1.5)).abs() < 1e-12 && s > 0.0, "{s} {mu}");
        assert!(attention_skewness(&[0.0, 1.0]).is_err());
    }
}
