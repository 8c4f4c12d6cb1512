//! Intervention policy and its flat key-value file.
//!
//! ```toml
//! method = "adapt_vis"   # baseline | scaling_vis | adapt_vis | additive
//! weight1 = 0.5          # alpha (scaling_vis) or alpha1 (adapt_vis)
//! weight2 = 1.5          # alpha2 (adapt_vis)
//! threshold = 0.3        # beta (adapt_vis)
//! constant = 0.0         # c (additive)
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    ScalingVis,
    AdaptVis,
    Additive,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::ScalingVis, Method::AdaptVis, Method::Additive];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::ScalingVis => "scaling_vis",
            Method::AdaptVis => "adapt_vis",
            Method::Additive => "additive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "none" => Ok(Method::Baseline),
            "scaling_vis" | "scaling" => Ok(Method::ScalingVis),
            "adapt_vis" | "adaptive" => Ok(Method::AdaptVis),
            "additive" => Ok(Method::Additive),
            other => Err(Error::Usage(format!(
                "unknown method '{other}' (expected baseline, scaling_vis, adapt_vis or additive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterventionSpec {
    Baseline,
    ScalingVis { alpha: f64 },
    /// `alpha1` below the threshold, `alpha2` at or above it.
    AdaptVis { alpha1: f64, alpha2: f64, beta: f64 },
    Additive { constant: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("{name} must be positive and finite, got {v}")))
    }
}

impl InterventionSpec {
    pub fn baseline() -> Self {
        InterventionSpec::Baseline
    }

    pub fn scaling_vis(alpha: f64) -> Result<Self> {
        let s = InterventionSpec::ScalingVis { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn adapt_vis(alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        let s = InterventionSpec::AdaptVis { alpha1, alpha2, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn additive(constant: f64) -> Result<Self> {
        let s = InterventionSpec::Additive { constant };
        s.validate()?;
        Ok(s)
    }

    pub fn method(&self) -> Method {
        match self {
            InterventionSpec::Baseline => Method::Baseline,
            InterventionSpec::ScalingVis { .. } => Method::ScalingVis,
            InterventionSpec::AdaptVis { .. } => Method::AdaptVis,
            InterventionSpec::Additive { .. } => Method::Additive,
        }
    }

    /// Coefficients must be positive; the threshold must lie in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            InterventionSpec::Baseline => Ok(()),
            InterventionSpec::ScalingVis { alpha } => positive("weight1", alpha),
            InterventionSpec::AdaptVis { alpha1, alpha2, beta } => {
                positive("weight1", alpha1)?;
                positive("weight2", alpha2)?;
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::contract(format!("threshold must lie in [0, 1], got {beta}")));
                }
                Ok(())
            }
            InterventionSpec::Additive { constant } => {
                if constant.is_finite() {
                    Ok(())
                } else {
                    Err(Error::contract("constant must be finite"))
                }
            }
        }
    }

    /// Unconventional but permitted settings.
    pub fn warnings(&self) -> Vec<String> {
        match *self {
            InterventionSpec::AdaptVis { alpha1, alpha2, .. } => {
                let mut w = Vec::new();
                if alpha1 > 1.0 {
                    w.push(format!("weight1 {alpha1} > 1 sharpens low-confidence answers"));
                }
                if alpha2 < 1.0 {
                    w.push(format!("weight2 {alpha2} < 1 smooths high-confidence answers"));
                }
                w
            }
            _ => Vec::new(),
        }
    }

    /// Build from the flat fields, naming the missing flag when a
    /// method-specific coefficient is absent.
    pub fn from_fields(
        method: Method,
        weight1: Option<f64>,
        weight2: Option<f64>,
        threshold: Option<f64>,
        constant: Option<f64>,
    ) -> Result<Self> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::Usage(format!("method {method} requires --{flag}")))
        };
        let spec = match method {
            Method::Baseline => InterventionSpec::Baseline,
            Method::ScalingVis => InterventionSpec::ScalingVis {
                alpha: need(weight1, "weight1")?,
            },
            Method::AdaptVis => InterventionSpec::AdaptVis {
                alpha1: need(weight1, "weight1")?,
                alpha2: need(weight2, "weight2")?,
                beta: need(threshold, "threshold")?,
            },
            Method::Additive => InterventionSpec::Additive {
                constant: need(constant, "constant")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_file(&self) -> SpecFile {
        let mut f = SpecFile {
            method: self.method(),
            weight1: None,
            weight2: None,
            threshold: None,
            constant: None,
        };
        match *self {
            InterventionSpec::Baseline => {}
            InterventionSpec::ScalingVis { alpha } => f.weight1 = Some(alpha),
            InterventionSpec::AdaptVis { alpha1, alpha2, beta } => {
                f.weight1 = Some(alpha1);
                f.weight2 = Some(alpha2);
                f.threshold = Some(beta);
            }
            InterventionSpec::Additive { constant } => f.constant = Some(constant),
        }
        f
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("flat spec serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let f: SpecFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        InterventionSpec::from_fields(f.method, f.weight1, f.weight2, f.threshold, f.constant)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        InterventionSpec::from_toml(&text)
    }
}

impl fmt::Display for InterventionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterventionSpec::Baseline => write!(f, "baseline"),
            InterventionSpec::ScalingVis { alpha } => write!(f, "scaling_vis(weight1={alpha})"),
            InterventionSpec::AdaptVis { alpha1, alpha2, beta } => {
                write!(f, "adapt_vis(weight1={alpha1}, weight2={alpha2}, threshold={beta})")
            }
            InterventionSpec::Additive { constant } => write!(f, "additive(constant={constant})"),
        }
    }
}

/// On-disk form of [`InterventionSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for spec in [
            InterventionSpec::Baseline,
            InterventionSpec::scaling_vis(0.8).unwrap(),
            InterventionSpec::adapt_vis(0.5, 1.5, 0.3).unwrap(),
            InterventionSpec::additive(-1.0).unwrap(),
        ] {
            assert_eq!(InterventionSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        }
    }

    #[test]
    fn missing_coefficient_names_flag() {
        let err = InterventionSpec::from_fields(Method::AdaptVis, Some(0.5), Some(2.0), None, None).unwrap_err();
        assert!(err.to_string().contains("--threshold"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        assert!(InterventionSpec::scaling_vis(0.0).is_err());
        assert!(InterventionSpec::adapt_vis(0.5, 2.0, 1.5).is_err());
        assert!("sharpen".parse::<Method>().is_err());
    }

    #[test]
    fn unconventional_adaptive_warns() {
        assert!(InterventionSpec::adapt_vis(0.5, 2.0, 0.3).unwrap().warnings().is_empty());
        assert_eq!(InterventionSpec::adapt_vis(2.0, 0.5, 0.3).unwrap().warnings().len(), 2);
    }
}
