//! Experiment configuration shared by every subcommand, and the domain file
//! format.

use std::path::{Path, PathBuf};

use plunge_core::geometry::{Point, WellShapedDomain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::frame::Generator;
use crate::spectrum::Mode;
use crate::LabError;

/// One run's parameters. Fields left out of a config file take defaults;
/// command-line flags override the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "R")]
    pub r: Option<u64>,
    #[serde(rename = "R_list")]
    pub r_list: Vec<u64>,
    pub s: Option<f64>,
    pub s_list: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// Frequency region; `None` is the disk of radius 1/2 at the origin.
    pub domain: Option<PathBuf>,
    pub grid_n: Option<usize>,
    pub pad: usize,
    pub mode: Option<Mode>,
    pub trials: usize,
    pub generator: Generator,
    pub seed: u64,
    pub j_min: Option<i32>,
    pub m_box: Option<i64>,
    /// Interior energy grid floor.
    pub n_min: usize,
    pub c_cal: f64,
    /// Margins; `None` calibrates them at the probe (R = 4, ε = 1/4).
    pub a_margin: Option<f64>,
    pub c_bdry: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            r: None,
            r_list: Vec::new(),
            s: None,
            s_list: Vec::new(),
            epsilon: Vec::new(),
            domain: None,
            grid_n: None,
            pad: 4,
            mode: None,
            trials: 64,
            generator: Generator::Mixed,
            seed: 0,
            j_min: None,
            m_box: None,
            n_min: 1024,
            c_cal: 1.0,
            a_margin: None,
            c_bdry: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| LabError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Single R, or the first of the list, or `default`.
    pub fn radius(&self, default: u64) -> u64 {
        self.r.or_else(|| self.r_list.first().copied()).unwrap_or(default)
    }

    /// R list, or the single R, or `default`.
    pub fn radii(&self, default: &[u64]) -> Vec<u64> {
        if !self.r_list.is_empty() {
            self.r_list.clone()
        } else if let Some(r) = self.r {
            vec![r]
        } else {
            default.to_vec()
        }
    }

    pub fn gevrey(&self, default: f64) -> f64 {
        self.s.or_else(|| self.s_list.first().copied()).unwrap_or(default)
    }

    pub fn gevrey_list(&self, default: &[f64]) -> Vec<f64> {
        if !self.s_list.is_empty() {
            self.s_list.clone()
        } else if let Some(s) = self.s {
            vec![s]
        } else {
            default.to_vec()
        }
    }

    pub fn epsilons(&self, default: &[f64]) -> Vec<f64> {
        if self.epsilon.is_empty() {
            default.to_vec()
        } else {
            self.epsilon.clone()
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Validation(m));
        for r in self.radii(&[4]) {
            if r < 2 || !r.is_power_of_two() {
                return bad(format!("R = {r} must be a power of two ≥ 2"));
            }
        }
        for s in self.gevrey_list(&[2.0]) {
            if !(s > 1.0 && s.is_finite()) {
                return bad(format!("s = {s} must exceed 1"));
            }
        }
        for &e in &self.epsilon {
            if !(e > 0.0 && e < 0.5) {
                return bad(format!("ε = {e} outside (0, 1/2)"));
            }
        }
        if self.pad == 0 {
            return bad("pad must be positive".into());
        }
        if matches!(self.j_min, Some(j) if j >= 0) {
            return bad("j_min must be negative".into());
        }
        if !(self.c_cal > 0.0) {
            return bad("c_cal must be positive".into());
        }
        Ok(())
    }

    /// Region S from the domain file, or the default half disk.
    pub fn region(&self) -> Result<WellShapedDomain, LabError> {
        match &self.domain {
            None => Ok(WellShapedDomain::disk([0.0, 0.0], 0.5)?),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                parse_domain(&text)
            }
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Domain file contents.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2] },
    Polygon { vertices: Vec<Point> },
}

/// Parse failures are `DomainParse`; well-formed but invalid shapes are
/// geometry errors.
pub fn parse_domain(text: &str) -> Result<WellShapedDomain, LabError> {
    let spec: DomainSpec = serde_json::from_str(text).map_err(|e| LabError::DomainParse(e.to_string()))?;
    Ok(match spec {
        DomainSpec::Disk { center, radius } => WellShapedDomain::disk(center, radius)?,
        DomainSpec::Ellipse { center, semi_axes } => WellShapedDomain::ellipse(center, semi_axes)?,
        DomainSpec::Polygon { vertices } => WellShapedDomain::polygon(vertices)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_files() {
        let d = parse_domain(r#"{"shape": "disk", "center": [0, 0], "radius": 0.5}"#).unwrap();
        assert!((d.area() - std::f64::consts::PI / 4.0).abs() < 1e-15);
        let e = parse_domain(r#"{"shape": "disk", "center": [0, 0]"#).unwrap_err();
        assert_eq!(e.field(), "domain.parse");
        let e = parse_domain(r#"{"shape": "disk", "center": [0, 0], "radius": -1}"#).unwrap_err();
        assert_eq!(e.field(), "validation");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
    }
}
