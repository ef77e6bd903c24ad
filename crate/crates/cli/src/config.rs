//! Run configuration: JSON file or command-line flags, resolved to the same
//! [`RunConfig`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use eulerspec_core::{DomainSpec, Tolerances};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_WINDOW: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlowSpec {
    Catalog {
        id: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// A sampled stream function in the `grid v1` text format.
    Grid { path: PathBuf, domain: DomainSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    #[default]
    Off,
    Structural,
    Full,
}

/// Discretization sizes for each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Resolution {
    /// Fixed-point scan cells per axis.
    pub scan: usize,
    /// Levels per axis for family discovery.
    pub index: usize,
    /// Chebyshev period samples per family.
    pub period_samples: usize,
    /// Coarse classification grid for the aperiodic-area test; refined once.
    pub hypothesis: usize,
    /// Operator grid cells per axis.
    pub operator_grid: usize,
    /// Co-area reference grid cells per axis.
    pub coarea_grid: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { scan: 64, index: 64, period_samples: 24, hypothesis: 64, operator_grid: 48, coarea_grid: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub flow: FlowSpec,
    /// Overrides of [`Tolerances`] fields by name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub validation: Validation,
    /// Not part of the config hash: where results go does not change them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resolution: Resolution,
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

impl RunConfig {
    pub fn catalog(id: &str) -> Self {
        Self {
            flow: FlowSpec::Catalog { id: id.into(), params: BTreeMap::new() },
            tolerances: BTreeMap::new(),
            window: DEFAULT_WINDOW,
            validation: Validation::Off,
            output_dir: None,
            seed: 0,
            resolution: Resolution::default(),
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(CliError::Config(format!("window must be positive and finite, got {}", self.window)));
        }
        self.resolved_tolerances()?;
        Ok(())
    }

    /// Defaults with the overrides applied; unknown names are rejected.
    pub fn resolved_tolerances(&self) -> CliResult<Tolerances> {
        let mut v = serde_json::to_value(Tolerances::default())?;
        let obj = v.as_object_mut().expect("tolerances serialize to an object");
        for (k, x) in &self.tolerances {
            if !obj.contains_key(k) {
                return Err(CliError::Config(format!("unknown tolerance `{k}`")));
            }
            if !(x.is_finite() && *x > 0.0) {
                return Err(CliError::Config(format!("tolerance `{k}` must be positive and finite")));
            }
            obj.insert(k.clone(), serde_json::json!(x));
        }
        Ok(serde_json::from_value(v)?)
    }

    /// SHA-256 of the canonical JSON of everything but the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn flow_name(&self) -> String {
        match &self.flow {
            FlowSpec::Catalog { id, .. } => id.clone(),
            FlowSpec::Grid { path, .. } => path.display().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let c = RunConfig::from_json(r#"{"flow": {"id": "couette", "params": {"L": 3.0}}}"#).unwrap();
        assert_eq!(c.window, DEFAULT_WINDOW);
        assert_eq!(c.validation, Validation::Off);
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let g = RunConfig::from_json(r#"{"flow": {"path": "f.grid", "domain": {"kind": "disk", "radius": 1.0}}}"#).unwrap();
        assert!(matches!(g.flow, FlowSpec::Grid { .. }));
    }

    #[test]
    fn overrides_change_the_hash() {
        let a = RunConfig::catalog("rigid");
        let mut b = a.clone();
        b.tolerances.insert("period_rtol".into(), 1e-12);
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::catalog("rigid");
        c.tolerances.insert("nope".into(), 1.0);
        assert!(c.validate().is_err());
        let mut c = RunConfig::catalog("rigid");
        c.window = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::catalog("rigid");
        c.tolerances.insert("newton_tol".into(), 1e-6);
        assert_eq!(c.resolved_tolerances().unwrap().newton_tol, 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn any_override_changes_the_hash(idx in 0usize..12, exp in -14.0f64..2.0) {
            let names: Vec<String> = serde_json::to_value(Tolerances::default())
                .unwrap()
                .as_object()
                .unwrap()
                .keys()
                .cloned()
                .collect();
            let name = &names[idx % names.len()];
            let base = RunConfig::catalog("rigid");
            let mut c = base.clone();
            c.tolerances.insert(name.clone(), 10f64.powf(exp));
            proptest::prop_assert!(c.validate().is_ok());
            proptest::prop_assert_ne!(base.hash(), c.hash());
        }
    }
}
