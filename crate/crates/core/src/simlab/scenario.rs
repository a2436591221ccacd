//! JSON scenario files describing a model and a campaign.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simlab::campaign::{McConfig, Method};
use crate::simlab::model::{make_model, GridSpec, ModelKind, SpectralModel};

/// ```json
/// {
///   "model": {"kind": "dense", "params": {"kappa": 0.5}},
///   "grid": {"start_hz": 0.55, "stop_hz": 4.05, "step_hz": 0.1},
///   "p": 10, "K": 12, "M": 500, "seed": 1,
///   "methods": ["Raw", "HS", "QLa", "QLb", "HSP", "QLP"]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelKind,
    pub grid: GridSpec,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
}

fn default_methods() -> Vec<String> {
    ["Raw", "HS", "QLa", "QLb", "HSP", "QLP", "QLa-est", "QLb-est", "QLP-est"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build_model(&self) -> Result<SpectralModel> {
        make_model(&self.model, self.p, &self.grid.frequencies()?)
    }

    /// Campaign configuration; `seed` overrides the file's seed.
    pub fn config(&self, seed: Option<u64>) -> Result<McConfig> {
        let seed = seed
            .or(self.seed)
            .ok_or_else(|| Error::Config("no seed given".into()))?;
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>>>()?;
        Ok(McConfig {
            k: self.k,
            m: self.m,
            seed,
            methods,
        })
    }
}
