// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use anyhow::{Context, Result};
use pfs_core::experiment::{AlgoParams, Algorithm, SweepConfig};
use pfs_core::{InstanceDescription, Point};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A single JSON document describing the instance and, optionally, the
/// algorithm knobs and a sweep grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub instance: InstanceDescription,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn params(&self) -> AlgoParams {
        let defaults = AlgoParams::default();
        AlgoParams {
            alpha: self.alpha.unwrap_or(defaults.alpha),
            c: self.c.unwrap_or(defaults.c),
            x1: self.x1.clone(),
        }
    }
}

/// SHA-256 of the compact JSON serialization; field order is fixed by the
/// struct definitions, so equal configs hash equally.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}
