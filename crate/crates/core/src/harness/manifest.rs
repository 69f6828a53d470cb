//! Run manifests: the resolved configuration plus build identification.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Result;
use crate::io::write_json;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub git_describe: String,
    pub verb: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    /// Invariant checks run in `--check` mode, name and outcome.
    #[serde(default)]
    pub checks: Vec<(String, bool)>,
}

impl Manifest {
    pub fn new(verb: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            git_describe: env!("FLPSENSE_GIT_DESCRIBE").into(),
            verb: verb.into(),
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
